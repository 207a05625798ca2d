#include "fesid/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unsupported/Eigen/MatrixFunctions>
#include <Eigen/Dense>

#include "fesid/error.hpp"

namespace fesid::model {
namespace {

int degree_of(const std::vector<double>& c) noexcept {
    for (int i = static_cast<int>(c.size()) - 1; i > 0; --i) {
        if (c[static_cast<std::size_t>(i)] != 0.0) return i;
    }
    return 0;
}

// Discrete state-space realization; matrices stored row-major in small vectors.
struct DiscreteSystem {
    int n = 0;
    std::vector<double> ad;  // n*n
    std::vector<double> bd;  // n
    std::vector<double> c;   // n
    double d = 0.0;
};

DiscreteSystem discretize_zoh(const RationalTF& tf, double dt) {
    const int n = tf.den_degree();
    const int m = tf.num_degree();
    if (m > n) {
        throw Error(ErrorKind::configuration, "cannot simulate an improper transfer function");
    }
    DiscreteSystem sys;
    sys.n = n;
    const double lead = tf.den()[static_cast<std::size_t>(n)];
    auto num_at = [&](int i) {
        return i < static_cast<int>(tf.num().size()) ? tf.num()[static_cast<std::size_t>(i)] / lead : 0.0;
    };
    sys.d = (m == n) ? num_at(n) : 0.0;
    if (n == 0) return sys;

    std::vector<double> alpha(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) alpha[static_cast<std::size_t>(i)] = tf.den()[static_cast<std::size_t>(i)] / lead;

    // Controllable canonical form with states rescaled by powers of the
    // natural frequency so A*dt stays well conditioned for expm.
    const double w0 = alpha[0] != 0.0 ? std::pow(std::abs(alpha[0]), 1.0 / n) : 1.0;
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (int i = 0; i + 1 < n; ++i) aug(i, i + 1) = w0;  // scaled superdiagonal
    // Row n-1 of D A D^-1 with D = diag(w0^-i): -alpha_j * w0^(j-(n-1)).
    for (int j = 0; j < n; ++j) aug(n - 1, j) = -alpha[static_cast<std::size_t>(j)] * std::pow(w0, j - (n - 1));
    aug(n - 1, n) = std::pow(w0, -(n - 1));  // D B
    aug *= dt;
    const Eigen::MatrixXd phi = aug.exp();

    sys.ad.resize(static_cast<std::size_t>(n * n));
    sys.bd.resize(static_cast<std::size_t>(n));
    sys.c.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) sys.ad[static_cast<std::size_t>(i * n + j)] = phi(i, j);
        sys.bd[static_cast<std::size_t>(i)] = phi(i, n);
        // C D^-1 with the strictly proper remainder numerator.
        sys.c[static_cast<std::size_t>(i)] = (num_at(i) - sys.d * alpha[static_cast<std::size_t>(i)]) * std::pow(w0, i);
    }
    return sys;
}

}  // namespace

void CircuitParams::validate() const {
    if (!(r1 > 0.0) || !(r2 > 0.0) || !(r3 > 0.0)) {
        throw Error(ErrorKind::argument, "circuit resistances must be positive");
    }
}

CircuitSignals circuit_reconstruct(const TimeSeries& v1, const TimeSeries& v3, const CircuitParams& params) {
    params.validate();
    require_aligned(v1, v3, "circuit_reconstruct");
    const double divider = (params.r1 + params.r2) / params.r1;
    std::vector<double> v_app(v1.size());
    std::vector<double> i_flo(v1.size());
    for (std::size_t k = 0; k < v1.size(); ++k) {
        v_app[k] = v1[k] * divider - v3[k];
        i_flo[k] = v3[k] / params.r3;
    }
    return {TimeSeries(v1.t0(), v1.dt(), std::move(v_app), Unit::volt),
            TimeSeries(v1.t0(), v1.dt(), std::move(i_flo), Unit::ampere)};
}

RationalTF::RationalTF(std::vector<double> num, std::vector<double> den)
    : num_(std::move(num)), den_(std::move(den)) {
    if (num_.empty()) num_.push_back(0.0);
    if (den_.empty() || den_[0] != 1.0) {
        throw Error(ErrorKind::argument, "transfer function denominator must start with 1");
    }
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(num_.begin(), num_.end(), finite) || !std::all_of(den_.begin(), den_.end(), finite)) {
        throw Error(ErrorKind::argument, "transfer function coefficients must be finite");
    }
    if (den_degree() < num_degree() - 1) {
        throw Error(ErrorKind::argument, "numerator degree exceeds denominator degree by more than one");
    }
}

RationalTF RationalTF::first_order_lag(double c1, double d0) { return RationalTF({d0}, {1.0, c1}); }

RationalTF RationalTF::band_pass(double a2, double a1, double b1) { return RationalTF({0.0, b1}, {1.0, a1, a2}); }

int RationalTF::num_degree() const noexcept { return degree_of(num_); }
int RationalTF::den_degree() const noexcept { return degree_of(den_); }

std::complex<double> eval_freq(const RationalTF& tf, double f_hz) {
    if (!(f_hz >= 0.0)) {
        throw Error(ErrorKind::argument, "evaluation frequency must be non-negative");
    }
    const std::complex<double> s(0.0, 2.0 * std::numbers::pi * f_hz);
    auto horner = [&s](const std::vector<double>& c, double& scale) {
        std::complex<double> acc(0.0, 0.0);
        scale = 0.0;
        double sp = 1.0;
        for (std::size_t i = 0; i < c.size(); ++i, sp *= std::abs(s)) scale += std::abs(c[i]) * sp;
        for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * s + *it;
        return acc;
    };
    double den_scale = 0.0;
    double num_scale = 0.0;
    const auto den = horner(tf.den(), den_scale);
    const auto num = horner(tf.num(), num_scale);
    if (std::abs(den) <= 1e-14 * den_scale) {
        throw Error(ErrorKind::domain, "transfer function has a pole at f = " + std::to_string(f_hz) + " Hz");
    }
    return num / den;
}

double peak_gain_frequency(const RationalTF& tf, double f_lo, double f_hi, int sweep_points) {
    if (!(f_lo > 0.0) || !(f_hi > f_lo) || sweep_points < 3) {
        throw Error(ErrorKind::argument, "peak search needs 0 < f_lo < f_hi and >= 3 sweep points");
    }
    const double l0 = std::log(f_lo);
    const double l1 = std::log(f_hi);
    const double step = (l1 - l0) / (sweep_points - 1);
    auto gain_at = [&tf](double lf) { return std::abs(eval_freq(tf, std::exp(lf))); };
    int best = 0;
    double best_gain = -1.0;
    for (int i = 0; i < sweep_points; ++i) {
        const double g = gain_at(l0 + i * step);
        if (g > best_gain) {
            best_gain = g;
            best = i;
        }
    }
    double a = l0 + std::max(0, best - 1) * step;
    double b = l0 + std::min(sweep_points - 1, best + 1) * step;
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double gc = gain_at(c);
    double gd = gain_at(d);
    for (int it = 0; it < 200 && (b - a) > 1e-13; ++it) {
        if (gc > gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = gain_at(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = gain_at(d);
        }
    }
    return std::exp(0.5 * (a + b));
}

double band_pass_resonance_hz(double a2) noexcept { return 1.0 / (2.0 * std::numbers::pi * std::sqrt(a2)); }

std::string to_string(Polarity p) { return p == Polarity::positive ? "positive" : "negative"; }

TimeSeries apply_threshold(const TimeSeries& i_flo, double i_th, Polarity polarity) {
    if (!(i_th >= 0.0)) {
        throw Error(ErrorKind::argument, "threshold current must be non-negative");
    }
    std::vector<double> out(i_flo.size(), 0.0);
    for (std::size_t k = 0; k < i_flo.size(); ++k) {
        const double i = i_flo[k];
        if (polarity == Polarity::positive) {
            if (i > i_th) out[k] = i - i_th;
        } else if (i < -i_th) {
            out[k] = -i - i_th;
        }
    }
    return TimeSeries(i_flo.t0(), i_flo.dt(), std::move(out), Unit::ampere);
}

TimeSeries delay_samples(const TimeSeries& ts, std::size_t samples) {
    if (samples == 0) return ts;
    std::vector<double> out(ts.size(), 0.0);
    for (std::size_t k = samples; k < ts.size(); ++k) out[k] = ts[k - samples];
    return ts.with_samples(std::move(out));
}

TimeSeries simulate_lti(const RationalTF& tf, const TimeSeries& input, double dead_time) {
    return simulate_lti(tf, input, dead_time, input.unit());
}

TimeSeries simulate_lti(const RationalTF& tf, const TimeSeries& input, double dead_time, Unit output_unit) {
    if (!(dead_time >= 0.0)) {
        throw Error(ErrorKind::argument, "dead time must be non-negative");
    }
    const DiscreteSystem sys = discretize_zoh(tf, input.dt());
    const auto delay = static_cast<std::size_t>(std::llround(dead_time / input.dt()));
    const std::size_t n = input.size();
    std::vector<double> y(n, 0.0);
    const auto order = static_cast<std::size_t>(sys.n);
    std::vector<double> x(order, 0.0);
    std::vector<double> next(order, 0.0);
    for (std::size_t k = delay; k < n; ++k) {
        const double u = input[k - delay];
        double yk = sys.d * u;
        for (std::size_t i = 0; i < order; ++i) yk += sys.c[i] * x[i];
        y[k] = yk;
        for (std::size_t i = 0; i < order; ++i) {
            double acc = sys.bd[i] * u;
            for (std::size_t j = 0; j < order; ++j) acc += sys.ad[i * order + j] * x[j];
            next[i] = acc;
        }
        x.swap(next);
    }
    return TimeSeries(input.t0(), input.dt(), std::move(y), output_unit);
}

void MuscleChannel::validate() const {
    if (!(i_th >= 0.0) || !(t_d >= 0.0) || !(c1 > 0.0) || !(d0 >= 0.0)) {
        throw Error(ErrorKind::argument, "muscle channel needs i_th >= 0, t_d >= 0, c1 > 0, d0 >= 0");
    }
}

void MuscleModel::validate() const {
    pos.validate();
    neg.validate();
    if (output_sign_neg != 1 && output_sign_neg != -1) {
        throw Error(ErrorKind::argument, "output_sign_neg must be +1 or -1");
    }
}

TimeSeries channel_force(const MuscleChannel& channel, const TimeSeries& i_flo, Polarity polarity) {
    channel.validate();
    return simulate_lti(channel.lag(), apply_threshold(i_flo, channel.i_th, polarity), channel.t_d, Unit::newton);
}

TimeSeries predict_force(const MuscleModel& model, const TimeSeries& i_flo) {
    model.validate();
    const TimeSeries pos = channel_force(model.pos, i_flo, Polarity::positive);
    const TimeSeries neg = channel_force(model.neg, i_flo, Polarity::negative);
    std::vector<double> out(i_flo.size());
    const double sign = static_cast<double>(model.output_sign_neg);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = pos[k] + sign * neg[k];
    return TimeSeries(i_flo.t0(), i_flo.dt(), std::move(out), Unit::newton);
}

std::vector<std::string> prediction_warnings(const MuscleModel& model, double dt) {
    std::vector<std::string> notes;
    for (Polarity p : {Polarity::positive, Polarity::negative}) {
        const double td = model.channel(p).t_d;
        if (td > 0.0 && td < dt) {
            notes.push_back(to_string(p) + " dead time " + std::to_string(td) + " s is shorter than dt " +
                            std::to_string(dt) + " s");
        }
        const double rounded = std::round(td / dt) * dt;
        if (std::abs(rounded - td) > 0.25 * dt) {
            notes.push_back(to_string(p) + " dead time rounds to " + std::to_string(rounded) + " s at this dt");
        }
    }
    return notes;
}

}  // namespace fesid::model
