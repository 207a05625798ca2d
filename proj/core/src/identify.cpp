#include "fesid/identify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "fesid/error.hpp"

namespace fesid::identify {

using model::Polarity;

namespace {

struct LeastSquares {
    Eigen::VectorXd solution;
    double condition;   // of A^T A
    double rcond;       // sigma_min / sigma_max of the column-scaled design
};

// Column-equilibrated SVD solve.
LeastSquares solve_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    Eigen::VectorXd scale(a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        const double norm = a.col(j).norm();
        scale(j) = norm > 0.0 ? 1.0 / norm : 1.0;
    }
    const Eigen::MatrixXd scaled = a * scale.asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    LeastSquares out;
    out.rcond = smax > 0.0 ? smin / smax : 0.0;
    out.condition = out.rcond > 0.0 ? 1.0 / (out.rcond * out.rcond) : std::numeric_limits<double>::infinity();
    out.solution = scale.asDiagonal() * svd.solve(b);
    return out;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
}

TimeSeries scaled(const TimeSeries& ts, double factor) {
    std::vector<double> out(ts.samples().begin(), ts.samples().end());
    for (double& v : out) v *= factor;
    return ts.with_samples(std::move(out));
}

}  // namespace

double FitReport::param(std::string_view name) const {
    for (const auto& [key, value] : params) {
        if (key == name) return value;
    }
    throw Error(ErrorKind::argument, "fit report has no parameter '" + std::string(name) + "'");
}

bool FitReport::has_flag(std::string_view flag) const {
    return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

RationalFit fit_rational_freq(const spectral::FrequencyResponse& fr, int num_degree, int den_degree,
                              int num_lowest_power, const RationalFitOptions& options) {
    if (den_degree < 0 || num_degree < 0 || num_lowest_power < 0 || num_lowest_power > num_degree) {
        throw Error(ErrorKind::argument, "rational fit degrees must satisfy 0 <= num_lowest_power <= num_degree");
    }
    if (num_degree > den_degree + 1) {
        throw Error(ErrorKind::argument, "numerator degree may exceed denominator degree by at most one");
    }
    std::vector<spectral::ResponsePoint> pts;
    for (const auto& p : fr.points) {
        if (p.f_hz >= options.f_min && p.f_hz <= options.f_max && p.f_hz > 0.0) pts.push_back(p);
    }
    const int n_den = den_degree;
    const int n_num = num_degree - num_lowest_power + 1;
    const int n_par = n_den + n_num;
    if (static_cast<int>(pts.size()) < 3 * n_par) {
        throw Error(ErrorKind::argument, "rational fit needs at least " + std::to_string(3 * n_par) +
                                             " points, got " + std::to_string(pts.size()));
    }

    // Work in s / w_ref so powers of s stay O(1).
    double log_sum = 0.0;
    for (const auto& p : pts) log_sum += std::log(2.0 * std::numbers::pi * p.f_hz);
    const double w_ref = std::exp(log_sum / static_cast<double>(pts.size()));

    const auto m = static_cast<Eigen::Index>(pts.size());
    std::vector<std::complex<double>> s_norm(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
        s_norm[k] = {0.0, 2.0 * std::numbers::pi * pts[k].f_hz / w_ref};
    }
    auto power = [](std::complex<double> s, int e) {
        std::complex<double> r(1.0, 0.0);
        for (int i = 0; i < e; ++i) r *= s;
        return r;
    };

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(n_par);
    std::vector<double> weight(pts.size(), 1.0);
    LeastSquares ls{};
    int iterations = 0;
    bool converged = false;
    for (int pass = 0; pass <= options.max_iterations; ++pass) {
        Eigen::MatrixXd a(2 * m, n_par);
        Eigen::VectorXd b(2 * m);
        for (Eigen::Index k = 0; k < m; ++k) {
            const auto uk = static_cast<std::size_t>(k);
            const auto h = pts[uk].gain;
            const double w = weight[uk];
            for (int i = 1; i <= n_den; ++i) {
                const auto v = power(s_norm[uk], i) * h * w;
                a(2 * k, i - 1) = v.real();
                a(2 * k + 1, i - 1) = v.imag();
            }
            for (int j = 0; j < n_num; ++j) {
                const auto v = -power(s_norm[uk], num_lowest_power + j) * w;
                a(2 * k, n_den + j) = v.real();
                a(2 * k + 1, n_den + j) = v.imag();
            }
            b(2 * k) = -h.real() * w;
            b(2 * k + 1) = -h.imag() * w;
        }
        ls = solve_least_squares(a, b);
        if (!(ls.rcond > 1e-13)) {
            throw Error(ErrorKind::degenerate, "rational fit normal equations are rank deficient (condition " +
                                                   std::to_string(ls.condition) + ")");
        }
        const double change = (ls.solution - theta).norm() / std::max(ls.solution.norm(), 1e-300);
        theta = ls.solution;
        iterations = pass;
        if (pass > 0 && change < options.tolerance) {
            converged = true;
            break;
        }
        if (n_den == 0) {
            converged = true;
            break;  // no denominator to reweight by
        }
        for (std::size_t k = 0; k < pts.size(); ++k) {
            std::complex<double> d(1.0, 0.0);
            for (int i = 1; i <= n_den; ++i) d += theta(i - 1) * power(s_norm[k], i);
            weight[k] = 1.0 / std::abs(d);
        }
    }

    std::vector<double> den(static_cast<std::size_t>(den_degree) + 1, 0.0);
    std::vector<double> num(static_cast<std::size_t>(num_degree) + 1, 0.0);
    den[0] = 1.0;
    for (int i = 1; i <= n_den; ++i) den[static_cast<std::size_t>(i)] = theta(i - 1) / std::pow(w_ref, i);
    for (int j = 0; j < n_num; ++j) {
        const int e = num_lowest_power + j;
        num[static_cast<std::size_t>(e)] = theta(n_den + j) / std::pow(w_ref, e);
    }
    RationalFit out{model::RationalTF(num, den), {}};

    double sq = 0.0;
    for (const auto& p : pts) sq += std::norm(p.gain - model::eval_freq(out.tf, p.f_hz));
    out.report.method = "levy_sk";
    for (int i = 1; i <= n_den; ++i) out.report.params.emplace_back("a" + std::to_string(i), den[static_cast<std::size_t>(i)]);
    for (int j = 0; j < n_num; ++j) {
        const int e = num_lowest_power + j;
        out.report.params.emplace_back("b" + std::to_string(e), num[static_cast<std::size_t>(e)]);
    }
    out.report.residual_rms = std::sqrt(sq / static_cast<double>(pts.size()));
    out.report.n_points = pts.size();
    out.report.condition_estimate = ls.condition;
    out.report.params.emplace_back("iterations", static_cast<double>(iterations));
    if (!converged) out.report.flags.emplace_back("not_converged");
    return out;
}

FirstOrderFit fit_first_order_time(const TimeSeries& drive, const TimeSeries& force, double dead_time) {
    require_aligned(drive, force, "fit_first_order_time");
    if (!(dead_time >= 0.0)) {
        throw Error(ErrorKind::argument, "dead time must be non-negative");
    }
    const double dt = drive.dt();
    const auto shift = static_cast<std::size_t>(std::llround(dead_time / dt));
    const TimeSeries u = model::delay_samples(drive, shift);
    const auto f = force.samples();
    const std::size_t n = u.size();
    if (n < 4) {
        throw Error(ErrorKind::unidentifiable, "first-order fit needs at least four samples");
    }

    FirstOrderFit out{std::numeric_limits<double>::quiet_NaN(), 0.0, {}};
    out.report.method = "arx_ols";
    out.report.n_points = n - 1;

    const auto [umin, umax] = std::minmax_element(u.samples().begin(), u.samples().end());
    const double uscale = std::max(std::abs(*umin), std::abs(*umax));
    const bool force_zero = std::all_of(f.begin(), f.end(), [](double v) { return v == 0.0; });
    if (force_zero && uscale > 0.0) {
        out.d0 = 0.0;
        out.report.params = {{"alpha", std::numeric_limits<double>::quiet_NaN()}, {"beta", 0.0},
                             {"c1", out.c1}, {"d0", 0.0}, {"dead_time", static_cast<double>(shift) * dt}};
        out.report.flags = {"force_identically_zero", "alpha_degenerate"};
        out.report.condition_estimate = std::numeric_limits<double>::infinity();
        return out;
    }
    if (uscale == 0.0 || (*umax - *umin) <= 1e-12 * uscale) {
        throw Error(ErrorKind::unidentifiable, "drive is near-constant; lag parameters are unidentifiable");
    }

    Eigen::MatrixXd a(static_cast<Eigen::Index>(n - 1), 2);
    Eigen::VectorXd b(static_cast<Eigen::Index>(n - 1));
    for (std::size_t k = 1; k < n; ++k) {
        const auto r = static_cast<Eigen::Index>(k - 1);
        a(r, 0) = f[k - 1];
        a(r, 1) = u[k - 1];
        b(r) = f[k];
    }
    const LeastSquares ls = solve_least_squares(a, b);
    out.report.condition_estimate = ls.condition;
    if (!(ls.rcond > 1e-10)) {
        throw Error(ErrorKind::unidentifiable, "first-order regressors are rank deficient (condition " +
                                                   std::to_string(ls.condition) + ")");
    }
    const double alpha = ls.solution(0);
    const double beta = ls.solution(1);
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(ErrorKind::nonphysical,
                    "fitted pole alpha = " + std::to_string(alpha) + " lies outside (0, 1)");
    }
    out.c1 = -dt / std::log(alpha);
    out.d0 = beta / (1.0 - alpha);

    double sq = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        const double e = f[k] - alpha * f[k - 1] - beta * u[k - 1];
        sq += e * e;
    }
    out.report.residual_rms = std::sqrt(sq / static_cast<double>(n - 1));
    out.report.params = {{"alpha", alpha}, {"beta", beta}, {"c1", out.c1}, {"d0", out.d0},
                         {"dead_time", static_cast<double>(shift) * dt}};
    return out;
}

namespace {

TimeSeries slice(const TimeSeries& ts, std::size_t begin, std::size_t end) {
    const auto s = ts.samples();
    return TimeSeries(ts.time_at(begin), ts.dt(), std::vector<double>(s.begin() + begin, s.begin() + end), ts.unit());
}

TimeSeries prefilter(const TimeSeries& ts, double cutoff_hz) {
    return cutoff_hz > 0.0 ? signals::lowpass(ts, cutoff_hz) : ts;
}

}  // namespace

FirstOrderFit fit_first_order_filtered(const TimeSeries& drive, const TimeSeries& force, double dead_time,
                                       const LagPreprocessing& options) {
    if (drive.size() != force.size() || drive.dt() != force.dt()) {
        throw Error(ErrorKind::argument, "drive and force must share length and sample interval");
    }
    if (options.decimation_factor < 1) throw Error(ErrorKind::argument, "decimation factor must be >= 1");
    if (!(dead_time >= 0.0)) throw Error(ErrorKind::argument, "dead time must be >= 0");
    const auto shift = static_cast<std::size_t>(std::llround(dead_time / drive.dt()));
    const TimeSeries d =
        prefilter(signals::decimate(model::delay_samples(drive, shift), options.decimation_factor), options.prefilter_hz);
    const TimeSeries f = prefilter(signals::decimate(force, options.decimation_factor), options.prefilter_hz);
    const auto trim = static_cast<std::size_t>(std::llround(options.trim_s / d.dt()));
    if (d.size() < 2 * trim + 4) throw Error(ErrorKind::argument, "record is too short for the lag fit");
    FirstOrderFit fit = fit_first_order_time(slice(d, trim, d.size() - trim), slice(f, trim, f.size() - trim), 0.0);
    fit.report.params.back().second = dead_time;
    return fit;
}

std::optional<std::size_t> detect_onset(std::span<const double> signal, const OnsetOptions& options) {
    const std::size_t nb = options.baseline_samples;
    if (nb < 2 || signal.size() <= nb) return std::nullopt;
    double mean = 0.0;
    for (std::size_t k = 0; k < nb; ++k) mean += signal[k];
    mean /= static_cast<double>(nb);
    double var = 0.0;
    for (std::size_t k = 0; k < nb; ++k) var += (signal[k] - mean) * (signal[k] - mean);
    const double sd = std::sqrt(var / static_cast<double>(nb - 1));
    const double excursion = *std::max_element(signal.begin(), signal.end()) - mean;
    const double margin = std::max(options.k_sigma * sd, options.relative_floor * std::max(excursion, 0.0));
    const double level = mean + margin;
    const std::size_t hold = std::max<std::size_t>(1, options.hold);
    std::size_t run = 0;
    for (std::size_t k = nb; k < signal.size(); ++k) {
        run = signal[k] > level ? run + 1 : 0;
        if (run >= hold) return k + 1 - hold;
    }
    return std::nullopt;
}

DeadTimeEstimate estimate_dead_time(std::span<const TrialRecord> trials, const OnsetOptions& options) {
    if (trials.empty()) {
        throw Error(ErrorKind::argument, "dead-time estimation needs at least one trial");
    }
    DeadTimeEstimate out{0.0, {}};
    for (std::size_t t = 0; t < trials.size(); ++t) {
        const auto& trial = trials[t];
        require_aligned(trial.current, trial.force, "estimate_dead_time");
        if (trial.current.size() <= options.baseline_samples) {
            throw Error(ErrorKind::argument, "trial " + std::to_string(t) + " is shorter than its baseline");
        }
        const auto i_on = detect_onset(trial.current.samples(), options);
        if (!i_on) throw Error(ErrorKind::onset_detection, "no current onset found in trial " + std::to_string(t));
        const auto f_on = detect_onset(trial.force.samples(), options);
        if (!f_on) throw Error(ErrorKind::onset_detection, "no force onset found in trial " + std::to_string(t));
        const double td = (static_cast<double>(*f_on) - static_cast<double>(*i_on)) * trial.current.dt();
        out.per_trial.push_back(td);
    }
    out.t_d = std::accumulate(out.per_trial.begin(), out.per_trial.end(), 0.0) /
              static_cast<double>(out.per_trial.size());
    return out;
}

void StaircaseTrial::validate() const {
    const std::size_t n = level_currents.size();
    if (level_voltages.size() != n || level_peak_forces.size() != n) {
        throw Error(ErrorKind::argument, "staircase trial lists must have equal length");
    }
    if (!(noise_floor >= 0.0)) {
        throw Error(ErrorKind::argument, "staircase noise floor must be non-negative");
    }
}

ThresholdEstimate detect_threshold_current(const StaircaseTrial& trial) {
    trial.validate();
    const std::size_t n = trial.level_currents.size();
    if (n < 2) {
        throw Error(ErrorKind::argument, "threshold detection needs at least two staircase levels");
    }
    for (std::size_t k = 1; k < n; ++k) {
        if (trial.level_voltages[k] < trial.level_voltages[k - 1]) {
            throw Error(ErrorKind::argument, "staircase levels must be ordered by increasing amplitude");
        }
    }
    const double peak = *std::max_element(trial.level_peak_forces.begin(), trial.level_peak_forces.end());
    const double level = std::max(3.0 * trial.noise_floor, 1e-6 * std::max(peak, 0.0));
    std::optional<std::size_t> first;
    for (std::size_t k = 0; k < n; ++k) {
        if (trial.level_peak_forces[k] > level) {
            first = k;
            break;
        }
    }
    if (!first) {
        throw Error(ErrorKind::threshold_not_reached, "no staircase level produced force above 3x the noise floor");
    }
    ThresholdEstimate out{};
    out.report.method = "staircase_midpoint";
    out.report.n_points = n;
    out.report.condition_estimate = 1.0;
    if (*first == 0) {
        out.i_th = trial.level_currents[0];
        out.lower_bound_unknown = true;
        out.report.flags.emplace_back("lower_bound_unknown");
        out.report.params = {{"i_th", out.i_th}, {"resolution", std::numeric_limits<double>::quiet_NaN()},
                             {"response_level", 0.0}};
        return out;
    }
    const double lo = trial.level_currents[*first - 1];
    const double hi = trial.level_currents[*first];
    out.i_th = 0.5 * (lo + hi);
    out.lower_bound_unknown = false;
    out.report.residual_rms = 0.5 * std::abs(hi - lo);
    out.report.params = {{"i_th", out.i_th}, {"resolution", std::abs(hi - lo)},
                         {"response_level", static_cast<double>(*first)}};
    return out;
}

StaircaseTrial extract_staircase_trial(const TrialRecord& record, const signals::StaircaseSchedule& schedule,
                                       Polarity polarity, int analysis_decimation) {
    require_aligned(record.current, record.force, "extract_staircase_trial");
    if (schedule.n_levels < 1) {
        throw Error(ErrorKind::argument, "staircase schedule has no levels");
    }
    const double sign = polarity == Polarity::positive ? 1.0 : -1.0;
    const TimeSeries force = signals::decimate(record.force, analysis_decimation);
    const double dt_raw = record.current.dt();
    const double dt_f = force.dt();

    auto index = [](double t, double dt, std::size_t size) {
        return std::min(size, static_cast<std::size_t>(std::llround(t / dt)));
    };

    StaircaseTrial trial;
    std::vector<double> tail_means;
    std::vector<double> tail_devs;
    std::vector<std::pair<std::size_t, std::size_t>> peak_windows;
    for (int k = 0; k < schedule.n_levels; ++k) {
        const double t_block = k * schedule.block_duration();
        trial.level_voltages.push_back(schedule.level_amplitude(k));

        // Plateau current: median of on-window samples above half the peak.
        const std::size_t c0 = index(t_block, dt_raw, record.current.size());
        const std::size_t c1 = index(t_block + schedule.on_time, dt_raw, record.current.size());
        double cmax = 0.0;
        for (std::size_t i = c0; i < c1; ++i) cmax = std::max(cmax, sign * record.current[i]);
        std::vector<double> plateau;
        for (std::size_t i = c0; i < c1; ++i) {
            if (sign * record.current[i] > 0.5 * cmax) plateau.push_back(sign * record.current[i]);
        }
        trial.level_currents.push_back(plateau.empty() ? 0.0 : median(std::move(plateau)));

        // Peak search from a short guard after block onset (clear of filter
        // edge transients) to 60% of the off time; quiet tail at 70-90% of
        // the off time, clear of the next block's onset.
        const double guard = std::min(0.1, 0.1 * schedule.on_time);
        const std::size_t f0 = index(t_block + guard, dt_f, force.size());
        const std::size_t f1 = index(t_block + schedule.on_time + 0.6 * schedule.off_time, dt_f, force.size());
        const std::size_t q0 = index(t_block + schedule.on_time + 0.7 * schedule.off_time, dt_f, force.size());
        const std::size_t q1 = index(t_block + schedule.on_time + 0.9 * schedule.off_time, dt_f, force.size());
        peak_windows.emplace_back(f0, f1);
        if (q1 > q0 + 1) {
            double mean = 0.0;
            for (std::size_t i = q0; i < q1; ++i) mean += force[i];
            mean /= static_cast<double>(q1 - q0);
            double dev = 0.0;
            for (std::size_t i = q0; i < q1; ++i) dev = std::max(dev, std::abs(force[i] - mean));
            tail_means.push_back(mean);
            tail_devs.push_back(dev);
        }
    }
    if (tail_means.empty()) {
        throw Error(ErrorKind::argument, "staircase off-time too short to estimate the noise floor");
    }
    const double baseline = median(tail_means);
    trial.noise_floor = median(tail_devs);
    for (const auto& [f0, f1] : peak_windows) {
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t i = f0; i < f1; ++i) peak = std::max(peak, force[i] - baseline);
        trial.level_peak_forces.push_back(std::isfinite(peak) ? peak : 0.0);
    }
    return trial;
}

namespace {

std::string polarity_label(Polarity p) { return p == Polarity::positive ? "positive" : "negative"; }

[[noreturn]] void rethrow_in_stage(const std::string& stage, const Error& e) {
    throw Error(e.kind(), stage + ": " + e.what());
}

model::MuscleChannel identify_channel(const PolarityRecordings& rec, Polarity polarity,
                                      const IdentificationDataset& options, double force_sign,
                                      std::vector<StageReport>& stages) {
    const int factor = options.decimation_factor;
    const std::string label = polarity_label(polarity);
    const double current_sign = polarity == Polarity::positive ? 1.0 : -1.0;
    model::MuscleChannel channel;

    const std::string st_stage = label + " staircase";
    try {
        double sum = 0.0;
        for (std::size_t t = 0; t < rec.staircase.size(); ++t) {
            const auto& sc = rec.staircase[t];
            const TrialRecord oriented{sc.record.current, scaled(sc.record.force, force_sign)};
            const StaircaseTrial trial = extract_staircase_trial(oriented, sc.schedule, polarity, factor);
            ThresholdEstimate est = detect_threshold_current(trial);
            sum += est.i_th;
            est.report.params.emplace_back("noise_floor", trial.noise_floor);
            stages.push_back({st_stage + (rec.staircase.size() > 1 ? " " + std::to_string(t) : ""), est.report});
        }
        channel.i_th = sum / static_cast<double>(rec.staircase.size());
    } catch (const Error& e) {
        rethrow_in_stage(st_stage, e);
    }

    const std::string dt_stage = label + " dead time";
    try {
        std::vector<TrialRecord> oriented;
        for (const auto& trial : rec.steps) {
            oriented.push_back({scaled(trial.current, current_sign), scaled(trial.force, force_sign)});
        }
        OnsetOptions onset;
        onset.baseline_samples = std::max<std::size_t>(
            onset.baseline_samples,
            static_cast<std::size_t>(std::llround(options.onset_baseline_s / rec.steps.front().current.dt())));
        const DeadTimeEstimate est = estimate_dead_time(oriented, onset);
        channel.t_d = std::max(0.0, est.t_d);
        FitReport report;
        report.method = "onset_mean_5sigma";
        report.n_points = est.per_trial.size();
        report.params.emplace_back("t_d", channel.t_d);
        for (std::size_t t = 0; t < est.per_trial.size(); ++t) {
            report.params.emplace_back("trial_" + std::to_string(t), est.per_trial[t]);
        }
        double var = 0.0;
        for (double v : est.per_trial) var += (v - est.t_d) * (v - est.t_d);
        report.residual_rms = std::sqrt(var / static_cast<double>(est.per_trial.size()));
        report.condition_estimate = 1.0;
        if (est.t_d < 0.0) report.flags.emplace_back("negative_dead_time_clamped");
        stages.push_back({dt_stage, report});
    } catch (const Error& e) {
        rethrow_in_stage(dt_stage, e);
    }

    const std::string lag_stage = label + " lag";
    try {
        double c1_sum = 0.0;
        double d0_sum = 0.0;
        FitReport combined;
        for (std::size_t t = 0; t < rec.broadband.size(); ++t) {
            const auto& trial = rec.broadband[t];
            const TimeSeries thresholded = model::apply_threshold(trial.current, channel.i_th, polarity);
            const LagPreprocessing pre{factor, options.lag_prefilter_hz, options.lag_trim_s};
            FirstOrderFit fit;
            try {
                fit = fit_first_order_filtered(thresholded, scaled(trial.force, force_sign), channel.t_d, pre);
            } catch (const Error& e) {
                throw Error(e.kind(), "broadband trial " + std::to_string(t) + ": " + e.what());
            }
            if (!std::isfinite(fit.c1)) {
                throw Error(ErrorKind::unidentifiable, "broadband trial " + std::to_string(t) + " has no force response");
            }
            c1_sum += fit.c1;
            d0_sum += fit.d0;
            if (t == 0) {
                combined = fit.report;
            } else {
                combined.n_points += fit.report.n_points;
                combined.residual_rms = std::max(combined.residual_rms, fit.report.residual_rms);
                combined.condition_estimate = std::max(combined.condition_estimate, fit.report.condition_estimate);
            }
        }
        const double n = static_cast<double>(rec.broadband.size());
        channel.c1 = c1_sum / n;
        channel.d0 = d0_sum / n;
        if (rec.broadband.size() > 1) {
            combined.method = "arx_ols_mean";
            combined.params = {{"c1", channel.c1}, {"d0", channel.d0}, {"dead_time", channel.t_d}};
        }
        stages.push_back({lag_stage, combined});
    } catch (const Error& e) {
        rethrow_in_stage(lag_stage, e);
    }
    return channel;
}

void require_recordings(const PolarityRecordings& rec, const std::string& label) {
    if (rec.staircase.empty()) throw Error(ErrorKind::stage, "missing " + label + " staircase trials");
    if (rec.steps.empty()) throw Error(ErrorKind::stage, "missing " + label + " step trials");
    if (rec.broadband.empty()) throw Error(ErrorKind::stage, "missing " + label + " broadband trials");
}

}  // namespace

IdentificationResult identify_muscle_model(const IdentificationDataset& dataset) {
    require_recordings(dataset.pos, "positive");
    require_recordings(dataset.neg, "negative");
    if (dataset.decimation_factor < 1) {
        throw Error(ErrorKind::argument, "decimation factor must be >= 1");
    }
    IdentificationResult out;

    // Sign of the negative channel's force: the net force over its broadband
    // records.
    double net = 0.0;
    for (const auto& trial : dataset.neg.broadband) {
        for (double v : trial.force.samples()) net += v;
    }
    out.model.output_sign_neg = net < 0.0 ? -1 : +1;
    {
        FitReport report;
        report.method = "net_force_sign";
        report.params = {{"output_sign_neg", static_cast<double>(out.model.output_sign_neg)}, {"net_force", net}};
        report.n_points = dataset.neg.broadband.front().force.size();
        report.condition_estimate = 1.0;
        out.stages.push_back({"negative output sign", report});
    }

    out.model.pos = identify_channel(dataset.pos, Polarity::positive, dataset, 1.0, out.stages);
    out.model.neg = identify_channel(dataset.neg, Polarity::negative, dataset,
                                     static_cast<double>(out.model.output_sign_neg), out.stages);
    out.model.validate();
    return out;
}

}  // namespace fesid::identify
