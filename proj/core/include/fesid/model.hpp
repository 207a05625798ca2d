#pragma once

#include <complex>
#include <string>
#include <vector>

#include "fesid/time_series.hpp"

namespace fesid::model {

/// Divider R1/R2 across the electrodes and shunt R3 in series with the body.
struct CircuitParams {
    double r1 = 0.2e6;
    double r2 = 1.8e6;
    double r3 = 100.0;

    void validate() const;
};

struct CircuitSignals {
    TimeSeries v_app;  // volt
    TimeSeries i_flo;  // ampere
};

/// v_app = v1*(r1+r2)/r1 - v3, i_flo = v3/r3, per sample.
CircuitSignals circuit_reconstruct(const TimeSeries& v1, const TimeSeries& v3, const CircuitParams& params = {});

/// Continuous-time rational transfer function in ascending powers of s:
/// num = [b0, b1, ...], den = [1, a1, a2, ...].
class RationalTF {
public:
    /// Error(argument) unless den[0] == 1, all coefficients are finite and
    /// deg(den) >= deg(num) - 1.
    RationalTF(std::vector<double> num, std::vector<double> den);

    /// d0 / (c1 s + 1)
    static RationalTF first_order_lag(double c1, double d0);
    /// b1 s / (a2 s^2 + a1 s + 1)
    static RationalTF band_pass(double a2, double a1, double b1);

    const std::vector<double>& num() const noexcept { return num_; }
    const std::vector<double>& den() const noexcept { return den_; }
    int num_degree() const noexcept;
    int den_degree() const noexcept;
    bool is_proper() const noexcept { return den_degree() >= num_degree(); }

    friend bool operator==(const RationalTF&, const RationalTF&) = default;

private:
    std::vector<double> num_;
    std::vector<double> den_;
};

/// num(j2*pi*f) / den(j2*pi*f). Error(domain) at a pole, Error(argument) for f < 0.
std::complex<double> eval_freq(const RationalTF& tf, double f_hz);

/// Frequency of maximum |gain| in [f_lo, f_hi]: log-spaced sweep of
/// `sweep_points`, then golden-section refinement around the best sample.
double peak_gain_frequency(const RationalTF& tf, double f_lo, double f_hi, int sweep_points = 2000);

/// Analytic resonance of b1 s / (a2 s^2 + a1 s + 1): 1 / (2 pi sqrt(a2)).
double band_pass_resonance_hz(double a2) noexcept;

enum class Polarity { positive, negative };
std::string to_string(Polarity p);

/// Positive: i - i_th where i > i_th, else 0. Negative: |i| - i_th where
/// i < -i_th, else 0. Output is a non-negative drive in amperes.
TimeSeries apply_threshold(const TimeSeries& i_flo, double i_th, Polarity polarity);

/// Zero-order-hold simulation at the input's dt with zero initial state,
/// after delaying the input by round(dead_time/dt) samples. Error(configuration)
/// for an improper tf, Error(argument) for a negative dead time.
TimeSeries simulate_lti(const RationalTF& tf, const TimeSeries& input, double dead_time);
TimeSeries simulate_lti(const RationalTF& tf, const TimeSeries& input, double dead_time, Unit output_unit);

/// Whole-sample delay with zero fill.
TimeSeries delay_samples(const TimeSeries& ts, std::size_t samples);

struct MuscleChannel {
    double i_th = 0.0;  // amperes
    double t_d = 0.0;   // seconds
    double c1 = 1.0;    // seconds
    double d0 = 0.0;    // newtons per ampere

    void validate() const;
    RationalTF lag() const { return RationalTF::first_order_lag(c1, d0); }
    friend bool operator==(const MuscleChannel&, const MuscleChannel&) = default;
};

/// Independent positive- and negative-current channels, summed at the output.
struct MuscleModel {
    MuscleChannel pos;
    MuscleChannel neg;
    int output_sign_neg = +1;

    void validate() const;
    const MuscleChannel& channel(Polarity p) const noexcept { return p == Polarity::positive ? pos : neg; }
    friend bool operator==(const MuscleModel&, const MuscleModel&) = default;
};

/// Force contributed by one channel: threshold, dead time, then the lag.
TimeSeries channel_force(const MuscleChannel& channel, const TimeSeries& i_flo, Polarity polarity);

/// pos channel + output_sign_neg * neg channel, in newtons.
TimeSeries predict_force(const MuscleModel& model, const TimeSeries& i_flo);

/// Human-readable notes when dt is too coarse for the model's dead times.
std::vector<std::string> prediction_warnings(const MuscleModel& model, double dt);

}  // namespace fesid::model
