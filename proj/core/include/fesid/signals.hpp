#pragma once

#include <cstdint>
#include <vector>

#include "fesid/time_series.hpp"

namespace fesid::signals {

/// Two-phase stimulation pulse: positive phase, gap, negative phase. With
/// `inverted` set the whole shape is negated, so the leading phase drives
/// negative current instead.
struct BiphasicWaveform {
    double pos_width = 0.5e-3;
    double pos_amplitude = 1.0;
    double neg_width = 5.0e-3;
    double neg_amplitude = 0.1;  // magnitude; rendered with a negative sign
    double gap = 0.0;
    bool charge_balanced = true;
    bool inverted = false;

    double duration() const noexcept { return pos_width + gap + neg_width; }

    /// Throws Error(argument) on negative widths/amplitudes or a broken
    /// charge balance (relative 1e-9).
    void validate() const;

    /// Short strong leading phase followed by a long weak return phase at
    /// 1/10 the amplitude, charge balanced. Only the leading phase reaches
    /// the muscle's threshold.
    static BiphasicWaveform one_sided(double amplitude, double lead_width = 0.5e-3,
                                      double return_ratio = 0.1);

    /// Swaps which current direction the leading phase drives.
    BiphasicWaveform mirrored() const;

    /// Rescales both amplitudes so the larger one equals `level`.
    BiphasicWaveform scaled_to(double level) const;

    /// Samples one waveform instance at period dt. Each non-empty phase must
    /// span at least two samples, otherwise Error(resolution). When
    /// charge_balanced is set the negative amplitude is trimmed so the sampled
    /// charge cancels exactly.
    std::vector<double> render(double dt) const;
};

struct PulseTrainSpec {
    double rate = 1000.0;           // pulses per second
    double duration = 1.0;          // seconds
    BiphasicWaveform waveform{};
    double fire_probability = 1.0;  // per slot
    std::uint64_t seed = 0;
    Unit unit = Unit::volt;
};

/// Stepwise amplitude protocol: `n_levels` blocks of `on_time` firing at
/// `rate`, each followed by `off_time` of silence, amplitude rising by `step`.
struct StaircaseSchedule {
    double start_amplitude = 6.0;
    double step = 2.0;
    int n_levels = 1;
    double on_time = 1.0;
    double off_time = 1.0;
    double rate = 10.0;

    double level_amplitude(int k) const noexcept { return start_amplitude + k * step; }
    double block_duration() const noexcept { return on_time + off_time; }
    double duration() const noexcept { return n_levels * block_duration(); }
};

/// One period of a maximal-length sequence as +1/-1 chips, starting from the
/// all-ones register. Error(configuration) outside 2..31.
std::vector<int> mseq_chips(int register_length);

/// +/-amplitude M-sequence with each chip held 1/carrier_hz seconds.
/// Error(resolution) if 1/(carrier_hz*dt) is not a whole number of samples.
TimeSeries generate_mseq(int register_length, double carrier_hz, double amplitude, int periods,
                         double dt, Unit unit = Unit::volt);

/// Slots at k/rate; each slot fires the waveform with the given probability.
/// Slot decisions come from a mt19937_64 seeded with spec.seed, one Bernoulli
/// draw per slot, in slot order.
TimeSeries generate_pulse_train(const PulseTrainSpec& spec, double dt);

/// Block k fires `waveform.scaled_to(level_amplitude(k))` on every slot.
TimeSeries generate_staircase(const StaircaseSchedule& schedule, const BiphasicWaveform& waveform,
                              double dt, Unit unit = Unit::volt);

/// Rectangular pulse of `amplitude` from `onset` for `width` seconds, zero elsewhere.
TimeSeries generate_step(double amplitude, double onset, double width, double duration, double dt,
                         Unit unit = Unit::volt);

/// Digital 2nd-order Butterworth section (bilinear, prewarped), a[0] = 1.
struct Biquad {
    double b0, b1, b2, a1, a2;
};
Biquad butterworth_lowpass(double cutoff_hz, double dt);

/// Zero-phase (forward-backward) 2nd-order Butterworth low-pass: effective
/// magnitude is |H|^2 with no phase shift. Error(configuration) unless
/// 0 < cutoff_hz < 1/(2 dt).
TimeSeries lowpass(const TimeSeries& ts, double cutoff_hz);

/// Anti-alias cutoff used by `decimate`: 0.4 of the output Nyquist rate.
double decimation_cutoff_hz(double dt, int factor) noexcept;

/// Zero-phase anti-alias filter, then every factor-th sample from index 0.
/// Output dt = factor * dt, t0 unchanged. Error(argument) for factor < 1.
TimeSeries decimate(const TimeSeries& ts, int factor);

/// i.i.d. N(0, sigma^2) added per sample; mt19937_64 seeded with `seed`.
TimeSeries add_gaussian_noise(const TimeSeries& ts, double sigma, std::uint64_t seed);

}  // namespace fesid::signals
