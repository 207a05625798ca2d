#include "fesid/signals.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "fesid/error.hpp"

namespace fesid::signals {
namespace {

// Feedback taps (1-indexed register stages) of maximal-length Fibonacci LFSRs.
constexpr std::array<std::array<int, 4>, 32> kTaps{{
    {0, 0, 0, 0},     {0, 0, 0, 0},     {2, 1, 0, 0},     {3, 2, 0, 0},
    {4, 3, 0, 0},     {5, 3, 0, 0},     {6, 5, 0, 0},     {7, 6, 0, 0},
    {8, 6, 5, 4},     {9, 5, 0, 0},     {10, 7, 0, 0},    {11, 9, 0, 0},
    {12, 6, 4, 1},    {13, 4, 3, 1},    {14, 5, 3, 1},    {15, 14, 0, 0},
    {16, 15, 13, 4},  {17, 14, 0, 0},   {18, 11, 0, 0},   {19, 6, 2, 1},
    {20, 17, 0, 0},   {21, 19, 0, 0},   {22, 21, 0, 0},   {23, 18, 0, 0},
    {24, 23, 22, 17}, {25, 22, 0, 0},   {26, 6, 2, 1},    {27, 5, 2, 1},
    {28, 25, 0, 0},   {29, 27, 0, 0},   {30, 6, 4, 1},    {31, 28, 0, 0},
}};

constexpr double kRelTol = 1e-9;

std::size_t samples_for(double seconds, double dt) {
    return static_cast<std::size_t>(std::llround(seconds / dt));
}

void check_dt(double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw Error(ErrorKind::argument, "sample period must be positive");
    }
}

// Direct form II transposed, state seeded with the unit-step steady state
// scaled by `initial`.
std::vector<double> filter_once(const Biquad& q, const std::vector<double>& x, double initial) {
    const double gain = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    double z2 = (q.b2 - q.a2 * gain) * initial;
    double z1 = (q.b1 - q.a1 * gain) * initial + z2;
    std::vector<double> y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double yk = q.b0 * x[k] + z1;
        z1 = q.b1 * x[k] - q.a1 * yk + z2;
        z2 = q.b2 * x[k] - q.a2 * yk;
        y[k] = yk;
    }
    return y;
}

}  // namespace

void BiphasicWaveform::validate() const {
    if (pos_width < 0.0 || neg_width < 0.0 || gap < 0.0) {
        throw Error(ErrorKind::argument, "waveform widths must be non-negative");
    }
    if (pos_amplitude < 0.0 || neg_amplitude < 0.0) {
        throw Error(ErrorKind::argument, "waveform amplitudes are magnitudes and must be non-negative");
    }
    if (charge_balanced) {
        const double qp = pos_amplitude * pos_width;
        const double qn = neg_amplitude * neg_width;
        if (std::abs(qp - qn) > kRelTol * std::max(qp, qn)) {
            throw Error(ErrorKind::argument, "charge-balanced waveform has unequal phase charges");
        }
    }
}

BiphasicWaveform BiphasicWaveform::one_sided(double amplitude, double lead_width, double return_ratio) {
    BiphasicWaveform w;
    w.pos_amplitude = amplitude;
    w.pos_width = lead_width;
    w.neg_amplitude = amplitude * return_ratio;
    w.neg_width = lead_width / return_ratio;
    w.gap = 0.0;
    w.charge_balanced = true;
    w.inverted = false;
    return w;
}

BiphasicWaveform BiphasicWaveform::mirrored() const {
    BiphasicWaveform w = *this;
    w.inverted = !inverted;
    return w;
}

BiphasicWaveform BiphasicWaveform::scaled_to(double level) const {
    BiphasicWaveform w = *this;
    const double peak = std::max(pos_amplitude, neg_amplitude);
    if (peak <= 0.0) {
        throw Error(ErrorKind::argument, "cannot rescale an all-zero waveform");
    }
    const double factor = level / peak;
    w.pos_amplitude *= factor;
    w.neg_amplitude *= factor;
    return w;
}

std::vector<double> BiphasicWaveform::render(double dt) const {
    check_dt(dt);
    validate();
    auto phase_samples = [dt](double width, const char* name) -> std::size_t {
        if (width == 0.0) return 0;
        if (width < 2.0 * dt * (1.0 - kRelTol)) {
            throw Error(ErrorKind::resolution, std::string("waveform ") + name +
                                                   " phase is shorter than two samples at dt=" +
                                                   std::to_string(dt));
        }
        return samples_for(width, dt);
    };
    const std::size_t n_pos = phase_samples(pos_width, "positive");
    const std::size_t n_gap = gap == 0.0 ? 0 : samples_for(gap, dt);
    const std::size_t n_neg = phase_samples(neg_width, "negative");

    double neg = neg_amplitude;
    if (charge_balanced && n_neg > 0) {
        neg = pos_amplitude * static_cast<double>(n_pos) / static_cast<double>(n_neg);
    }
    const double sign = inverted ? -1.0 : 1.0;
    std::vector<double> out;
    out.reserve(n_pos + n_gap + n_neg);
    out.insert(out.end(), n_pos, sign * pos_amplitude);
    out.insert(out.end(), n_gap, 0.0);
    out.insert(out.end(), n_neg, -sign * neg);
    return out;
}

std::vector<int> mseq_chips(int register_length) {
    if (register_length < 2 || register_length > 31) {
        throw Error(ErrorKind::configuration,
                    "no maximal-length tap table for register length " + std::to_string(register_length));
    }
    const auto& taps = kTaps[static_cast<std::size_t>(register_length)];
    const std::uint32_t mask = (1u << register_length) - 1u;
    std::uint32_t state = mask;  // all ones
    const std::size_t period = (std::size_t{1} << register_length) - 1;
    std::vector<int> chips(period);
    for (std::size_t i = 0; i < period; ++i) {
        const std::uint32_t out_bit = (state >> (register_length - 1)) & 1u;
        chips[i] = out_bit ? 1 : -1;
        std::uint32_t fb = 0;
        for (int tap : taps) {
            if (tap > 0) fb ^= (state >> (tap - 1)) & 1u;
        }
        state = ((state << 1) | fb) & mask;
    }
    return chips;
}

TimeSeries generate_mseq(int register_length, double carrier_hz, double amplitude, int periods,
                         double dt, Unit unit) {
    check_dt(dt);
    const std::vector<int> chips = mseq_chips(register_length);
    if (periods < 1) {
        throw Error(ErrorKind::argument, "M-sequence needs at least one period");
    }
    if (!(carrier_hz > 0.0) || carrier_hz * dt > 1.0 + kRelTol) {
        throw Error(ErrorKind::resolution, "M-sequence carrier is faster than the sample rate");
    }
    const double per_chip = 1.0 / (carrier_hz * dt);
    const double rounded = std::round(per_chip);
    if (std::abs(per_chip - rounded) > 1e-6 * rounded) {
        throw Error(ErrorKind::resolution,
                    "M-sequence chip length is not a whole number of samples at this dt");
    }
    const auto spc = static_cast<std::size_t>(rounded);
    std::vector<double> out;
    out.reserve(chips.size() * spc * static_cast<std::size_t>(periods));
    for (int p = 0; p < periods; ++p) {
        for (int c : chips) out.insert(out.end(), spc, c * amplitude);
    }
    return TimeSeries(0.0, dt, std::move(out), unit);
}

TimeSeries generate_pulse_train(const PulseTrainSpec& spec, double dt) {
    check_dt(dt);
    if (!(spec.rate > 0.0) || !(spec.duration > 0.0)) {
        throw Error(ErrorKind::argument, "pulse train rate and duration must be positive");
    }
    if (spec.fire_probability < 0.0 || spec.fire_probability > 1.0) {
        throw Error(ErrorKind::argument, "fire probability must lie in [0, 1]");
    }
    const double slot = 1.0 / spec.rate;
    if (spec.waveform.duration() > slot * (1.0 + kRelTol)) {
        throw Error(ErrorKind::overlap, "waveform duration exceeds the pulse slot 1/rate");
    }
    const std::vector<double> shape = spec.waveform.render(dt);
    const std::size_t n = std::max<std::size_t>(1, samples_for(spec.duration, dt));
    const auto slots = static_cast<std::size_t>(std::floor(spec.duration * spec.rate + kRelTol));

    std::vector<double> out(n, 0.0);
    std::mt19937_64 rng(spec.seed);
    std::bernoulli_distribution fire(spec.fire_probability);
    for (std::size_t k = 0; k < slots; ++k) {
        if (!fire(rng)) continue;
        const auto start = static_cast<std::size_t>(std::llround(static_cast<double>(k) * slot / dt));
        for (std::size_t j = 0; j < shape.size() && start + j < n; ++j) out[start + j] = shape[j];
    }
    return TimeSeries(0.0, dt, std::move(out), spec.unit);
}

TimeSeries generate_staircase(const StaircaseSchedule& schedule, const BiphasicWaveform& waveform,
                              double dt, Unit unit) {
    check_dt(dt);
    if (schedule.n_levels < 1) {
        throw Error(ErrorKind::argument, "staircase needs at least one level");
    }
    if (!(schedule.rate > 0.0) || schedule.on_time * schedule.rate < 1.0 - kRelTol) {
        throw Error(ErrorKind::argument, "staircase on-time must hold at least one pulse");
    }
    if (schedule.off_time < 0.0) {
        throw Error(ErrorKind::argument, "staircase off-time must be non-negative");
    }
    const std::size_t n_on = samples_for(schedule.on_time, dt);
    const std::size_t n_off = samples_for(schedule.off_time, dt);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(schedule.n_levels) * (n_on + n_off));
    for (int k = 0; k < schedule.n_levels; ++k) {
        PulseTrainSpec block;
        block.rate = schedule.rate;
        block.duration = schedule.on_time;
        block.waveform = waveform.scaled_to(schedule.level_amplitude(k));
        block.fire_probability = 1.0;
        const TimeSeries on = generate_pulse_train(block, dt);
        out.insert(out.end(), on.samples().begin(), on.samples().end());
        out.resize(out.size() + (n_on - std::min(n_on, on.size())), 0.0);
        out.insert(out.end(), n_off, 0.0);
    }
    return TimeSeries(0.0, dt, std::move(out), unit);
}

TimeSeries generate_step(double amplitude, double onset, double width, double duration, double dt,
                         Unit unit) {
    check_dt(dt);
    if (!(duration > 0.0) || onset < 0.0 || width < 0.0) {
        throw Error(ErrorKind::argument, "step needs positive duration and non-negative onset/width");
    }
    const std::size_t n = std::max<std::size_t>(1, samples_for(duration, dt));
    const std::size_t begin = std::min(n, samples_for(onset, dt));
    const std::size_t end = std::min(n, samples_for(onset + width, dt));
    std::vector<double> out(n, 0.0);
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(begin), out.begin() + static_cast<std::ptrdiff_t>(end),
              amplitude);
    return TimeSeries(0.0, dt, std::move(out), unit);
}

Biquad butterworth_lowpass(double cutoff_hz, double dt) {
    const double k = std::tan(std::numbers::pi * cutoff_hz * dt);
    const double k2 = k * k;
    const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k2);
    Biquad q{};
    q.b0 = k2 * norm;
    q.b1 = 2.0 * q.b0;
    q.b2 = q.b0;
    q.a1 = 2.0 * (k2 - 1.0) * norm;
    q.a2 = (1.0 - std::numbers::sqrt2 * k + k2) * norm;
    return q;
}

TimeSeries lowpass(const TimeSeries& ts, double cutoff_hz) {
    const double nyquist = 0.5 / ts.dt();
    if (!(cutoff_hz > 0.0) || cutoff_hz >= nyquist) {
        throw Error(ErrorKind::configuration, "low-pass cutoff " + std::to_string(cutoff_hz) +
                                                  " Hz must lie in (0, " + std::to_string(nyquist) + ") Hz");
    }
    const std::size_t n = ts.size();
    if (n < 2) return ts;
    const Biquad q = butterworth_lowpass(cutoff_hz, ts.dt());

    // Odd reflection about each end, about two cutoff periods long.
    const auto span = static_cast<std::size_t>(std::ceil(2.0 / (cutoff_hz * ts.dt())));
    const std::size_t pad = std::min(n - 1, std::max<std::size_t>(9, span));
    const auto x = ts.samples();
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    std::vector<double> fwd = filter_once(q, ext, ext.front());
    std::reverse(fwd.begin(), fwd.end());
    std::vector<double> bwd = filter_once(q, fwd, fwd.front());
    std::reverse(bwd.begin(), bwd.end());
    return ts.with_samples(std::vector<double>(bwd.begin() + static_cast<std::ptrdiff_t>(pad),
                                               bwd.begin() + static_cast<std::ptrdiff_t>(pad + n)));
}

double decimation_cutoff_hz(double dt, int factor) noexcept {
    return 0.4 * (0.5 / (static_cast<double>(factor) * dt));
}

TimeSeries decimate(const TimeSeries& ts, int factor) {
    if (factor < 1) {
        throw Error(ErrorKind::argument, "decimation factor must be >= 1");
    }
    if (factor == 1) return ts;
    const TimeSeries smooth = lowpass(ts, decimation_cutoff_hz(ts.dt(), factor));
    std::vector<double> kept;
    kept.reserve(ts.size() / static_cast<std::size_t>(factor) + 1);
    for (std::size_t k = 0; k < smooth.size(); k += static_cast<std::size_t>(factor)) kept.push_back(smooth[k]);
    return TimeSeries(ts.t0(), ts.dt() * factor, std::move(kept), ts.unit());
}

TimeSeries add_gaussian_noise(const TimeSeries& ts, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) {
        throw Error(ErrorKind::argument, "noise sigma must be non-negative");
    }
    if (sigma == 0.0) return ts;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<double> out(ts.samples().begin(), ts.samples().end());
    for (double& v : out) v += noise(rng);
    return ts.with_samples(std::move(out));
}

}  // namespace fesid::signals
