#include "fesid/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "fesid/error.hpp"

namespace fesid::synthetic {

using model::MuscleModel;

MuscleModel reference_subject(char subject) {
    MuscleModel m;
    if (subject == 'A' || subject == 'a') {
        m.pos = {14.4e-3, 0.023, 0.1889, 32207.0};
        m.neg = {8.32e-3, 0.025, 0.2476, 13796.0};
    } else if (subject == 'B' || subject == 'b') {
        m.pos = {15.1e-3, 0.021, 0.5789, 4888.2};
        m.neg = {12.3e-3, 0.028, 0.4325, 7331.5};
    } else {
        throw Error(ErrorKind::argument, std::string("unknown reference subject '") + subject + "'");
    }
    m.output_sign_neg = +1;
    return m;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    // splitmix64 finalizer over the combined value
    std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace {

double peak_abs(const TimeSeries& ts) {
    double p = 0.0;
    for (double v : ts.samples()) p = std::max(p, std::abs(v));
    return p;
}

}  // namespace

identify::TrialRecord record(const MuscleModel& truth, const TimeSeries& current, double noise_fraction,
                             std::uint64_t seed) {
    const TimeSeries force = model::predict_force(truth, current);
    return {signals::add_gaussian_noise(current, noise_fraction * peak_abs(current), derive_seed(seed, 0)),
            signals::add_gaussian_noise(force, noise_fraction * peak_abs(force), derive_seed(seed, 1))};
}

identify::IdentificationDataset make_dataset(const MuscleModel& truth, const Protocol& p, std::uint64_t seed) {
    identify::IdentificationDataset ds;
    ds.decimation_factor = p.decimation_factor;
    std::uint64_t index = 0;
    auto next_seed = [&] { return derive_seed(seed, index++); };

    for (model::Polarity pol : {model::Polarity::positive, model::Polarity::negative}) {
        const bool positive = pol == model::Polarity::positive;
        auto& rec = positive ? ds.pos : ds.neg;
        const double sign = positive ? 1.0 : -1.0;

        // Staircase: volts through the body conductance.
        signals::BiphasicWaveform lead = signals::BiphasicWaveform::one_sided(1.0);
        if (!positive) lead = lead.mirrored();
        const TimeSeries volts = signals::generate_staircase(p.staircase, lead, p.dt, Unit::volt);
        std::vector<double> amps(volts.samples().begin(), volts.samples().end());
        for (double& v : amps) v *= p.conductance;
        const TimeSeries stair_current(volts.t0(), volts.dt(), std::move(amps), Unit::ampere);
        rec.staircase.push_back({record(truth, stair_current, p.noise_fraction, next_seed()), p.staircase});

        const TimeSeries step = signals::generate_step(sign * p.step_current, p.step_onset, p.step_width,
                                                       p.step_duration, p.dt, Unit::ampere);
        for (int t = 0; t < p.step_trials; ++t) {
            rec.steps.push_back(record(truth, step, p.noise_fraction, next_seed()));
        }

        signals::PulseTrainSpec bb;
        bb.rate = p.broadband_rate;
        bb.duration = p.broadband_duration;
        bb.fire_probability = p.broadband_probability;
        bb.unit = Unit::ampere;
        bb.waveform = signals::BiphasicWaveform::one_sided(p.broadband_current, p.broadband_lead_width,
                                                           p.broadband_return_ratio);
        if (!positive) bb.waveform = bb.waveform.mirrored();
        bb.seed = next_seed();
        const TimeSeries drive = signals::generate_pulse_train(bb, p.dt);
        rec.broadband.push_back(record(truth, drive, p.noise_fraction, next_seed()));
    }
    return ds;
}

TimeSeries verification_current(const Protocol& protocol, double amplitude, double chip_rate, int register_length,
                                int periods) {
    return signals::generate_mseq(register_length, chip_rate, amplitude, periods, protocol.dt, Unit::ampere);
}

}  // namespace fesid::synthetic
