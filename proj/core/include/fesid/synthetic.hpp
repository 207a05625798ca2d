#pragma once

#include <cstdint>
#include <string>

#include "fesid/identify.hpp"
#include "fesid/model.hpp"
#include "fesid/signals.hpp"

namespace fesid::synthetic {

/// Muscle parameters of the two reference subjects ('A' or 'B'): thresholds
/// in amperes, dead times and lag constants in seconds.
model::MuscleModel reference_subject(char subject);

/// Recording protocol for synthetic identification data. Currents are
/// generated directly; staircase voltages map to current through a fixed
/// body conductance.
struct Protocol {
    double dt = 1e-4;
    int decimation_factor = 50;
    double noise_fraction = 0.02;     // sensor noise sigma as a fraction of each record's peak
    double conductance = 0.35e-3;     // A per V for the staircase

    signals::StaircaseSchedule staircase{6.0, 2.0, 25, 1.0, 1.0, 10.0};
    int step_trials = 5;
    double step_current = 0.020;
    double step_onset = 0.5;
    double step_width = 0.01;
    double step_duration = 1.0;

    double broadband_duration = 20.0;
    double broadband_current = 0.020;
    double broadband_rate = 1000.0;
    double broadband_probability = 0.5;
    double broadband_lead_width = 0.2e-3;
    double broadband_return_ratio = 0.25;

    /// Staircase current resolution: conductance * step.
    double staircase_resolution() const noexcept { return conductance * staircase.step; }
};

/// Stable per-record seed derived from a base seed and a record index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept;

/// Drives the plant with a noise-free current and returns the measured
/// current and force, each with Gaussian noise of noise_fraction * peak.
identify::TrialRecord record(const model::MuscleModel& truth, const TimeSeries& current, double noise_fraction,
                             std::uint64_t seed);

/// Staircase, step and broadband recordings for both polarities.
identify::IdentificationDataset make_dataset(const model::MuscleModel& truth, const Protocol& protocol,
                                             std::uint64_t seed);

/// Held-out drive: +/-amplitude M-sequence current at `chip_rate`.
TimeSeries verification_current(const Protocol& protocol, double amplitude = 0.018, double chip_rate = 1000.0,
                                int register_length = 10, int periods = 10);

}  // namespace fesid::synthetic
