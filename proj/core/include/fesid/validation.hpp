#pragma once

#include <optional>

#include "fesid/time_series.hpp"

namespace fesid {

struct ValidationMetrics {
    double rmse = 0.0;
    double fit_percent = 0.0;  // 100 (1 - ||y - yhat|| / ||y - mean(y)||)
    double steady_start = 0.0;
    double steady_end = 0.0;
    double steady_rmse = 0.0;
};

/// Compares a prediction against a measurement over the whole record and over
/// the steady window [t0 + settle_time, last sample]. When `lowpass_hz` is set
/// both series are passed through the same zero-phase low-pass first.
/// Error(argument) for misaligned series or settle_time >= duration.
ValidationMetrics validate(const TimeSeries& measured, const TimeSeries& predicted, double settle_time,
                           std::optional<double> lowpass_hz = std::nullopt);

}  // namespace fesid
