#include "fesid/validation.hpp"

#include <cmath>
#include <limits>

#include "fesid/error.hpp"
#include "fesid/signals.hpp"

namespace fesid {

ValidationMetrics validate(const TimeSeries& measured, const TimeSeries& predicted, double settle_time,
                           std::optional<double> lowpass_hz) {
    require_aligned(measured, predicted, "validate");
    if (!(settle_time >= 0.0) || settle_time >= measured.duration()) {
        throw Error(ErrorKind::argument, "settle time must lie in [0, record duration)");
    }
    const TimeSeries y = lowpass_hz ? signals::lowpass(measured, *lowpass_hz) : measured;
    const TimeSeries yhat = lowpass_hz ? signals::lowpass(predicted, *lowpass_hz) : predicted;
    const std::size_t n = y.size();

    double mean = 0.0;
    for (double v : y.samples()) mean += v;
    mean /= static_cast<double>(n);

    double err_sq = 0.0;
    double dev_sq = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        err_sq += (y[k] - yhat[k]) * (y[k] - yhat[k]);
        dev_sq += (y[k] - mean) * (y[k] - mean);
    }

    ValidationMetrics m;
    m.rmse = std::sqrt(err_sq / static_cast<double>(n));
    if (dev_sq > 0.0) {
        m.fit_percent = 100.0 * (1.0 - std::sqrt(err_sq) / std::sqrt(dev_sq));
    } else {
        m.fit_percent = err_sq == 0.0 ? 100.0 : -std::numeric_limits<double>::infinity();
    }

    const auto first = static_cast<std::size_t>(std::ceil(settle_time / y.dt() - 1e-9));
    m.steady_start = y.time_at(first);
    m.steady_end = y.time_at(n - 1);
    double steady_sq = 0.0;
    for (std::size_t k = first; k < n; ++k) steady_sq += (y[k] - yhat[k]) * (y[k] - yhat[k]);
    m.steady_rmse = std::sqrt(steady_sq / static_cast<double>(n - first));
    return m;
}

}  // namespace fesid
