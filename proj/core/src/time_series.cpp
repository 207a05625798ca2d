#include "fesid/time_series.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fesid/error.hpp"

namespace fesid {

std::string_view to_string(Unit unit) noexcept {
    switch (unit) {
        case Unit::volt: return "volt";
        case Unit::ampere: return "ampere";
        case Unit::newton: return "newton";
        case Unit::dimensionless: return "dimensionless";
    }
    return "dimensionless";
}

Unit parse_unit(std::string_view label) {
    if (label == "volt") return Unit::volt;
    if (label == "ampere") return Unit::ampere;
    if (label == "newton") return Unit::newton;
    if (label == "dimensionless") return Unit::dimensionless;
    throw Error(ErrorKind::data_format, "unknown unit label '" + std::string(label) + "'");
}

TimeSeries::TimeSeries(double t0, double dt, std::vector<double> samples, Unit unit)
    : t0_(t0), dt_(dt), samples_(std::move(samples)), unit_(unit) {
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) {
        throw Error(ErrorKind::argument, "time series sample period must be positive");
    }
    if (!std::isfinite(t0_)) {
        throw Error(ErrorKind::argument, "time series start time must be finite");
    }
    if (samples_.empty()) {
        throw Error(ErrorKind::argument, "time series needs at least one sample");
    }
}

TimeSeries TimeSeries::with_samples(std::vector<double> samples) const {
    return TimeSeries(t0_, dt_, std::move(samples), unit_);
}

TimeSeries TimeSeries::with_unit(Unit unit) const {
    TimeSeries out = *this;
    out.unit_ = unit;
    return out;
}

void require_aligned(const TimeSeries& a, const TimeSeries& b, std::string_view what) {
    if (a.size() != b.size()) {
        throw Error(ErrorKind::argument,
                    std::string(what) + ": series lengths differ (" + std::to_string(a.size()) +
                        " vs " + std::to_string(b.size()) + ")");
    }
    if (std::abs(a.dt() - b.dt()) > 1e-9 * std::max(a.dt(), b.dt())) {
        throw Error(ErrorKind::argument, std::string(what) + ": sample periods differ");
    }
}

}  // namespace fesid
