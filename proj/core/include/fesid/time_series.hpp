#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace fesid {

enum class Unit { volt, ampere, newton, dimensionless };

std::string_view to_string(Unit unit) noexcept;
/// Throws Error(data_format) for an unknown label.
Unit parse_unit(std::string_view label);

/// Uniformly sampled real signal. Sample k sits at t0 + k*dt; timestamps are
/// never stored. Immutable once built.
class TimeSeries {
public:
    /// Throws Error(argument) unless dt > 0 (and finite) and samples is non-empty.
    TimeSeries(double t0, double dt, std::vector<double> samples, Unit unit);

    double t0() const noexcept { return t0_; }
    double dt() const noexcept { return dt_; }
    Unit unit() const noexcept { return unit_; }
    std::size_t size() const noexcept { return samples_.size(); }
    std::span<const double> samples() const noexcept { return samples_; }
    double operator[](std::size_t k) const noexcept { return samples_[k]; }

    double time_at(std::size_t k) const noexcept { return t0_ + static_cast<double>(k) * dt_; }
    /// size() * dt
    double duration() const noexcept { return static_cast<double>(samples_.size()) * dt_; }

    /// Same t0/dt/unit, new samples.
    TimeSeries with_samples(std::vector<double> samples) const;
    TimeSeries with_unit(Unit unit) const;

    friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

private:
    double t0_;
    double dt_;
    std::vector<double> samples_;
    Unit unit_;
};

/// Throws Error(argument) unless both series share dt (relative 1e-9) and length.
void require_aligned(const TimeSeries& a, const TimeSeries& b, std::string_view what);

}  // namespace fesid
