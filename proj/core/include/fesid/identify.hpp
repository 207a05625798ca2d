#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fesid/model.hpp"
#include "fesid/signals.hpp"
#include "fesid/spectral.hpp"
#include "fesid/time_series.hpp"

namespace fesid::identify {

/// Outcome of one estimation step. `params` keeps insertion order so the
/// serialized form is stable.
struct FitReport {
    std::string method;
    std::vector<std::pair<std::string, double>> params;
    double residual_rms = 0.0;
    std::size_t n_points = 0;
    double condition_estimate = 0.0;  // of the normal equations
    std::vector<std::string> flags;

    /// Error(argument) if absent.
    double param(std::string_view name) const;
    bool has_flag(std::string_view flag) const;
};

// --- frequency-domain rational fit -----------------------------------------

struct RationalFitOptions {
    int max_iterations = 20;      // Sanathanan-Koerner reweighting passes
    double tolerance = 1e-8;      // relative coefficient change
    double f_min = 0.0;           // points outside [f_min, f_max] are ignored
    double f_max = std::numeric_limits<double>::infinity();
};

struct RationalFit {
    model::RationalTF tf;
    FitReport report;
};

/// Linearized (Levy) least squares on D(jw)H - N(jw) with D(0) = 1 and the
/// numerator spanning s^num_lowest_power .. s^num_degree, refined by
/// Sanathanan-Koerner reweighting. Error(argument) on bad degrees or too few
/// points (< 3 per parameter); Error(degenerate) on rank deficiency.
RationalFit fit_rational_freq(const spectral::FrequencyResponse& fr, int num_degree, int den_degree,
                              int num_lowest_power, const RationalFitOptions& options = {});

// --- time-domain first-order fit -------------------------------------------

struct FirstOrderFit {
    double c1 = 0.0;  // NaN when the pole is not identifiable (flagged)
    double d0 = 0.0;
    FitReport report;
};

/// Delays the drive by round(dead_time/dt) samples, then fits
/// F[k] = alpha F[k-1] + beta I[k-1] by ordinary least squares and maps
/// c1 = -dt / ln(alpha), d0 = beta / (1 - alpha).
/// An all-zero force yields d0 = 0 with the fit flagged rather than an error.
/// Error(unidentifiable) for a near-constant drive or rank-deficient
/// regressors, Error(nonphysical) if alpha is outside (0, 1).
FirstOrderFit fit_first_order_time(const TimeSeries& drive, const TimeSeries& force, double dead_time);

struct LagPreprocessing {
    int decimation_factor = 50;
    double prefilter_hz = 4.0;  // <= 0 disables the low-pass
    double trim_s = 1.0;
};

/// For noisy raw-rate records: delays the drive, decimates both signals,
/// applies the same zero-phase low-pass to each, drops trim_s from both ends
/// and hands the result to fit_first_order_time.
FirstOrderFit fit_first_order_filtered(const TimeSeries& drive, const TimeSeries& force, double dead_time,
                                       const LagPreprocessing& options = {});

// --- onsets and dead time ---------------------------------------------------

struct OnsetOptions {
    std::size_t baseline_samples = 50;
    double k_sigma = 5.0;
    std::size_t hold = 3;
    /// Lower bound on the detection margin as a fraction of the signal's
    /// excursion above baseline; only matters for noise-free records.
    double relative_floor = 1e-3;
};

/// First index whose value exceeds baseline mean + max(k_sigma * sd, floor)
/// and stays above for `hold` samples. Baseline = the first baseline_samples.
std::optional<std::size_t> detect_onset(std::span<const double> signal, const OnsetOptions& options = {});

struct TrialRecord {
    TimeSeries current;  // ampere
    TimeSeries force;    // newton
};

struct DeadTimeEstimate {
    double t_d;
    std::vector<double> per_trial;
};

/// Mean over trials of (force onset - current onset). Signals are taken as
/// given, so callers orient negative-polarity records first.
/// Error(onset_detection) naming the trial when either onset is missing.
DeadTimeEstimate estimate_dead_time(std::span<const TrialRecord> trials, const OnsetOptions& options = {});

// --- threshold current -------------------------------------------------------

struct StaircaseTrial {
    std::vector<double> level_voltages;
    std::vector<double> level_currents;      // plateau current per level, amperes
    std::vector<double> level_peak_forces;   // above baseline, newtons
    double noise_floor = 0.0;

    void validate() const;
};

struct ThresholdEstimate {
    double i_th;
    bool lower_bound_unknown;
    FitReport report;
};

/// First level with peak force > 3 * noise_floor (and above a 1e-6 relative
/// numerical floor) responds; i_th is the midpoint between its current and
/// the previous level's. Error(threshold_not_reached) if none responds.
ThresholdEstimate detect_threshold_current(const StaircaseTrial& trial);

/// Reduces a recorded staircase to per-level features. Current plateaus come
/// from the raw current; forces are read after decimating by
/// `analysis_decimation`. Negative polarity reads the current mirrored.
StaircaseTrial extract_staircase_trial(const TrialRecord& record, const signals::StaircaseSchedule& schedule,
                                       model::Polarity polarity, int analysis_decimation);

// --- full pipeline -----------------------------------------------------------

struct StaircaseRecording {
    TrialRecord record;
    signals::StaircaseSchedule schedule;
};

struct PolarityRecordings {
    std::vector<StaircaseRecording> staircase;
    std::vector<TrialRecord> steps;
    std::vector<TrialRecord> broadband;
};

struct IdentificationDataset {
    PolarityRecordings pos;
    PolarityRecordings neg;
    int decimation_factor = 50;
    /// Zero-phase low-pass applied to both decimated lag-fit signals, and the
    /// span dropped from each end afterwards to discard filter edge effects.
    double lag_prefilter_hz = 4.0;
    double lag_trim_s = 1.0;
    /// Pre-onset span used as the onset baseline in step trials.
    double onset_baseline_s = 0.25;
};

struct StageReport {
    std::string stage;
    FitReport report;
};

struct IdentificationResult {
    model::MuscleModel model;
    std::vector<StageReport> stages;
};

/// Per polarity: threshold from the staircase; dead time from the raw step
/// trials; then the broadband current is
/// thresholded and delayed, drive and force are decimated, low-passed at
/// lag_prefilter_hz, trimmed and fitted to the first-order lag. Also infers the sign with
/// which the negative channel's force appears. Errors carry the stage name.
IdentificationResult identify_muscle_model(const IdentificationDataset& dataset);

}  // namespace fesid::identify
