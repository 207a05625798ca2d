#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fesid/identify.hpp"
#include "fesid/model.hpp"
#include "fesid/spectral.hpp"
#include "fesid/time_series.hpp"
#include "fesid/validation.hpp"

namespace fesid::io {

/// Shortest decimal string that parses back to exactly `value`.
std::string format_shortest(double value);
/// Shortest fixed-point (no exponent) string that round-trips.
std::string format_decimal(double value);
/// Parses a full token as double; Error(data_format) otherwise.
double parse_double(const std::string& token, const std::string& what);

/// Writes `content` to a sibling temp file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

// TimeSeries CSV: header `t,value,unit`, t with 12 significant digits,
// values in shortest round-trip form, LF endings. Readers reject a time
// column whose spacing deviates from uniform by more than 1e-9 s.
std::string time_series_csv(const TimeSeries& ts);
TimeSeries parse_time_series_csv(const std::string& text, std::optional<double> dt_hint = std::nullopt);
void write_time_series(const std::filesystem::path& path, const TimeSeries& ts);
TimeSeries read_time_series(const std::filesystem::path& path);

// FrequencyResponse CSV: header `f_hz,re,im`.
std::string frequency_response_csv(const spectral::FrequencyResponse& fr);
spectral::FrequencyResponse parse_frequency_response_csv(const std::string& text);
void write_frequency_response(const std::filesystem::path& path, const spectral::FrequencyResponse& fr);
spectral::FrequencyResponse read_frequency_response(const std::filesystem::path& path);

// MuscleModel: `key = value` lines in decimal notation, keys written in the
// order i_th_pos, t_d_pos, c1_pos, d0_pos, i_th_neg, t_d_neg, c1_neg, d0_neg,
// output_sign_neg. Readers accept any order and reject unknown or missing keys.
std::string muscle_model_text(const model::MuscleModel& m);
model::MuscleModel parse_muscle_model(const std::string& text);

// RationalTF: `num = b0 b1 ...` and `den = 1 a1 ...` lines.
std::string rational_tf_text(const model::RationalTF& tf);
model::RationalTF parse_rational_tf(const std::string& text);

// Fit reports: one `[stage]` section each with fixed key order.
std::string fit_reports_text(const std::vector<identify::StageReport>& reports);
std::vector<identify::StageReport> parse_fit_reports(const std::string& text);

std::string metrics_text(const ValidationMetrics& m);
ValidationMetrics parse_metrics(const std::string& text);

// Dataset manifest: one trial per line, `<role> key=value ...`, roles
// staircase_pos/_neg (current, force, start, step, levels, on, off, rate),
// step_pos/_neg and broadband_pos/_neg (current, force), plus an optional
// `options` line (decimate, lag_prefilter, lag_trim, onset_baseline).
// Paths are relative to the manifest.
struct ManifestEntry {
    std::string role;
    std::vector<std::pair<std::string, std::string>> fields;
};
std::string manifest_text(const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> parse_manifest(const std::string& text);
identify::IdentificationDataset load_dataset(const std::filesystem::path& manifest_path);
/// Writes every trial as a current/force CSV pair plus `manifest.txt` into
/// `dir` (created if needed); returns the manifest path.
std::filesystem::path write_dataset(const std::filesystem::path& dir, const identify::IdentificationDataset& ds);

}  // namespace fesid::io
