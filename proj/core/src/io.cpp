#include "fesid/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include "fesid/error.hpp"

namespace fesid::io {
namespace {

std::string chars(double value, std::chars_format fmt, std::optional<int> precision = std::nullopt) {
    std::array<char, 512> buf{};
    const auto res = precision ? std::to_chars(buf.data(), buf.data() + buf.size(), value, fmt, *precision)
                               : std::to_chars(buf.data(), buf.data() + buf.size(), value, fmt);
    if (res.ec != std::errc{}) {
        throw Error(ErrorKind::argument, "cannot format number");
    }
    return std::string(buf.data(), res.ptr);
}

std::string format_time(double t) { return chars(t, std::chars_format::general, 12); }

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out.push_back(line);
    }
    return out;
}

// key = value lines, '#' comments and blanks skipped.
std::vector<std::pair<std::string, std::string>> key_values(const std::string& text, const std::string& what) {
    std::vector<std::pair<std::string, std::string>> out;
    int lineno = 0;
    for (const auto& raw : lines_of(text)) {
        ++lineno;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::data_format, what + " line " + std::to_string(lineno) + " is not key = value");
        }
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

double round_significant(double v, int digits) { return parse_double(chars(v, std::chars_format::general, digits), "dt"); }

}  // namespace

std::string format_shortest(double value) { return chars(value, std::chars_format::general); }

std::string format_decimal(double value) {
    if (!std::isfinite(value)) return format_shortest(value);
    return chars(value, std::chars_format::fixed);
}

double parse_double(const std::string& token, const std::string& what) {
    const std::string t = trim(token);
    double value = 0.0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (!t.empty() && t[0] == '+') ++first;
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last || t.empty()) {
        throw Error(ErrorKind::data_format, "cannot parse '" + t + "' as a number (" + what + ")");
    }
    return value;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::io, "cannot open '" + tmp.string() + "' for writing");
        out << content;
        out.flush();
        if (!out) throw Error(ErrorKind::io, "failed writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorKind::io, "cannot move output into place at '" + path.string() + "'");
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string time_series_csv(const TimeSeries& ts) {
    std::string out = "t,value,unit\n";
    const std::string unit(to_string(ts.unit()));
    out.reserve(ts.size() * 40);
    for (std::size_t k = 0; k < ts.size(); ++k) {
        out += format_time(ts.time_at(k));
        out += ',';
        out += format_shortest(ts[k]);
        out += ',';
        out += unit;
        out += '\n';
    }
    return out;
}

TimeSeries parse_time_series_csv(const std::string& text, std::optional<double> dt_hint) {
    const auto lines = lines_of(text);
    if (lines.empty() || trim(lines[0]) != "t,value,unit") {
        throw Error(ErrorKind::data_format, "time series CSV must start with header 't,value,unit'");
    }
    std::vector<double> t;
    std::vector<double> v;
    std::optional<Unit> unit;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const auto cols = split(lines[i], ',');
        if (cols.size() != 3) {
            throw Error(ErrorKind::data_format, "time series CSV row " + std::to_string(i + 1) + " needs 3 columns");
        }
        t.push_back(parse_double(cols[0], "t"));
        v.push_back(parse_double(cols[1], "value"));
        const Unit u = parse_unit(trim(cols[2]));
        if (unit && *unit != u) {
            throw Error(ErrorKind::data_format, "time series CSV mixes units");
        }
        unit = u;
    }
    if (v.empty()) throw Error(ErrorKind::data_format, "time series CSV has no rows");
    double dt = 0.0;
    if (v.size() == 1) {
        if (!dt_hint) throw Error(ErrorKind::data_format, "cannot infer dt from a single-row time series");
        dt = *dt_hint;
    } else {
        dt = round_significant((t.back() - t.front()) / static_cast<double>(t.size() - 1), 10);
    }
    if (!(dt > 0.0)) throw Error(ErrorKind::data_format, "time column must increase");
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double expect = t.front() + static_cast<double>(k) * dt;
        if (std::abs(t[k] - expect) > 1e-9) {
            throw Error(ErrorKind::data_format, "non-uniform sampling at row " + std::to_string(k + 2));
        }
    }
    return TimeSeries(t.front(), dt, std::move(v), *unit);
}

void write_time_series(const std::filesystem::path& path, const TimeSeries& ts) {
    write_file_atomic(path, time_series_csv(ts));
}

TimeSeries read_time_series(const std::filesystem::path& path) {
    try {
        return parse_time_series_csv(read_file(path));
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

std::string frequency_response_csv(const spectral::FrequencyResponse& fr) {
    std::string out = "f_hz,re,im\n";
    for (const auto& p : fr.points) {
        out += format_shortest(p.f_hz);
        out += ',';
        out += format_shortest(p.gain.real());
        out += ',';
        out += format_shortest(p.gain.imag());
        out += '\n';
    }
    return out;
}

spectral::FrequencyResponse parse_frequency_response_csv(const std::string& text) {
    const auto lines = lines_of(text);
    if (lines.empty() || trim(lines[0]) != "f_hz,re,im") {
        throw Error(ErrorKind::data_format, "frequency response CSV must start with header 'f_hz,re,im'");
    }
    spectral::FrequencyResponse fr;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const auto cols = split(lines[i], ',');
        if (cols.size() != 3) {
            throw Error(ErrorKind::data_format, "frequency response row " + std::to_string(i + 1) + " needs 3 columns");
        }
        const double f = parse_double(cols[0], "f_hz");
        if (!(f > 0.0) || (!fr.points.empty() && f <= fr.points.back().f_hz)) {
            throw Error(ErrorKind::data_format, "frequencies must be positive and strictly increasing");
        }
        fr.points.push_back({f, {parse_double(cols[1], "re"), parse_double(cols[2], "im")}});
    }
    if (fr.points.empty()) throw Error(ErrorKind::data_format, "frequency response CSV has no rows");
    return fr;
}

void write_frequency_response(const std::filesystem::path& path, const spectral::FrequencyResponse& fr) {
    write_file_atomic(path, frequency_response_csv(fr));
}

spectral::FrequencyResponse read_frequency_response(const std::filesystem::path& path) {
    try {
        return parse_frequency_response_csv(read_file(path));
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

namespace {
constexpr std::array<const char*, 9> kModelKeys{"i_th_pos", "t_d_pos", "c1_pos", "d0_pos", "i_th_neg",
                                               "t_d_neg",  "c1_neg",  "d0_neg", "output_sign_neg"};
}

std::string muscle_model_text(const model::MuscleModel& m) {
    const std::array<double, 9> values{m.pos.i_th, m.pos.t_d, m.pos.c1, m.pos.d0, m.neg.i_th,
                                       m.neg.t_d,  m.neg.c1,  m.neg.d0, static_cast<double>(m.output_sign_neg)};
    std::string out;
    for (std::size_t i = 0; i < kModelKeys.size(); ++i) {
        out += kModelKeys[i];
        out += " = ";
        out += i + 1 == kModelKeys.size() ? std::to_string(m.output_sign_neg) : format_decimal(values[i]);
        out += '\n';
    }
    return out;
}

model::MuscleModel parse_muscle_model(const std::string& text) {
    std::map<std::string, double> seen;
    for (const auto& [key, value] : key_values(text, "muscle model")) {
        if (std::find(kModelKeys.begin(), kModelKeys.end(), key) == kModelKeys.end()) {
            throw Error(ErrorKind::data_format, "unknown muscle model key '" + key + "'");
        }
        if (seen.count(key)) throw Error(ErrorKind::data_format, "duplicate muscle model key '" + key + "'");
        seen[key] = parse_double(value, key);
    }
    for (const char* key : kModelKeys) {
        if (!seen.count(key)) throw Error(ErrorKind::data_format, std::string("muscle model is missing '") + key + "'");
    }
    model::MuscleModel m;
    m.pos = {seen["i_th_pos"], seen["t_d_pos"], seen["c1_pos"], seen["d0_pos"]};
    m.neg = {seen["i_th_neg"], seen["t_d_neg"], seen["c1_neg"], seen["d0_neg"]};
    const double sign = seen["output_sign_neg"];
    if (sign != 1.0 && sign != -1.0) throw Error(ErrorKind::data_format, "output_sign_neg must be 1 or -1");
    m.output_sign_neg = static_cast<int>(sign);
    try {
        m.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::data_format, std::string("muscle model: ") + e.what());
    }
    return m;
}

std::string rational_tf_text(const model::RationalTF& tf) {
    auto join = [](const std::vector<double>& c) {
        std::string s;
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (i) s += ' ';
            s += format_shortest(c[i]);
        }
        return s;
    };
    return "num = " + join(tf.num()) + "\nden = " + join(tf.den()) + "\n";
}

model::RationalTF parse_rational_tf(const std::string& text) {
    std::optional<std::vector<double>> num;
    std::optional<std::vector<double>> den;
    for (const auto& [key, value] : key_values(text, "transfer function")) {
        std::vector<double> coeffs;
        std::istringstream in(value);
        std::string tok;
        while (in >> tok) coeffs.push_back(parse_double(tok, key));
        if (key == "num") {
            num = coeffs;
        } else if (key == "den") {
            den = coeffs;
        } else {
            throw Error(ErrorKind::data_format, "unknown transfer function key '" + key + "'");
        }
    }
    if (!num || !den) throw Error(ErrorKind::data_format, "transfer function needs num and den lines");
    try {
        return model::RationalTF(*num, *den);
    } catch (const Error& e) {
        throw Error(ErrorKind::data_format, std::string("transfer function: ") + e.what());
    }
}

std::string fit_reports_text(const std::vector<identify::StageReport>& reports) {
    std::string out;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i].report;
        if (i) out += '\n';
        out += "[" + reports[i].stage + "]\n";
        out += "method = " + r.method + "\n";
        out += "n_points = " + std::to_string(r.n_points) + "\n";
        out += "residual_rms = " + format_shortest(r.residual_rms) + "\n";
        out += "condition_estimate = " + format_shortest(r.condition_estimate) + "\n";
        for (const auto& [name, value] : r.params) out += "param." + name + " = " + format_shortest(value) + "\n";
        std::string flags;
        for (std::size_t f = 0; f < r.flags.size(); ++f) flags += (f ? "," : "") + r.flags[f];
        out += "flags = " + flags + "\n";
    }
    return out;
}

std::vector<identify::StageReport> parse_fit_reports(const std::string& text) {
    std::vector<identify::StageReport> out;
    int lineno = 0;
    for (const auto& raw : lines_of(text)) {
        ++lineno;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            out.push_back({line.substr(1, line.size() - 2), {}});
            continue;
        }
        if (out.empty()) throw Error(ErrorKind::data_format, "fit report key before any [stage] header");
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::data_format, "fit report line " + std::to_string(lineno) + " is not key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto& r = out.back().report;
        if (key == "method") {
            r.method = value;
        } else if (key == "n_points") {
            r.n_points = static_cast<std::size_t>(parse_double(value, key));
        } else if (key == "residual_rms") {
            r.residual_rms = parse_double(value, key);
        } else if (key == "condition_estimate") {
            r.condition_estimate = parse_double(value, key);
        } else if (key.rfind("param.", 0) == 0) {
            r.params.emplace_back(key.substr(6), parse_double(value, key));
        } else if (key == "flags") {
            if (!value.empty()) r.flags = split(value, ',');
        } else {
            throw Error(ErrorKind::data_format, "unknown fit report key '" + key + "'");
        }
    }
    return out;
}

std::string metrics_text(const ValidationMetrics& m) {
    return "rmse = " + format_shortest(m.rmse) + "\nfit_percent = " + format_shortest(m.fit_percent) +
           "\nsteady_start = " + format_shortest(m.steady_start) + "\nsteady_end = " + format_shortest(m.steady_end) +
           "\nsteady_rmse = " + format_shortest(m.steady_rmse) + "\n";
}

ValidationMetrics parse_metrics(const std::string& text) {
    ValidationMetrics m;
    int found = 0;
    for (const auto& [key, value] : key_values(text, "metrics")) {
        const double v = parse_double(value, key);
        if (key == "rmse") m.rmse = v;
        else if (key == "fit_percent") m.fit_percent = v;
        else if (key == "steady_start") m.steady_start = v;
        else if (key == "steady_end") m.steady_end = v;
        else if (key == "steady_rmse") m.steady_rmse = v;
        else throw Error(ErrorKind::data_format, "unknown metrics key '" + key + "'");
        ++found;
    }
    if (found != 5) throw Error(ErrorKind::data_format, "metrics file needs exactly five keys");
    return m;
}

std::string manifest_text(const std::vector<ManifestEntry>& entries) {
    std::string out;
    for (const auto& e : entries) {
        out += e.role;
        for (const auto& [k, v] : e.fields) out += " " + k + "=" + v;
        out += '\n';
    }
    return out;
}

std::vector<ManifestEntry> parse_manifest(const std::string& text) {
    std::vector<ManifestEntry> out;
    int lineno = 0;
    for (const auto& raw : lines_of(text)) {
        ++lineno;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        std::istringstream in(line);
        ManifestEntry e;
        in >> e.role;
        std::string tok;
        while (in >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw Error(ErrorKind::data_format, "manifest line " + std::to_string(lineno) + ": expected key=value");
            }
            e.fields.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
        }
        out.push_back(std::move(e));
    }
    return out;
}

identify::IdentificationDataset load_dataset(const std::filesystem::path& manifest_path) {
    const auto entries = parse_manifest(read_file(manifest_path));
    const auto base = manifest_path.parent_path();
    identify::IdentificationDataset ds;
    for (const auto& e : entries) {
        std::map<std::string, std::string> f(e.fields.begin(), e.fields.end());
        auto need = [&](const std::string& key) -> const std::string& {
            const auto it = f.find(key);
            if (it == f.end()) throw Error(ErrorKind::data_format, "manifest role '" + e.role + "' needs " + key + "=");
            return it->second;
        };
        if (e.role == "options") {
            for (const auto& [k, v] : f) {
                if (k == "decimate") ds.decimation_factor = static_cast<int>(parse_double(v, k));
                else if (k == "lag_prefilter") ds.lag_prefilter_hz = parse_double(v, k);
                else if (k == "lag_trim") ds.lag_trim_s = parse_double(v, k);
                else if (k == "onset_baseline") ds.onset_baseline_s = parse_double(v, k);
                else throw Error(ErrorKind::data_format, "unknown manifest option '" + k + "'");
            }
            continue;
        }
        const bool pos = e.role.size() > 4 && e.role.substr(e.role.size() - 4) == "_pos";
        const bool neg = e.role.size() > 4 && e.role.substr(e.role.size() - 4) == "_neg";
        if (!pos && !neg) throw Error(ErrorKind::data_format, "unknown manifest role '" + e.role + "'");
        const std::string kind = e.role.substr(0, e.role.size() - 4);
        auto& rec = pos ? ds.pos : ds.neg;
        identify::TrialRecord trial{read_time_series(base / need("current")), read_time_series(base / need("force"))};
        if (kind == "staircase") {
            signals::StaircaseSchedule s;
            s.start_amplitude = parse_double(need("start"), "start");
            s.step = parse_double(need("step"), "step");
            s.n_levels = static_cast<int>(parse_double(need("levels"), "levels"));
            s.on_time = parse_double(need("on"), "on");
            s.off_time = parse_double(need("off"), "off");
            s.rate = parse_double(need("rate"), "rate");
            rec.staircase.push_back({std::move(trial), s});
        } else if (kind == "step") {
            rec.steps.push_back(std::move(trial));
        } else if (kind == "broadband") {
            rec.broadband.push_back(std::move(trial));
        } else {
            throw Error(ErrorKind::data_format, "unknown manifest role '" + e.role + "'");
        }
    }
    return ds;
}

std::filesystem::path write_dataset(const std::filesystem::path& dir, const identify::IdentificationDataset& ds) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());

    std::vector<ManifestEntry> entries;
    entries.push_back({"options",
                       {{"decimate", std::to_string(ds.decimation_factor)},
                        {"lag_prefilter", format_shortest(ds.lag_prefilter_hz)},
                        {"lag_trim", format_shortest(ds.lag_trim_s)},
                        {"onset_baseline", format_shortest(ds.onset_baseline_s)}}});
    auto emit = [&](const std::string& role, std::size_t index, const identify::TrialRecord& trial,
                    std::vector<std::pair<std::string, std::string>> extra) {
        const std::string stem = role + "_" + std::to_string(index);
        write_time_series(dir / (stem + "_current.csv"), trial.current);
        write_time_series(dir / (stem + "_force.csv"), trial.force);
        std::vector<std::pair<std::string, std::string>> fields{{"current", stem + "_current.csv"},
                                                                {"force", stem + "_force.csv"}};
        fields.insert(fields.end(), extra.begin(), extra.end());
        entries.push_back({role, std::move(fields)});
    };
    for (const auto& [suffix, rec] : {std::pair<std::string, const identify::PolarityRecordings*>{"_pos", &ds.pos},
                                      {"_neg", &ds.neg}}) {
        for (std::size_t i = 0; i < rec->staircase.size(); ++i) {
            const auto& s = rec->staircase[i].schedule;
            emit("staircase" + suffix, i, rec->staircase[i].record,
                 {{"start", format_shortest(s.start_amplitude)}, {"step", format_shortest(s.step)},
                  {"levels", std::to_string(s.n_levels)}, {"on", format_shortest(s.on_time)},
                  {"off", format_shortest(s.off_time)}, {"rate", format_shortest(s.rate)}});
        }
        for (std::size_t i = 0; i < rec->steps.size(); ++i) emit("step" + suffix, i, rec->steps[i], {});
        for (std::size_t i = 0; i < rec->broadband.size(); ++i) emit("broadband" + suffix, i, rec->broadband[i], {});
    }
    const auto manifest = dir / "manifest.txt";
    write_file_atomic(manifest, manifest_text(entries));
    return manifest;
}

}  // namespace fesid::io
