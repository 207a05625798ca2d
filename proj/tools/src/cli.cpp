#include "fesid/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fesid/error.hpp"
#include "fesid/identify.hpp"
#include "fesid/io.hpp"
#include "fesid/model.hpp"
#include "fesid/signals.hpp"
#include "fesid/spectral.hpp"
#include "fesid/synthetic.hpp"
#include "fesid/validation.hpp"

namespace fesid::cli {

namespace fs = std::filesystem;

namespace {

// Parsed flag values, shared by all subcommands.
struct Options {
    std::string out;
    std::string out_dir;
    double dt = 1e-4;
    std::string unit = "volt";
    std::uint64_t seed = 0;

    // gen mseq
    int register_length = 10;
    double carrier = 10000.0;
    double amplitude = 10.0;
    int periods = 1;

    // gen pulsetrain / staircase / step
    double rate = 1000.0;
    double duration = 1.0;
    double probability = 0.5;
    double lead_width = 0.5e-3;
    double return_ratio = 0.1;
    bool inverted = false;
    double start = 6.0;
    double step = 2.0;
    int levels = 5;
    double on_time = 1.0;
    double off_time = 1.0;
    double onset = 0.5;
    double width = 0.5;

    // gen dataset
    std::string subject = "A";
    double noise = 0.02;
    double broadband_duration = 20.0;

    // etfe
    std::string input;
    std::string output;
    std::size_t nfft = 512;
    double overlap = 0.5;
    int decimate = 1;

    // fit
    std::string fr;
    std::string drive;
    std::string force;
    double deadtime = 0.0;
    double fmin = 0.0;
    double fmax = 0.0;
    std::string fitreport;
    std::string manifest;

    // simulate / validate
    std::string model;
    std::string current;
    std::string measured;
    std::string predicted;
    double settle = 0.5;
    double lpf = 0.0;

    // report
    std::vector<std::string> models;
    std::vector<std::string> fitreports;
    std::vector<std::string> gvis;
    std::vector<std::string> metrics;
    std::string tf;
};

Unit unit_flag(const std::string& s) {
    try {
        return parse_unit(s);
    } catch (const Error& e) {
        throw Error(ErrorKind::argument, e.what());
    }
}

void note_written(std::ostream& out, const fs::path& path) { out << "wrote " << path.string() << '\n'; }

std::string fixed(double v, int digits = 6) {
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

// --- gen ---------------------------------------------------------------------

signals::BiphasicWaveform lead_waveform(const Options& o, double amplitude) {
    signals::BiphasicWaveform w = signals::BiphasicWaveform::one_sided(amplitude, o.lead_width, o.return_ratio);
    return o.inverted ? w.mirrored() : w;
}

void gen_mseq(const Options& o, std::ostream& out) {
    const TimeSeries ts =
        signals::generate_mseq(o.register_length, o.carrier, o.amplitude, o.periods, o.dt, unit_flag(o.unit));
    io::write_time_series(o.out, ts);
    note_written(out, o.out);
}

void gen_pulsetrain(const Options& o, std::ostream& out) {
    signals::PulseTrainSpec spec;
    spec.rate = o.rate;
    spec.duration = o.duration;
    spec.waveform = lead_waveform(o, o.amplitude);
    spec.fire_probability = o.probability;
    spec.seed = o.seed;
    spec.unit = unit_flag(o.unit);
    io::write_time_series(o.out, signals::generate_pulse_train(spec, o.dt));
    note_written(out, o.out);
}

void gen_staircase(const Options& o, std::ostream& out) {
    signals::StaircaseSchedule s{o.start, o.step, o.levels, o.on_time, o.off_time, o.rate};
    const TimeSeries ts = signals::generate_staircase(s, lead_waveform(o, 1.0), o.dt, unit_flag(o.unit));
    io::write_time_series(o.out, ts);
    note_written(out, o.out);
    for (int k = 0; k < s.n_levels; ++k) {
        out << "level " << k << ": " << fixed(s.level_amplitude(k)) << '\n';
    }
}

void gen_step(const Options& o, std::ostream& out) {
    io::write_time_series(o.out,
                          signals::generate_step(o.amplitude, o.onset, o.width, o.duration, o.dt, unit_flag(o.unit)));
    note_written(out, o.out);
}

void gen_dataset(const Options& o, std::ostream& out) {
    if (o.subject.size() != 1) throw Error(ErrorKind::argument, "--subject must be A or B");
    const model::MuscleModel truth = synthetic::reference_subject(o.subject[0]);
    synthetic::Protocol p;
    p.dt = o.dt;
    p.noise_fraction = o.noise;
    p.broadband_duration = o.broadband_duration;
    const identify::IdentificationDataset ds = synthetic::make_dataset(truth, p, o.seed);
    const fs::path dir = o.out_dir;
    const fs::path manifest = io::write_dataset(dir, ds);
    io::write_file_atomic(dir / "truth.txt", io::muscle_model_text(truth));

    const TimeSeries current = synthetic::verification_current(p);
    const identify::TrialRecord held_out =
        synthetic::record(truth, current, p.noise_fraction, synthetic::derive_seed(o.seed, 1000));
    io::write_time_series(dir / "verify_current.csv", held_out.current);
    io::write_time_series(dir / "verify_force.csv", held_out.force);
    note_written(out, manifest);
}

// --- etfe --------------------------------------------------------------------

void run_etfe(const Options& o, std::ostream& out) {
    TimeSeries x = io::read_time_series(o.input);
    TimeSeries y = io::read_time_series(o.output);
    if (o.decimate > 1) {
        x = signals::decimate(x, o.decimate);
        y = signals::decimate(y, o.decimate);
    }
    const spectral::FrequencyResponse fr = spectral::etfe(x, y, o.nfft, o.overlap);
    io::write_frequency_response(o.out, fr);
    out << "segments " << fr.averaging_count << ", points " << fr.points.size() << '\n';
    note_written(out, o.out);
}

// --- fit ---------------------------------------------------------------------

identify::RationalFitOptions band(const Options& o) {
    identify::RationalFitOptions opts;
    opts.f_min = o.fmin;
    if (o.fmax > 0.0) opts.f_max = o.fmax;
    return opts;
}

void write_fit(const Options& o, std::ostream& out, const std::string& model_text,
               const std::vector<identify::StageReport>& reports) {
    io::write_file_atomic(o.out, model_text);
    note_written(out, o.out);
    if (!o.fitreport.empty()) {
        io::write_file_atomic(o.fitreport, io::fit_reports_text(reports));
        note_written(out, o.fitreport);
    }
}

void fit_gvi(const Options& o, std::ostream& out) {
    if (o.fr.empty()) throw Error(ErrorKind::argument, "fit gvi needs --fr");
    const auto fr = io::read_frequency_response(o.fr);
    const identify::RationalFit fit = identify::fit_rational_freq(fr, 1, 2, 1, band(o));
    const auto& den = fit.tf.den();
    out << "resonance_hz " << fixed(model::band_pass_resonance_hz(den.at(2))) << '\n';
    write_fit(o, out, io::rational_tf_text(fit.tf), {{"gvi", fit.report}});
}

void fit_gif(const Options& o, std::ostream& out) {
    if (!o.fr.empty()) {
        if (!o.drive.empty() || !o.force.empty()) {
            throw Error(ErrorKind::argument, "fit gif takes either --fr or --drive/--force, not both");
        }
        const auto fr = io::read_frequency_response(o.fr);
        const identify::RationalFit fit = identify::fit_rational_freq(fr, 0, 1, 0, band(o));
        out << "c1 " << fixed(fit.tf.den().at(1)) << ", d0 " << fixed(fit.tf.num().at(0)) << '\n';
        write_fit(o, out, io::rational_tf_text(fit.tf), {{"gif", fit.report}});
        return;
    }
    if (o.drive.empty() || o.force.empty()) {
        throw Error(ErrorKind::argument, "fit gif needs --fr or both --drive and --force");
    }
    const TimeSeries drive = io::read_time_series(o.drive);
    const TimeSeries force = io::read_time_series(o.force);
    const identify::FirstOrderFit fit = identify::fit_first_order_time(drive, force, o.deadtime);
    if (!std::isfinite(fit.c1)) {
        throw Error(ErrorKind::unidentifiable, "force is identically zero; time constant not identifiable");
    }
    out << "c1 " << fixed(fit.c1) << ", d0 " << fixed(fit.d0) << '\n';
    write_fit(o, out, io::rational_tf_text(model::RationalTF::first_order_lag(fit.c1, fit.d0)), {{"gif", fit.report}});
}

void fit_muscle(const Options& o, std::ostream& out) {
    const identify::IdentificationDataset ds = io::load_dataset(o.manifest);
    const identify::IdentificationResult result = identify::identify_muscle_model(ds);
    write_fit(o, out, io::muscle_model_text(result.model), result.stages);
}

// --- simulate / validate -------------------------------------------------------

bool looks_like_tf(const std::string& text) {
    return text.find("num") != std::string::npos && text.find("den") != std::string::npos;
}

void run_simulate(const Options& o, std::ostream& out, std::ostream& err) {
    const std::string text = io::read_file(o.model);
    const TimeSeries current = io::read_time_series(o.current);
    TimeSeries force = current;
    if (looks_like_tf(text)) {
        force = model::simulate_lti(io::parse_rational_tf(text), current, o.deadtime, unit_flag(o.unit));
    } else {
        const model::MuscleModel m = io::parse_muscle_model(text);
        for (const auto& w : model::prediction_warnings(m, current.dt())) err << "warning: " << w << '\n';
        force = model::predict_force(m, current);
    }
    io::write_time_series(o.out, force);
    note_written(out, o.out);
}

void run_validate(const Options& o, std::ostream& out) {
    const TimeSeries measured = io::read_time_series(o.measured);
    const TimeSeries predicted = io::read_time_series(o.predicted);
    std::optional<double> lpf;
    if (o.lpf > 0.0) lpf = o.lpf;
    const ValidationMetrics m = validate(measured, predicted, o.settle, lpf);
    const std::string text = io::metrics_text(m);
    if (!o.out.empty()) {
        io::write_file_atomic(o.out, text);
        note_written(out, o.out);
    } else {
        out << text;
    }
}

// --- report --------------------------------------------------------------------

// "LABEL=path" or a bare path labelled by its stem.
std::pair<std::string, std::string> labelled(const std::string& arg) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) return {fs::path(arg).stem().string(), arg};
    if (eq == 0 || eq + 1 == arg.size()) throw Error(ErrorKind::argument, "expected LABEL=path, got '" + arg + "'");
    return {arg.substr(0, eq), arg.substr(eq + 1)};
}

template <typename T, typename Parse>
std::vector<std::pair<std::string, T>> load_labelled(const std::vector<std::string>& args, Parse parse) {
    std::vector<std::pair<std::string, T>> out;
    for (const auto& a : args) {
        const auto [label, path] = labelled(a);
        out.emplace_back(label, parse(io::read_file(path)));
    }
    return out;
}

std::string table_row(const std::string& name, const std::vector<std::string>& cells) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-10s", name.c_str());
    std::string row = buf;
    for (const auto& c : cells) {
        std::snprintf(buf, sizeof buf, " %14s", c.c_str());
        row += buf;
    }
    return row + '\n';
}

std::string threshold_flag(const std::vector<identify::StageReport>* reports, const std::string& stage) {
    if (reports == nullptr) return "-";
    for (const auto& r : *reports) {
        if (r.stage.rfind(stage, 0) == 0) return r.report.has_flag("lower_bound_unknown") ? "lower_bound" : "ok";
    }
    return "-";
}

std::string summary_text(const std::vector<std::pair<std::string, model::RationalTF>>& gvis,
                         const std::vector<std::pair<std::string, model::MuscleModel>>& models,
                         const std::map<std::string, std::vector<identify::StageReport>>& reports,
                         const std::vector<std::pair<std::string, ValidationMetrics>>& metrics) {
    std::string s;
    auto header = [&](const std::string& title, const std::vector<std::string>& labels) {
        if (!s.empty()) s += '\n';
        s += title + '\n';
        s += table_row("param", labels);
    };

    if (!gvis.empty()) {
        std::vector<std::string> labels;
        for (const auto& [l, tf] : gvis) labels.push_back(l);
        header("G_VI = b1 s / (a2 s^2 + a1 s + 1)", labels);
        auto row = [&](const std::string& name, auto get) {
            std::vector<std::string> cells;
            for (const auto& [l, tf] : gvis) cells.push_back(get(tf));
            s += table_row(name, cells);
        };
        auto coef = [](const std::vector<double>& v, std::size_t i) { return i < v.size() ? fixed(v[i], 4) : "0"; };
        row("a2", [&](const model::RationalTF& tf) { return coef(tf.den(), 2); });
        row("a1", [&](const model::RationalTF& tf) { return coef(tf.den(), 1); });
        row("b1", [&](const model::RationalTF& tf) { return coef(tf.num(), 1); });
        row("f_res_hz", [&](const model::RationalTF& tf) {
            return tf.den().size() > 2 && tf.den()[2] > 0.0 ? fixed(model::band_pass_resonance_hz(tf.den()[2]), 5)
                                                             : std::string("-");
        });
    }

    if (!models.empty()) {
        std::vector<std::string> labels;
        for (const auto& [l, m] : models) labels.push_back(l);
        auto row = [&](const std::string& name, auto get) {
            std::vector<std::string> cells;
            for (const auto& [l, m] : models) cells.push_back(get(l, m));
            s += table_row(name, cells);
        };
        auto rep = [&](const std::string& l) -> const std::vector<identify::StageReport>* {
            const auto it = reports.find(l);
            return it == reports.end() ? nullptr : &it->second;
        };
        header("Dead time t_d [s]", labels);
        row("t_d+", [](const std::string&, const model::MuscleModel& m) { return fixed(m.pos.t_d, 3); });
        row("t_d-", [](const std::string&, const model::MuscleModel& m) { return fixed(m.neg.t_d, 3); });
        header("Threshold current I_th [mA]", labels);
        row("I_th+", [](const std::string&, const model::MuscleModel& m) { return fixed(m.pos.i_th * 1e3, 3); });
        row("I_th-", [](const std::string&, const model::MuscleModel& m) { return fixed(m.neg.i_th * 1e3, 3); });
        row("flag+", [&](const std::string& l, const model::MuscleModel&) {
            return threshold_flag(rep(l), "positive staircase");
        });
        row("flag-", [&](const std::string& l, const model::MuscleModel&) {
            return threshold_flag(rep(l), "negative staircase");
        });
        header("First-order lag G_IF = d0 / (c1 s + 1)", labels);
        row("c1+", [](const std::string&, const model::MuscleModel& m) { return fixed(m.pos.c1, 4); });
        row("d0+", [](const std::string&, const model::MuscleModel& m) { return fixed(m.pos.d0, 5); });
        row("c1-", [](const std::string&, const model::MuscleModel& m) { return fixed(m.neg.c1, 4); });
        row("d0-", [](const std::string&, const model::MuscleModel& m) { return fixed(m.neg.d0, 5); });
    }

    if (!metrics.empty()) {
        std::vector<std::string> labels;
        for (const auto& [l, m] : metrics) labels.push_back(l);
        header("Validation", labels);
        auto row = [&](const std::string& name, auto get) {
            std::vector<std::string> cells;
            for (const auto& [l, m] : metrics) cells.push_back(fixed(get(m), 4));
            s += table_row(name, cells);
        };
        row("rmse", [](const ValidationMetrics& m) { return m.rmse; });
        row("fit_pct", [](const ValidationMetrics& m) { return m.fit_percent; });
        row("steady", [](const ValidationMetrics& m) { return m.steady_rmse; });
    }
    return s;
}

// ETFE magnitude and the fitted curve on the ETFE frequency grid.
std::string magnitude_csv(const spectral::FrequencyResponse& fr, const model::RationalTF* tf) {
    std::string s = tf ? "f_hz,etfe_db,model_db\n" : "f_hz,etfe_db\n";
    for (const auto& p : spectral::magnitude_db(fr)) {
        s += io::format_shortest(p.f_hz) + "," + io::format_shortest(p.db);
        if (tf) s += "," + io::format_shortest(20.0 * std::log10(std::abs(model::eval_freq(*tf, p.f_hz))));
        s += '\n';
    }
    return s;
}

void run_report(const Options& o, std::ostream& out) {
    const auto gvis = load_labelled<model::RationalTF>(o.gvis, io::parse_rational_tf);
    const auto models = load_labelled<model::MuscleModel>(o.models, io::parse_muscle_model);
    const auto metrics = load_labelled<ValidationMetrics>(o.metrics, io::parse_metrics);
    std::map<std::string, std::vector<identify::StageReport>> reports;
    for (auto& [l, r] : load_labelled<std::vector<identify::StageReport>>(o.fitreports, io::parse_fit_reports)) {
        reports[l] = std::move(r);
    }
    if (gvis.empty() && models.empty() && metrics.empty() && o.fr.empty()) {
        throw Error(ErrorKind::argument, "report needs at least one of --gvi, --model, --metrics, --fr");
    }
    const fs::path dir = o.out_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());

    if (!gvis.empty() || !models.empty() || !metrics.empty()) {
        const std::string summary = summary_text(gvis, models, reports, metrics);
        io::write_file_atomic(dir / "summary.txt", summary);
        out << summary;
        note_written(out, dir / "summary.txt");
    }
    if (!o.fr.empty()) {
        const auto fr = io::read_frequency_response(o.fr);
        std::optional<model::RationalTF> tf;
        if (!o.tf.empty()) tf = io::parse_rational_tf(io::read_file(o.tf));
        io::write_file_atomic(dir / "magnitude.csv", magnitude_csv(fr, tf ? &*tf : nullptr));
        note_written(out, dir / "magnitude.csv");
    }
}

// --- wiring --------------------------------------------------------------------

void add_out(CLI::App* cmd, Options& o) { cmd->add_option("--out", o.out, "Output file")->required(); }

void add_time_axis(CLI::App* cmd, Options& o) {
    cmd->add_option("--dt", o.dt, "Sample period [s]")->capture_default_str();
    cmd->add_option("--unit", o.unit, "volt, ampere, newton or dimensionless")->capture_default_str();
}

void add_waveform(CLI::App* cmd, Options& o) {
    cmd->add_option("--lead-width", o.lead_width, "Leading phase width [s]")->capture_default_str();
    cmd->add_option("--return-ratio", o.return_ratio, "Return phase amplitude ratio")->capture_default_str();
    cmd->add_flag("--inverted", o.inverted, "Leading phase drives negative current");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"FES current-to-force system identification"};
    app.name("fesid");
    app.require_subcommand(1, 1);

    auto* gen = app.add_subcommand("gen", "Generate excitation signals and synthetic datasets");
    gen->require_subcommand(1, 1);

    auto* mseq = gen->add_subcommand("mseq", "Maximal-length sequence");
    mseq->add_option("--register", o.register_length, "LFSR length")->capture_default_str();
    mseq->add_option("--carrier", o.carrier, "Chip rate [Hz]")->capture_default_str();
    mseq->add_option("--amplitude", o.amplitude, "Chip amplitude")->capture_default_str();
    mseq->add_option("--periods", o.periods, "Sequence periods")->capture_default_str();
    add_time_axis(mseq, o);
    add_out(mseq, o);

    auto* train = gen->add_subcommand("pulsetrain", "Bernoulli-fired pulse train");
    train->add_option("--rate", o.rate, "Slots per second")->capture_default_str();
    train->add_option("--duration", o.duration, "Duration [s]")->capture_default_str();
    train->add_option("--probability", o.probability, "Firing probability per slot")->capture_default_str();
    train->add_option("--amplitude", o.amplitude, "Leading phase amplitude")->capture_default_str();
    train->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
    add_waveform(train, o);
    add_time_axis(train, o);
    add_out(train, o);

    auto* stair = gen->add_subcommand("staircase", "Stepwise amplitude protocol");
    stair->add_option("--start", o.start, "First level amplitude")->capture_default_str();
    stair->add_option("--step", o.step, "Level increment")->capture_default_str();
    stair->add_option("--levels", o.levels, "Number of levels")->capture_default_str();
    stair->add_option("--on", o.on_time, "On time per level [s]")->capture_default_str();
    stair->add_option("--off", o.off_time, "Off time per level [s]")->capture_default_str();
    stair->add_option("--rate", o.rate, "Pulse rate while on [pps]")->default_val(10.0);
    add_waveform(stair, o);
    add_time_axis(stair, o);
    add_out(stair, o);

    auto* step = gen->add_subcommand("step", "Rectangular pulse");
    step->add_option("--amplitude", o.amplitude, "Amplitude")->capture_default_str();
    step->add_option("--onset", o.onset, "Onset [s]")->capture_default_str();
    step->add_option("--width", o.width, "Width [s]")->capture_default_str();
    step->add_option("--duration", o.duration, "Record length [s]")->capture_default_str();
    add_time_axis(step, o);
    add_out(step, o);

    auto* dataset = gen->add_subcommand("dataset", "Synthetic identification dataset from a reference subject");
    dataset->add_option("--subject", o.subject, "A or B")->capture_default_str();
    dataset->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
    dataset->add_option("--noise", o.noise, "Sensor noise sigma as a fraction of record peak")->capture_default_str();
    dataset->add_option("--broadband-duration", o.broadband_duration, "Broadband trial length [s]")
        ->capture_default_str();
    dataset->add_option("--dt", o.dt, "Sample period [s]")->capture_default_str();
    dataset->add_option("--out-dir", o.out_dir, "Output directory")->required();

    auto* etfe = app.add_subcommand("etfe", "Welch-averaged empirical transfer function estimate");
    etfe->add_option("--input", o.input, "Input series CSV")->required();
    etfe->add_option("--output", o.output, "Output series CSV")->required();
    etfe->add_option("--nfft", o.nfft, "Segment length (power of two)")->capture_default_str();
    etfe->add_option("--overlap", o.overlap, "Segment overlap fraction")->capture_default_str();
    etfe->add_option("--decimate", o.decimate, "Decimate both series first")->capture_default_str();
    add_out(etfe, o);

    auto* fit = app.add_subcommand("fit", "Fit model parameters");
    fit->require_subcommand(1, 1);
    auto add_fit_common = [&](CLI::App* cmd) {
        add_out(cmd, o);
        cmd->add_option("--fitreport", o.fitreport, "Fit report output");
    };
    auto* gvi = fit->add_subcommand("gvi", "Voltage-to-current band-pass b1 s / (a2 s^2 + a1 s + 1)");
    gvi->add_option("--fr", o.fr, "Frequency response CSV")->required();
    gvi->add_option("--fmin", o.fmin, "Lowest frequency used [Hz]");
    gvi->add_option("--fmax", o.fmax, "Highest frequency used [Hz]");
    add_fit_common(gvi);
    auto* gif = fit->add_subcommand("gif", "Current-to-force first-order lag d0 / (c1 s + 1)");
    gif->add_option("--fr", o.fr, "Frequency response CSV");
    gif->add_option("--fmin", o.fmin, "Lowest frequency used [Hz]");
    gif->add_option("--fmax", o.fmax, "Highest frequency used [Hz]");
    gif->add_option("--drive", o.drive, "Thresholded current CSV");
    gif->add_option("--force", o.force, "Force CSV");
    gif->add_option("--deadtime", o.deadtime, "Dead time [s]")->capture_default_str();
    add_fit_common(gif);
    auto* muscle = fit->add_subcommand("muscle", "Full two-channel pipeline from a dataset manifest");
    muscle->add_option("--manifest", o.manifest, "Dataset manifest")->required();
    add_fit_common(muscle);

    auto* sim = app.add_subcommand("simulate", "Predict force from a current record");
    sim->add_option("--model", o.model, "Muscle model or transfer function file")->required();
    sim->add_option("--current", o.current, "Current CSV")->required();
    sim->add_option("--deadtime", o.deadtime, "Dead time for a transfer function model [s]")->capture_default_str();
    sim->add_option("--unit", o.unit, "Output unit for a transfer function model")->default_val("newton");
    add_out(sim, o);

    auto* val = app.add_subcommand("validate", "Compare predicted and measured force");
    val->add_option("--measured", o.measured, "Measured force CSV")->required();
    val->add_option("--predicted", o.predicted, "Predicted force CSV")->required();
    val->add_option("--settle", o.settle, "Start of the steady window [s]")->capture_default_str();
    val->add_option("--lpf", o.lpf, "Zero-phase low-pass on both series [Hz]");
    val->add_option("--out", o.out, "Metrics output (stdout if omitted)");

    auto* rep = app.add_subcommand("report", "Summary tables and plot data");
    rep->add_option("--model", o.models, "Muscle model, LABEL=path");
    rep->add_option("--fitreport", o.fitreports, "Fit report for a model label, LABEL=path");
    rep->add_option("--gvi", o.gvis, "Voltage-to-current transfer function, LABEL=path");
    rep->add_option("--metrics", o.metrics, "Validation metrics, LABEL=path");
    rep->add_option("--fr", o.fr, "ETFE points for the magnitude plot");
    rep->add_option("--tf", o.tf, "Fitted transfer function for the magnitude plot");
    rep->add_option("--out-dir", o.out_dir, "Output directory")->required();

    std::vector<const char*> argv{"fesid"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_code_for(ErrorKind::argument);
    }

    std::string stage;
    try {
        if (mseq->parsed()) {
            stage = "gen mseq";
            gen_mseq(o, out);
        } else if (train->parsed()) {
            stage = "gen pulsetrain";
            gen_pulsetrain(o, out);
        } else if (stair->parsed()) {
            stage = "gen staircase";
            gen_staircase(o, out);
        } else if (step->parsed()) {
            stage = "gen step";
            gen_step(o, out);
        } else if (dataset->parsed()) {
            stage = "gen dataset";
            gen_dataset(o, out);
        } else if (etfe->parsed()) {
            stage = "etfe";
            run_etfe(o, out);
        } else if (gvi->parsed()) {
            stage = "fit gvi";
            fit_gvi(o, out);
        } else if (gif->parsed()) {
            stage = "fit gif";
            fit_gif(o, out);
        } else if (muscle->parsed()) {
            stage = "fit muscle";
            fit_muscle(o, out);
        } else if (sim->parsed()) {
            stage = "simulate";
            run_simulate(o, out, err);
        } else if (val->parsed()) {
            stage = "validate";
            run_validate(o, out);
        } else {
            stage = "report";
            run_report(o, out);
        }
    } catch (const Error& e) {
        err << "fesid " << stage << ": " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "fesid " << stage << ": " << e.what() << '\n';
        return exit_code_for(ErrorKind::stage);
    }
    return 0;
}

}  // namespace fesid::cli
