// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fesid/cli.hpp"
#include "fesid/error.hpp"
#include "fesid/identify.hpp"
#include "fesid/io.hpp"
#include "fesid/model.hpp"
#include "fesid/signals.hpp"
#include "fesid/spectral.hpp"
#include "fesid/synthetic.hpp"
#include "fesid/validation.hpp"

using namespace fesid;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

// --- 1 ------------------------------------------------------------------------

Outcome resonance() {
    struct Row {
        char subject;
        double a2, a1, b1, expected_khz;
    };
    bool ok = true;
    std::string detail;
    for (const Row r : {Row{'A', 8.0e-10, 2.2e-5, 1.9e-7, 5.6}, Row{'B', 1.2e-9, 4.6e-5, 1.4e-7, 4.6}}) {
        const auto tf = model::RationalTF::band_pass(r.a2, r.a1, r.b1);
        const double f = model::peak_gain_frequency(tf, 100.0, 1e5, 20000);
        const double err = rel(f / 1e3, r.expected_khz);
        ok = ok && err < 0.02;
        detail += fmt("%c %.3f kHz vs %.1f (%.2f%%) ", r.subject, f / 1e3, r.expected_khz, 100 * err);
    }
    return {ok, detail + "tol 2%"};
}

// --- 2 ------------------------------------------------------------------------

Outcome circuit() {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-15.0, 15.0);
    std::vector<double> v1(100000), v3(100000);
    for (auto& x : v1) x = u(rng);
    for (auto& x : v3) x = u(rng) / 10.0;
    const TimeSeries s1(0.0, 1e-5, v1, Unit::volt), s3(0.0, 1e-5, v3, Unit::volt);
    const auto out = model::circuit_reconstruct(s1, s3, {0.2e6, 1.8e6, 100.0});
    const double eps = std::numeric_limits<double>::epsilon();
    double worst_v = 0.0, worst_i = 0.0;
    for (std::size_t k = 0; k < v1.size(); ++k) {
        const double want_v = 10.0 * v1[k] - v3[k];
        const double want_i = v3[k] / 100.0;
        worst_v = std::max(worst_v, std::abs(out.v_app[k] - want_v) / (eps * (10.0 * std::abs(v1[k]) + std::abs(v3[k]))));
        worst_i = std::max(worst_i, std::abs(out.i_flo[k] - want_i) / (eps * std::abs(want_i)));
    }
    // Machine precision: a few rounding steps of the operand magnitude.
    const bool ok = worst_v <= 4.0 && worst_i <= 2.0;
    return {ok, fmt("100000 samples, worst V_app %.1f ulp, I_flo %.1f ulp", worst_v, worst_i)};
}

// --- 3 ------------------------------------------------------------------------

Outcome threshold() {
    std::vector<double> grid;
    for (int k = -400; k <= 400; ++k) grid.push_back(k * 0.05e-3);
    std::size_t checked = 0, wrong = 0, boundary = 0;
    for (int t = 0; t <= 200; ++t) {
        const double i_th = t * 0.1e-3;
        const TimeSeries i(0.0, 1e-4, grid, Unit::ampere);
        const auto pos = model::apply_threshold(i, i_th, model::Polarity::positive);
        const auto neg = model::apply_threshold(i, i_th, model::Polarity::negative);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double x = grid[k];
            const double want_pos = x > i_th ? x - i_th : 0.0;
            const double want_neg = x < -i_th ? -x - i_th : 0.0;
            wrong += pos[k] != want_pos;
            wrong += neg[k] != want_neg;
            if (x == i_th) boundary += pos[k] == 0.0 ? 1 : 0;
            if (x == -i_th) boundary += neg[k] == 0.0 ? 1 : 0;
            checked += 2;
        }
        // Exact boundary sample regardless of grid alignment.
        const TimeSeries edge(0.0, 1e-4, std::vector<double>{i_th, -i_th}, Unit::ampere);
        wrong += model::apply_threshold(edge, i_th, model::Polarity::positive)[0] != 0.0;
        wrong += model::apply_threshold(edge, i_th, model::Polarity::negative)[1] != 0.0;
        checked += 2;
    }
    return {wrong == 0, fmt("%zu points, %zu mismatches, %zu on-grid boundary hits all 0", checked, wrong, boundary)};
}

// --- 4 ------------------------------------------------------------------------

Outcome etfe_lag() {
    const double c1 = 0.1889, fc = 1.0 / (2.0 * std::numbers::pi * c1);
    signals::PulseTrainSpec spec;
    spec.rate = 50.0;
    spec.duration = 120.0;
    spec.fire_probability = 0.5;
    spec.seed = 4;
    spec.unit = Unit::ampere;
    spec.waveform.pos_width = 2e-3;
    spec.waveform.neg_width = 0.0;
    spec.waveform.charge_balanced = false;
    const TimeSeries u = signals::generate_pulse_train(spec, 1e-3);
    const TimeSeries y = model::simulate_lti(model::RationalTF::first_order_lag(c1, 1.0), u, 0.0);
    // 25 ms analysis rate: the 512-point segments then reach fc/10.
    const auto fr = spectral::etfe(signals::decimate(u, 25), signals::decimate(y, 25));
    const auto mag = spectral::magnitude_db(fr);
    double worst = 0.0;
    std::size_t n = 0;
    for (const auto& p : mag) {
        if (p.f_hz < fc / 10.0 || p.f_hz > 10.0 * fc) continue;
        const double want = -10.0 * std::log10(1.0 + (p.f_hz / fc) * (p.f_hz / fc));
        worst = std::max(worst, std::abs(p.db - want));
        ++n;
    }
    const double slope = spectral::slope_db_per_decade(mag, fc, 10.0 * fc);
    const bool ok = n > 0 && worst < 1.0 && std::abs(slope + 20.0) <= 2.0;
    return {ok, fmt("%zu segments, %zu bins in [fc/10,10fc], worst %.3f dB (tol 1), slope %.2f dB/dec (tol -20+-2)",
                    fr.averaging_count, n, worst, slope)};
}

// --- 5 ------------------------------------------------------------------------

struct ChannelErrors {
    bool ok;
    double i_th, t_d, c1, d0;
};

ChannelErrors grade(const model::MuscleChannel& got, const model::MuscleChannel& want, double resolution) {
    ChannelErrors e{true, std::abs(got.i_th - want.i_th), std::abs(got.t_d - want.t_d), rel(got.c1, want.c1),
                    rel(got.d0, want.d0)};
    e.ok = e.i_th <= resolution && e.t_d <= 5e-3 && e.c1 <= 0.10 && e.d0 <= 0.10;
    return e;
}

Outcome end_to_end() {
    synthetic::Protocol p;
    std::string detail;
    bool ok = true;
    for (char subject : {'A', 'B'}) {
        const auto truth = synthetic::reference_subject(subject);
        int passed = 0;
        ChannelErrors worst{true, 0, 0, 0, 0};
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            try {
                const auto m = identify::identify_muscle_model(synthetic::make_dataset(truth, p, seed)).model;
                bool seed_ok = true;
                for (auto pol : {model::Polarity::positive, model::Polarity::negative}) {
                    const auto e = grade(m.channel(pol), truth.channel(pol), p.staircase_resolution());
                    seed_ok = seed_ok && e.ok;
                    worst.i_th = std::max(worst.i_th, e.i_th);
                    worst.t_d = std::max(worst.t_d, e.t_d);
                    worst.c1 = std::max(worst.c1, e.c1);
                    worst.d0 = std::max(worst.d0, e.d0);
                }
                passed += seed_ok;
            } catch (const Error& e) {
                std::printf("    subject %c seed %llu: %s\n", subject, static_cast<unsigned long long>(seed), e.what());
            }
        }
        ok = ok && passed >= 9;
        detail += fmt("%c %d/10 (worst I_th %.2f mA, t_d %.1f ms, c1 %.1f%%, d0 %.1f%%) ", subject, passed,
                      worst.i_th * 1e3, worst.t_d * 1e3, 100 * worst.c1, 100 * worst.d0);
    }
    return {ok, detail + fmt("tol I_th %.2f mA, t_d 5 ms, c1/d0 10%%", p.staircase_resolution() * 1e3)};
}

// --- 6 ------------------------------------------------------------------------

Outcome verification() {
    synthetic::Protocol p;
    bool ok = true;
    std::string detail;
    for (char subject : {'A', 'B'}) {
        const auto truth = synthetic::reference_subject(subject);
        const auto fitted = identify::identify_muscle_model(synthetic::make_dataset(truth, p, 0)).model;
        const auto held_out = synthetic::record(truth, synthetic::verification_current(p), p.noise_fraction,
                                                synthetic::derive_seed(0, 1000));
        const auto m = validate(held_out.force, model::predict_force(fitted, held_out.current), 0.5, 100.0);
        double peak = 0.0;
        for (double v : signals::lowpass(held_out.force, 100.0).samples()) peak = std::max(peak, std::abs(v));
        const double ratio = m.steady_rmse / peak;
        ok = ok && ratio < 0.05;
        detail += fmt("%c steady RMSE %.2f%% of peak %.1f N (fit %.1f%%) ", subject, 100 * ratio, peak, m.fit_percent);
    }
    return {ok, detail + "tol 5%"};
}

// --- 7 ------------------------------------------------------------------------

Outcome cross_method() {
    const double c1 = 0.1889, dt = 1e-3;
    std::mt19937_64 rng(7);
    std::bernoulli_distribution coin(0.5);
    std::vector<double> v(1 << 17);
    for (double& x : v) x = coin(rng) ? 1.0 : 0.0;
    const TimeSeries drive(0.0, dt, v, Unit::ampere);
    const TimeSeries force = model::simulate_lti(model::RationalTF::first_order_lag(c1, 1.0), drive, 0.0);
    const double c1_time = identify::fit_first_order_time(drive, force, 0.0).c1;
    spectral::EtfeOptions eo;
    eo.segment_len = 8192;
    identify::RationalFitOptions ro;
    ro.f_max = 20.0;
    const double c1_freq = identify::fit_rational_freq(spectral::etfe(drive, force, eo), 0, 1, 0, ro).tf.den()[1];
    const double diff = std::abs(c1_time - c1_freq) / c1;
    return {diff < 0.01, fmt("c1 time %.5f s, freq %.5f s, diff %.3f%% (tol 1%%)", c1_time, c1_freq, 100 * diff)};
}

// --- 8 ------------------------------------------------------------------------

int cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int rc = cli::run(args, out, err);
    if (rc != 0) std::printf("    fesid exited %d: %s", rc, err.str().c_str());
    return rc;
}

bool pipeline(const fs::path& dir) {
    const std::string d = dir.string();
    return cli({"gen", "dataset", "--subject", "A", "--seed", "42", "--out-dir", d}) == 0 &&
           cli({"fit", "muscle", "--manifest", d + "/manifest.txt", "--out", d + "/model.txt", "--fitreport",
                d + "/fitreport.txt"}) == 0 &&
           cli({"simulate", "--model", d + "/model.txt", "--current", d + "/verify_current.csv", "--out",
                d + "/predicted.csv"}) == 0 &&
           cli({"validate", "--measured", d + "/verify_force.csv", "--predicted", d + "/predicted.csv", "--lpf",
                "100", "--out", d + "/metrics.txt"}) == 0 &&
           cli({"report", "--model", "A=" + d + "/model.txt", "--fitreport", "A=" + d + "/fitreport.txt",
                "--metrics", "A=" + d + "/metrics.txt", "--out-dir", d + "/report"}) == 0;
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "fesid_acceptance_determinism";
    fs::remove_all(root);
    const fs::path a = root / "a", b = root / "b";
    if (!pipeline(a) || !pipeline(b)) {
        fs::remove_all(root);
        return {false, "pipeline run failed"};
    }
    std::size_t files = 0, differing = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        const fs::path other = b / fs::relative(e.path(), a);
        ++files;
        if (!fs::exists(other) || io::read_file(e.path()) != io::read_file(other)) {
            ++differing;
            std::printf("    differs: %s\n", fs::relative(e.path(), a).string().c_str());
        }
    }
    std::size_t files_b = 0;
    for (const auto& e : fs::recursive_directory_iterator(b)) files_b += e.is_regular_file();
    fs::remove_all(root);
    return {files > 0 && differing == 0 && files == files_b,
            fmt("%zu files compared, %zu differ", files, differing)};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;  // <= 0: no runtime bound
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "resonance frequency", 1.0, resonance},
        {2, "circuit algebra", 1.0, circuit},
        {3, "threshold nonlinearity", 1.0, threshold},
        {4, "ETFE of first-order lag", 10.0, etfe_lag},
        {5, "synthetic end-to-end recovery", 120.0, end_to_end},
        {6, "verification self-consistency", 30.0, verification},
        {7, "cross-method agreement", 0.0, cross_method},
        {8, "determinism", 0.0, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o{false, ""};
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.budget_s <= 0.0 || s < c.budget_s;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::string timing = fmt("%.2f s", s);
        if (c.budget_s > 0.0) timing += fmt(" (budget %.0f s)", c.budget_s);
        std::printf("[%s] %d %s: %s; %s\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), timing.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
