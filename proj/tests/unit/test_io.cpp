#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "fesid/error.hpp"
#include "fesid/io.hpp"
#include "fesid/synthetic.hpp"
#include "fesid/validation.hpp"

using namespace fesid;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorKind::stage;
}

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("fesid_io_") + info->test_suite_name() + "_" + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
};

TimeSeries random_series(std::size_t n, double dt, unsigned seed, Unit unit) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
    return TimeSeries(0.0, dt, v, unit);
}

}  // namespace

TEST(Format, ShortestRoundTrips) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
        EXPECT_EQ(io::parse_double(io::format_shortest(x), "x"), x);
        const std::string d = io::format_decimal(x);
        EXPECT_EQ(d.find_first_of("eE"), std::string::npos) << d;
        EXPECT_EQ(io::parse_double(d, "x"), x);
    }
    EXPECT_EQ(io::format_shortest(0.1), "0.1");
    EXPECT_EQ(io::format_decimal(5e-10), "0.0000000005");
}

TEST(Format, ParseRejectsJunk) {
    EXPECT_EQ(kind_of([] { io::parse_double("1.5x", "x"); }), ErrorKind::data_format);
    EXPECT_EQ(kind_of([] { io::parse_double("", "x"); }), ErrorKind::data_format);
}

TEST(TimeSeriesCsv, RoundTripsValuesExactly) {
    const TimeSeries ts = random_series(500, 1e-4, 2, Unit::newton);
    const std::string text = io::time_series_csv(ts);
    EXPECT_EQ(text.rfind("t,value,unit\n", 0), 0u);
    EXPECT_EQ(text.find('\r'), std::string::npos);
    const TimeSeries back = io::parse_time_series_csv(text);
    EXPECT_EQ(back.size(), ts.size());
    EXPECT_EQ(back.unit(), Unit::newton);
    EXPECT_NEAR(back.dt(), ts.dt(), 1e-15);
    for (std::size_t k = 0; k < ts.size(); ++k) EXPECT_EQ(back[k], ts[k]);
    EXPECT_EQ(io::time_series_csv(back), text);
}

TEST(TimeSeriesCsv, Rejections) {
    EXPECT_EQ(kind_of([] { io::parse_time_series_csv("t,value,unit\n0,1,volt\n0.001,2,volt\n0.0025,3,volt\n"); }),
              ErrorKind::data_format);
    EXPECT_EQ(kind_of([] { io::parse_time_series_csv("time,v\n0,1\n"); }), ErrorKind::data_format);
    EXPECT_EQ(kind_of([] { io::parse_time_series_csv("t,value,unit\n0,1,volt\n0.1,1,ampere\n"); }),
              ErrorKind::data_format);
    EXPECT_EQ(kind_of([] { io::parse_time_series_csv("t,value,unit\n0,1,furlong\n0.1,1,furlong\n"); }),
              ErrorKind::data_format);
    EXPECT_EQ(kind_of([] { io::parse_time_series_csv("t,value,unit\n0,1,volt\n"); }), ErrorKind::data_format);
    EXPECT_EQ(io::parse_time_series_csv("t,value,unit\n0,1,volt\n", 0.01).dt(), 0.01);
    EXPECT_EQ(kind_of([] { io::read_time_series("/nonexistent/fesid.csv"); }), ErrorKind::io);
}

TEST_F(TempDir, AtomicWriteLeavesOnlyTarget) {
    const fs::path p = dir_ / "x.txt";
    io::write_file_atomic(p, "one\n");
    io::write_file_atomic(p, "two\n");
    EXPECT_EQ(io::read_file(p), "two\n");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir_)) ++files;
    EXPECT_EQ(files, 1u);
    EXPECT_EQ(kind_of([&] { io::write_file_atomic(dir_ / "missing" / "x.txt", "a"); }), ErrorKind::io);
}

TEST(FrequencyResponseCsv, RoundTrip) {
    spectral::FrequencyResponse fr;
    for (int k = 1; k <= 20; ++k) fr.points.push_back({k * 0.37, {1.0 / k, -0.3 * k}});
    const auto back = io::parse_frequency_response_csv(io::frequency_response_csv(fr));
    ASSERT_EQ(back.points.size(), fr.points.size());
    for (std::size_t i = 0; i < fr.points.size(); ++i) {
        EXPECT_EQ(back.points[i].f_hz, fr.points[i].f_hz);
        EXPECT_EQ(back.points[i].gain, fr.points[i].gain);
    }
    EXPECT_EQ(kind_of([] { io::parse_frequency_response_csv("f_hz,re,im\n2,1,0\n1,1,0\n"); }), ErrorKind::data_format);
}

TEST(MuscleModelText, RoundTripAndKeyOrder) {
    auto m = synthetic::reference_subject('B');
    m.output_sign_neg = -1;
    const std::string text = io::muscle_model_text(m);
    EXPECT_EQ(text,
              "i_th_pos = 0.0151\nt_d_pos = 0.021\nc1_pos = 0.5789\nd0_pos = 4888.2\n"
              "i_th_neg = 0.0123\nt_d_neg = 0.028\nc1_neg = 0.4325\nd0_neg = 7331.5\noutput_sign_neg = -1\n");
    EXPECT_EQ(io::parse_muscle_model(text), m);

    const std::string shuffled =
        "d0_neg = 7331.5\nc1_neg = 0.4325\nt_d_neg = 0.028\ni_th_neg = 0.0123\noutput_sign_neg = -1\n"
        "d0_pos = 4888.2\nc1_pos = 0.5789\nt_d_pos = 0.021\ni_th_pos = 0.0151\n";
    EXPECT_EQ(io::parse_muscle_model(shuffled), m);
    EXPECT_EQ(kind_of([&] { io::parse_muscle_model(text + "extra = 1\n"); }), ErrorKind::data_format);
    EXPECT_EQ(kind_of([] { io::parse_muscle_model("i_th_pos = 0.01\n"); }), ErrorKind::data_format);
}

TEST(RationalTfText, RoundTrip) {
    const auto tf = model::RationalTF::band_pass(8.0e-10, 2.2e-5, 1.9e-7);
    EXPECT_EQ(io::parse_rational_tf(io::rational_tf_text(tf)), tf);
    EXPECT_EQ(kind_of([] { io::parse_rational_tf("num = 1\n"); }), ErrorKind::data_format);
    EXPECT_EQ(kind_of([] { io::parse_rational_tf("num = 1\nden = 2 1\n"); }), ErrorKind::data_format);
}

TEST(FitReportText, RoundTripKeepsOrder) {
    identify::FitReport a;
    a.method = "arx_ols";
    a.params = {{"alpha", 0.97}, {"beta", 12.5}, {"c1", 0.1889}};
    a.residual_rms = 1.25e-3;
    a.n_points = 3999;
    a.condition_estimate = 1e4;
    a.flags = {"x", "y"};
    identify::FitReport b;
    b.method = "staircase_midpoint";
    b.params = {{"i_th", 0.0144}};
    const std::vector<identify::StageReport> reports{{"positive lag", a}, {"negative staircase", b}};
    const std::string text = io::fit_reports_text(reports);
    EXPECT_EQ(text.rfind("[positive lag]\nmethod = arx_ols\nn_points = 3999\n", 0), 0u);
    const auto back = io::parse_fit_reports(text);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].stage, "positive lag");
    EXPECT_EQ(back[0].report.params, a.params);
    EXPECT_EQ(back[0].report.flags, a.flags);
    EXPECT_EQ(back[0].report.n_points, 3999u);
    EXPECT_EQ(back[1].report.method, "staircase_midpoint");
    EXPECT_TRUE(back[1].report.flags.empty());
    EXPECT_EQ(io::fit_reports_text(back), text);
}

TEST(MetricsText, RoundTrip) {
    const ValidationMetrics m{0.5, 93.25, 0.5, 10.0, 0.125};
    const auto back = io::parse_metrics(io::metrics_text(m));
    EXPECT_EQ(back.rmse, m.rmse);
    EXPECT_EQ(back.fit_percent, m.fit_percent);
    EXPECT_EQ(back.steady_start, m.steady_start);
    EXPECT_EQ(back.steady_end, m.steady_end);
    EXPECT_EQ(back.steady_rmse, m.steady_rmse);
    EXPECT_EQ(kind_of([] { io::parse_metrics("rmse = 1\n"); }), ErrorKind::data_format);
}

TEST_F(TempDir, DatasetRoundTrip) {
    synthetic::Protocol p;
    p.broadband_duration = 1.0;
    p.staircase.n_levels = 2;
    p.step_trials = 2;
    auto ds = synthetic::make_dataset(synthetic::reference_subject('A'), p, 4);
    ds.lag_prefilter_hz = 3.0;
    const fs::path manifest = io::write_dataset(dir_ / "ds", ds);
    EXPECT_TRUE(fs::exists(manifest));
    const auto back = io::load_dataset(manifest);

    EXPECT_EQ(back.decimation_factor, ds.decimation_factor);
    EXPECT_EQ(back.lag_prefilter_hz, 3.0);
    EXPECT_EQ(back.lag_trim_s, ds.lag_trim_s);
    EXPECT_EQ(back.onset_baseline_s, ds.onset_baseline_s);
    ASSERT_EQ(back.pos.steps.size(), 2u);
    ASSERT_EQ(back.neg.broadband.size(), 1u);
    ASSERT_EQ(back.neg.staircase.size(), 1u);
    const auto& s0 = ds.neg.staircase[0].schedule;
    const auto& s1 = back.neg.staircase[0].schedule;
    EXPECT_EQ(s1.start_amplitude, s0.start_amplitude);
    EXPECT_EQ(s1.step, s0.step);
    EXPECT_EQ(s1.n_levels, s0.n_levels);
    EXPECT_EQ(s1.on_time, s0.on_time);
    EXPECT_EQ(s1.off_time, s0.off_time);
    EXPECT_EQ(s1.rate, s0.rate);
    auto same_values = [](const TimeSeries& a, const TimeSeries& b) {
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t k = 0; k < a.size(); ++k) ASSERT_EQ(a[k], b[k]);
    };
    same_values(back.pos.broadband[0].force, ds.pos.broadband[0].force);
    same_values(back.neg.steps[1].current, ds.neg.steps[1].current);
    same_values(back.pos.staircase[0].record.force, ds.pos.staircase[0].record.force);
}

TEST(Manifest, Rejections) {
    EXPECT_EQ(kind_of([] { io::parse_manifest("step_pos current\n"); }), ErrorKind::data_format);
    EXPECT_EQ(kind_of([] { io::load_dataset("/nonexistent/manifest.txt"); }), ErrorKind::io);
    const auto entries = io::parse_manifest("# comment\nstep_pos current=a.csv force=b.csv\n");
    ASSERT_EQ(entries.size(), 1u);
    EXPECT_EQ(entries[0].role, "step_pos");
    EXPECT_EQ(io::parse_manifest(io::manifest_text(entries))[0].fields, entries[0].fields);
}

// --- validation ----------------------------------------------------------------

TEST(Validate, IdentityAndOffset) {
    std::vector<double> y(1000);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] = static_cast<double>((k * 37) % 101);
    const TimeSeries measured(0.0, 1e-3, y, Unit::newton);
    const auto same = validate(measured, measured, 0.5);
    EXPECT_EQ(same.rmse, 0.0);
    EXPECT_EQ(same.fit_percent, 100.0);
    EXPECT_EQ(same.steady_rmse, 0.0);
    EXPECT_DOUBLE_EQ(same.steady_start, 0.5);
    EXPECT_DOUBLE_EQ(same.steady_end, measured.time_at(999));

    std::vector<double> shifted = y;
    for (double& v : shifted) v += 1.0;
    const auto off = validate(measured, measured.with_samples(shifted), 0.5);
    EXPECT_EQ(off.rmse, 1.0);
    EXPECT_EQ(off.steady_rmse, 1.0);
    EXPECT_LT(off.fit_percent, 100.0);

    const auto filtered = validate(measured, measured.with_samples(shifted), 0.5, 100.0);
    EXPECT_NEAR(filtered.rmse, 1.0, 1e-9);
}

TEST(Validate, Errors) {
    const TimeSeries a(0.0, 1e-3, std::vector<double>(100, 1.0), Unit::newton);
    const TimeSeries b(0.0, 1e-3, std::vector<double>(99, 1.0), Unit::newton);
    EXPECT_EQ(kind_of([&] { validate(a, b, 0.01); }), ErrorKind::argument);
    EXPECT_EQ(kind_of([&] { validate(a, a, 0.1); }), ErrorKind::argument);
    EXPECT_EQ(kind_of([&] { validate(a, a, 0.5); }), ErrorKind::argument);
    EXPECT_EQ(kind_of([&] { validate(a, a, -0.1); }), ErrorKind::argument);
}

TEST(Validate, SubjectBSelfConsistency) {
    const auto truth = synthetic::reference_subject('B');
    synthetic::Protocol p;
    const auto fitted = identify::identify_muscle_model(synthetic::make_dataset(truth, p, 6)).model;
    const auto held_out = synthetic::record(truth, synthetic::verification_current(p), p.noise_fraction, 77);
    const TimeSeries predicted = model::predict_force(fitted, held_out.current);
    const auto m = validate(held_out.force, predicted, 0.5, 100.0);
    double peak = 0.0;
    for (double v : signals::lowpass(held_out.force, 100.0).samples()) peak = std::max(peak, std::abs(v));
    EXPECT_LT(m.steady_rmse / peak, 0.05);
}
