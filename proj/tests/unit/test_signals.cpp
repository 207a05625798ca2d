#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "fesid/error.hpp"
#include "fesid/signals.hpp"

using namespace fesid;
using namespace fesid::signals;

namespace {

TimeSeries sine(double f, double amp, double dt, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = amp * std::sin(2.0 * std::numbers::pi * f * k * dt);
    return TimeSeries(0.0, dt, v, Unit::volt);
}

// Least-squares amplitude of a sinusoid at f over [begin, end).
double fitted_amplitude(const TimeSeries& ts, double f, std::size_t begin, std::size_t end) {
    double ss = 0, sc = 0, s2 = 0, c2 = 0, cs = 0;
    for (std::size_t k = begin; k < end; ++k) {
        const double w = 2.0 * std::numbers::pi * f * ts.time_at(k);
        const double s = std::sin(w), c = std::cos(w);
        ss += ts[k] * s;
        sc += ts[k] * c;
        s2 += s * s;
        c2 += c * c;
        cs += s * c;
    }
    const double det = s2 * c2 - cs * cs;
    const double a = (ss * c2 - sc * cs) / det;
    const double b = (sc * s2 - ss * cs) / det;
    return std::hypot(a, b);
}

// Magnitude of one bilinear, prewarped 2nd-order Butterworth pass; the
// forward-backward filter applies it squared.
double butterworth_gain(double f, double fc, double dt) {
    const double r = std::tan(std::numbers::pi * f * dt) / std::tan(std::numbers::pi * fc * dt);
    return 1.0 / std::sqrt(1.0 + std::pow(r, 4));
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorKind::stage;
}

}  // namespace

TEST(Mseq, PeriodSevenForThreeStageRegister) {
    const auto chips = mseq_chips(3);
    ASSERT_EQ(chips.size(), 7u);
    const TimeSeries ts = generate_mseq(3, 1000.0, 1.0, 3, 1e-3);
    ASSERT_EQ(ts.size(), 21u);
    for (std::size_t k = 0; k < 14; ++k) EXPECT_EQ(ts[k], ts[k + 7]);
}

TEST(Mseq, BalanceFourHighThreeLow) {
    const TimeSeries ts = generate_mseq(3, 1000.0, 10.0, 1, 1e-3);
    int hi = 0, lo = 0;
    for (double v : ts.samples()) (v == 10.0 ? hi : lo)++;
    EXPECT_EQ(hi, 4);
    EXPECT_EQ(lo, 3);
}

TEST(Mseq, ReferenceConfigurationValues) {
    const TimeSeries ts = generate_mseq(10, 10000.0, 10.0, 1, 1e-6);
    EXPECT_EQ(ts.size(), 1023u * 100u);
    for (double v : ts.samples()) EXPECT_TRUE(v == 10.0 || v == -10.0);
    // Chips are held for 100 samples at 1 us.
    for (std::size_t k = 0; k < 100; ++k) EXPECT_EQ(ts[k], ts[0]);
}

TEST(Mseq, CircularAutocorrelationIsTwoValued) {
    for (int n : {3, 5, 7, 10}) {
        const auto c = mseq_chips(n);
        const long len = static_cast<long>(c.size());
        ASSERT_EQ(len, (1L << n) - 1);
        for (long lag = 1; lag < len; ++lag) {
            long acc = 0;
            for (long k = 0; k < len; ++k) acc += c[k] * c[(k + lag) % len];
            EXPECT_EQ(acc, -1) << "n=" << n << " lag=" << lag;
        }
    }
}

TEST(Mseq, Errors) {
    EXPECT_EQ(kind_of([] { mseq_chips(1); }), ErrorKind::configuration);
    EXPECT_EQ(kind_of([] { mseq_chips(32); }), ErrorKind::configuration);
    EXPECT_EQ(kind_of([] { generate_mseq(5, 3000.0, 1.0, 1, 1e-4); }), ErrorKind::resolution);
}

TEST(PulseTrain, ZeroProbabilityIsSilent) {
    PulseTrainSpec spec;
    spec.rate = 100;
    spec.duration = 1.0;
    spec.fire_probability = 0.0;
    const TimeSeries ts = generate_pulse_train(spec, 1e-4);
    for (double v : ts.samples()) EXPECT_EQ(v, 0.0);
}

TEST(PulseTrain, CertainFiringGivesEveryInstance) {
    PulseTrainSpec spec;
    spec.rate = 10;
    spec.duration = 1.0;
    spec.fire_probability = 1.0;
    const TimeSeries ts = generate_pulse_train(spec, 1e-4);
    int rising = 0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const double prev = k == 0 ? 0.0 : ts[k - 1];
        if (ts[k] > 0.0 && prev <= 0.0) ++rising;
    }
    EXPECT_EQ(rising, 10);
}

TEST(PulseTrain, FiredSlotsMatchIndependentReplay) {
    PulseTrainSpec spec;
    spec.rate = 1000;
    spec.duration = 2.0;
    spec.fire_probability = 0.5;
    spec.seed = 42;
    spec.waveform = BiphasicWaveform::one_sided(1.0, 0.2e-3, 0.25);
    const double dt = 1e-4;
    const TimeSeries ts = generate_pulse_train(spec, dt);

    std::mt19937_64 rng(42);
    std::bernoulli_distribution fire(0.5);
    int expected = 0;
    int observed = 0;
    for (int slot = 0; slot < 2000; ++slot) {
        const bool f = fire(rng);
        expected += f;
        const std::size_t start = static_cast<std::size_t>(std::llround(slot * 1e-3 / dt));
        const bool seen = ts[start] > 0.0;
        EXPECT_EQ(seen, f) << "slot " << slot;
        observed += seen;
    }
    EXPECT_EQ(observed, expected);
}

TEST(PulseTrain, ChargeCancelsPerSlot) {
    PulseTrainSpec spec;
    spec.rate = 100;
    spec.duration = 0.5;
    spec.fire_probability = 0.7;
    spec.seed = 3;
    spec.waveform = BiphasicWaveform::one_sided(2.0, 0.5e-3, 0.1);
    const double dt = 1e-4;
    const TimeSeries ts = generate_pulse_train(spec, dt);
    for (int slot = 0; slot < 50; ++slot) {
        double q = 0.0;
        for (std::size_t k = slot * 100; k < (slot + 1) * 100u; ++k) q += ts[k] * dt;
        EXPECT_NEAR(q, 0.0, 1e-9 * 2.0 * 0.5e-3);
    }
}

TEST(PulseTrain, Deterministic) {
    PulseTrainSpec spec;
    spec.rate = 1000;
    spec.duration = 0.3;
    spec.fire_probability = 0.5;
    spec.seed = 9;
    spec.waveform = BiphasicWaveform::one_sided(1.0, 0.2e-3, 0.25);
    EXPECT_EQ(generate_pulse_train(spec, 1e-4), generate_pulse_train(spec, 1e-4));
    spec.seed = 10;
    const TimeSeries other = generate_pulse_train(spec, 1e-4);
    spec.seed = 9;
    EXPECT_NE(generate_pulse_train(spec, 1e-4), other);
}

TEST(PulseTrain, Errors) {
    PulseTrainSpec spec;
    spec.rate = 1000;  // default 5.5 ms waveform does not fit a 1 ms slot
    EXPECT_EQ(kind_of([&] { generate_pulse_train(spec, 1e-4); }), ErrorKind::overlap);
    spec.rate = 10;
    EXPECT_EQ(kind_of([&] { generate_pulse_train(spec, 0.4e-3); }), ErrorKind::resolution);
}

TEST(Waveform, OneSidedIsChargeBalanced) {
    const BiphasicWaveform w = BiphasicWaveform::one_sided(10.0);
    EXPECT_NO_THROW(w.validate());
    EXPECT_DOUBLE_EQ(w.pos_amplitude * w.pos_width, w.neg_amplitude * w.neg_width);
    EXPECT_DOUBLE_EQ(w.duration(), 5.5e-3);
    const auto r = w.render(1e-4);
    EXPECT_NEAR(std::accumulate(r.begin(), r.end(), 0.0), 0.0, 1e-12);
    const auto m = w.mirrored().render(1e-4);
    for (std::size_t k = 0; k < r.size(); ++k) EXPECT_EQ(m[k], -r[k]);
}

TEST(Staircase, SingleLevel) {
    StaircaseSchedule s{6.0, 2.0, 1, 1.0, 1.0, 10.0};
    const TimeSeries ts = generate_staircase(s, BiphasicWaveform::one_sided(1.0), 1e-4);
    double peak = 0.0;
    for (double v : ts.samples()) peak = std::max(peak, v);
    EXPECT_DOUBLE_EQ(peak, 6.0);
}

TEST(Staircase, LevelsRiseByStep) {
    StaircaseSchedule s{6.0, 2.0, 5, 1.0, 1.0, 10.0};
    const TimeSeries ts = generate_staircase(s, BiphasicWaveform::one_sided(1.0), 1e-4);
    EXPECT_DOUBLE_EQ(ts.duration(), 10.0);
    const std::vector<double> expected{6, 8, 10, 12, 14};
    for (int k = 0; k < 5; ++k) {
        double peak = 0.0;
        double off_peak = 0.0;
        for (std::size_t i = k * 20000; i < k * 20000u + 10000; ++i) peak = std::max(peak, ts[i]);
        for (std::size_t i = k * 20000 + 10000; i < (k + 1) * 20000u; ++i) off_peak = std::max(off_peak, std::abs(ts[i]));
        EXPECT_DOUBLE_EQ(peak, expected[k]);
        EXPECT_EQ(off_peak, 0.0);
    }
}

TEST(Lowpass, DcPassesUnchanged) {
    const TimeSeries dc(0.0, 1e-4, std::vector<double>(5000, 3.25), Unit::newton);
    const TimeSeries y = lowpass(dc, 100.0);
    EXPECT_EQ(y.unit(), Unit::newton);
    ASSERT_EQ(y.size(), dc.size());
    for (double v : y.samples()) EXPECT_NEAR(v, 3.25, 3.25e-6);
}

TEST(Lowpass, TenTimesCutoffAttenuatedBy35dB) {
    const double dt = 1e-4, fc = 100.0;
    const TimeSeries x = sine(10 * fc, 1.0, dt, 20000);
    const TimeSeries y = lowpass(x, fc);
    const double amp = fitted_amplitude(y, 10 * fc, 2000, 18000);
    EXPECT_LT(20 * std::log10(amp), -35.0);
    const double g = butterworth_gain(10 * fc, fc, dt);
    EXPECT_NEAR(amp, g * g, 0.05 * g * g + 1e-9);
}

TEST(Lowpass, MatchesSquaredButterworthMagnitude) {
    const double dt = 1e-3, fc = 20.0;
    for (double f : {5.0, 15.0, 20.0, 30.0, 60.0}) {
        const TimeSeries y = lowpass(sine(f, 1.0, dt, 20000), fc);
        const double g = butterworth_gain(f, fc, dt);
        EXPECT_NEAR(fitted_amplitude(y, f, 2000, 18000), g * g, 1e-3) << f;
    }
}

TEST(Lowpass, ZeroPhase) {
    const double dt = 1e-3;
    const TimeSeries y = lowpass(sine(10.0, 1.0, dt, 10000), 20.0);
    // The phase-free output is a scaled copy of the input in the interior.
    const double g = std::pow(butterworth_gain(10.0, 20.0, dt), 2);
    for (std::size_t k = 1000; k < 9000; ++k) {
        EXPECT_NEAR(y[k], g * std::sin(2.0 * std::numbers::pi * 10.0 * k * dt), 1e-4);
    }
}

TEST(Lowpass, CutoffAtNyquistRejected) {
    const TimeSeries x(0.0, 5e-3, std::vector<double>(100, 1.0), Unit::newton);
    EXPECT_EQ(kind_of([&] { lowpass(x, 100.0); }), ErrorKind::configuration);
    EXPECT_EQ(kind_of([&] { lowpass(x, 0.0); }), ErrorKind::configuration);
    EXPECT_NO_THROW(lowpass(x, 99.0));
}

TEST(Decimate, FactorOneIsIdentity) {
    const TimeSeries x = sine(3.0, 1.0, 1e-3, 500);
    EXPECT_EQ(decimate(x, 1), x);
}

TEST(Decimate, ReferenceRates) {
    const TimeSeries x(2.0, 1e-4, std::vector<double>(10000, 1.0), Unit::ampere);
    const TimeSeries y = decimate(x, 50);
    EXPECT_NEAR(y.dt(), 5e-3, 1e-15);
    EXPECT_EQ(y.t0(), 2.0);
    EXPECT_EQ(y.size(), 200u);
    EXPECT_EQ(y.unit(), Unit::ampere);
}

TEST(Decimate, TenthOfNyquistSurvives) {
    const double dt = 1e-4;
    const int factor = 50;
    const double f = 0.1 * 0.5 / (factor * dt);  // 10 Hz
    const TimeSeries y = decimate(sine(f, 1.0, dt, 50000), factor);
    const double amp = fitted_amplitude(y, f, 100, 900);
    EXPECT_NEAR(amp, 1.0, 0.05);
    const double g = butterworth_gain(f, decimation_cutoff_hz(dt, factor), dt);
    EXPECT_NEAR(amp, g * g, 1e-3);
    // Sample k of the output is the input's time t0 + k * dt_out.
    for (std::size_t k = 200; k < 300; ++k) EXPECT_NEAR(y.time_at(k), k * factor * dt, 1e-12);
}

TEST(Decimate, ErrorOnBadFactor) {
    const TimeSeries x = sine(3.0, 1.0, 1e-3, 100);
    EXPECT_EQ(kind_of([&] { decimate(x, 0); }), ErrorKind::argument);
}

TEST(Noise, ZeroSigmaIsExact) {
    const TimeSeries x = sine(3.0, 1.0, 1e-3, 100);
    EXPECT_EQ(add_gaussian_noise(x, 0.0, 5), x);
}

TEST(Noise, DeterministicPerSeed) {
    const TimeSeries x = sine(3.0, 1.0, 1e-3, 100);
    EXPECT_EQ(add_gaussian_noise(x, 0.3, 5), add_gaussian_noise(x, 0.3, 5));
    EXPECT_NE(add_gaussian_noise(x, 0.3, 5), add_gaussian_noise(x, 0.3, 6));
}

TEST(Noise, SampleStandardDeviation) {
    const TimeSeries x(0.0, 1e-3, std::vector<double>(100000, 0.0), Unit::newton);
    const TimeSeries y = add_gaussian_noise(x, 1.0, 11);
    double mean = 0.0;
    for (double v : y.samples()) mean += v;
    mean /= 1e5;
    double var = 0.0;
    for (double v : y.samples()) var += (v - mean) * (v - mean);
    EXPECT_NEAR(std::sqrt(var / (1e5 - 1)), 1.0, 0.02);
}
