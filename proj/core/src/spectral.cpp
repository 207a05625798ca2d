#include "fesid/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fesid/error.hpp"

namespace fesid::spectral {

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

void fft_in_place(std::span<Complex> data, bool inverse) {
    const std::size_t n = data.size();
    if (!is_power_of_two(n)) {
        throw Error(ErrorKind::argument, "FFT length " + std::to_string(n) + " is not a power of two");
    }
    if (n == 1) return;

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }

    // Twiddles evaluated directly per index; recurrence drifts at large N.
    const double sign = inverse ? 1.0 : -1.0;
    std::vector<Complex> twiddle(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        twiddle[k] = std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t stride = n / len;
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const Complex t = twiddle[k * stride] * data[start + k + half];
                data[start + k + half] = data[start + k] - t;
                data[start + k] += t;
            }
        }
    }
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& v : data) v *= scale;
    }
}

ComplexSpectrum fft(const TimeSeries& ts, std::size_t n) {
    if (!is_power_of_two(n)) {
        throw Error(ErrorKind::argument, "FFT length " + std::to_string(n) + " is not a power of two");
    }
    ComplexSpectrum out;
    out.source_length = ts.size();
    out.zero_padded = n > ts.size();
    out.truncated = n < ts.size();
    out.df = 1.0 / (static_cast<double>(n) * ts.dt());
    out.bins.assign(n, Complex{});
    const std::size_t copy = std::min(n, ts.size());
    for (std::size_t k = 0; k < copy; ++k) out.bins[k] = ts[k];
    fft_in_place(out.bins);
    return out;
}

std::vector<double> inverse_fft_real(const ComplexSpectrum& spectrum) {
    std::vector<Complex> work = spectrum.bins;
    fft_in_place(work, true);
    std::vector<double> out(work.size());
    std::transform(work.begin(), work.end(), out.begin(), [](const Complex& c) { return c.real(); });
    return out;
}

FrequencyResponse etfe(const TimeSeries& input, const TimeSeries& output, const EtfeOptions& options) {
    require_aligned(input, output, "etfe");
    const std::size_t seg = options.segment_len;
    if (!is_power_of_two(seg) || seg < 2) {
        throw Error(ErrorKind::argument, "ETFE segment length must be a power of two >= 2");
    }
    if (seg > input.size()) {
        throw Error(ErrorKind::argument, "ETFE segment length " + std::to_string(seg) +
                                             " exceeds record length " + std::to_string(input.size()));
    }
    if (!(options.overlap_fraction >= 0.0) || options.overlap_fraction >= 1.0) {
        throw Error(ErrorKind::argument, "ETFE overlap fraction must lie in [0, 1)");
    }
    const auto step = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(seg) * (1.0 - options.overlap_fraction))));
    const std::size_t n_segments = (input.size() - seg) / step + 1;

    std::vector<double> window(seg);
    for (std::size_t i = 0; i < seg; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(seg));
    }

    const std::size_t half = seg / 2;
    std::vector<Complex> cross(half + 1);
    std::vector<double> auto_power(half + 1, 0.0);
    std::vector<Complex> xs(seg);
    std::vector<Complex> ys(seg);
    const auto x = input.samples();
    const auto y = output.samples();

    for (std::size_t s = 0; s < n_segments; ++s) {
        const std::size_t off = s * step;
        double mx = 0.0;
        double my = 0.0;
        if (options.remove_segment_mean) {
            for (std::size_t i = 0; i < seg; ++i) {
                mx += x[off + i];
                my += y[off + i];
            }
            mx /= static_cast<double>(seg);
            my /= static_cast<double>(seg);
        }
        for (std::size_t i = 0; i < seg; ++i) {
            xs[i] = window[i] * (x[off + i] - mx);
            ys[i] = window[i] * (y[off + i] - my);
        }
        fft_in_place(xs);
        fft_in_place(ys);
        for (std::size_t k = 0; k <= half; ++k) {
            cross[k] += ys[k] * std::conj(xs[k]);
            auto_power[k] += std::norm(xs[k]);
        }
    }

    double peak = 0.0;
    for (std::size_t k = 1; k <= half; ++k) peak = std::max(peak, auto_power[k]);
    const double floor = options.floor_ratio * peak;

    FrequencyResponse fr;
    fr.averaging_count = n_segments;
    fr.window = "hann";
    const double df = 1.0 / (static_cast<double>(seg) * input.dt());
    for (std::size_t k = 1; k <= half; ++k) {
        if (!(auto_power[k] > floor) || auto_power[k] == 0.0) continue;
        fr.points.push_back({static_cast<double>(k) * df, cross[k] / auto_power[k]});
    }
    if (fr.points.empty()) {
        throw Error(ErrorKind::degenerate, "ETFE input has no spectral power above the floor");
    }
    return fr;
}

FrequencyResponse etfe(const TimeSeries& input, const TimeSeries& output, std::size_t segment_len,
                       double overlap_fraction) {
    EtfeOptions options;
    options.segment_len = segment_len;
    options.overlap_fraction = overlap_fraction;
    return etfe(input, output, options);
}

std::vector<MagnitudePoint> magnitude_db(const FrequencyResponse& fr) {
    std::vector<MagnitudePoint> out;
    out.reserve(fr.points.size());
    for (std::size_t i = 0; i < fr.points.size(); ++i) {
        const double mag = std::abs(fr.points[i].gain);
        if (mag == 0.0) {
            throw Error(ErrorKind::domain, "zero gain at bin " + std::to_string(i) + " (f = " +
                                               std::to_string(fr.points[i].f_hz) + " Hz)");
        }
        out.push_back({fr.points[i].f_hz, 20.0 * std::log10(mag)});
    }
    return out;
}

double slope_db_per_decade(std::span<const MagnitudePoint> curve, double f_lo, double f_hi) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (const auto& p : curve) {
        if (p.f_hz < f_lo || p.f_hz > f_hi) continue;
        const double lx = std::log10(p.f_hz);
        sx += lx;
        sy += p.db;
        sxx += lx * lx;
        sxy += lx * p.db;
        ++n;
    }
    if (n < 2) {
        throw Error(ErrorKind::argument, "slope fit needs at least two points in the band");
    }
    const double nn = static_cast<double>(n);
    const double denom = nn * sxx - sx * sx;
    if (denom <= 0.0) {
        throw Error(ErrorKind::argument, "slope fit band collapses to a single frequency");
    }
    return (nn * sxy - sx * sy) / denom;
}

}  // namespace fesid::spectral
