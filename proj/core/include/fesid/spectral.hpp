#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fesid/time_series.hpp"

namespace fesid::spectral {

using Complex = std::complex<double>;

/// Two-sided spectrum, bin k at frequency k*df for k = 0..N-1.
struct ComplexSpectrum {
    double df = 0.0;
    std::vector<Complex> bins;
    std::size_t source_length = 0;  // samples in the series before pad/truncate
    bool zero_padded = false;
    bool truncated = false;
};

struct ResponsePoint {
    double f_hz;
    Complex gain;
};

/// Ordered (frequency, gain) points, frequencies strictly increasing and > 0.
struct FrequencyResponse {
    std::vector<ResponsePoint> points;
    std::size_t averaging_count = 0;
    std::string window = "none";
};

bool is_power_of_two(std::size_t n) noexcept;

/// In-place iterative radix-2 transform. Forward uses exp(-j2*pi*k*n/N) with
/// no scaling; inverse divides by N. Size must be a power of two.
void fft_in_place(std::span<Complex> data, bool inverse = false);

/// Forward transform of the series zero-padded or truncated to n samples.
/// Error(argument) if n is not a power of two.
ComplexSpectrum fft(const TimeSeries& ts, std::size_t n);

/// Inverse of `fft` (1/N scaling), real part only.
std::vector<double> inverse_fft_real(const ComplexSpectrum& spectrum);

struct EtfeOptions {
    std::size_t segment_len = 512;
    double overlap_fraction = 0.5;
    bool remove_segment_mean = true;
    double floor_ratio = 1e-12;  // bins with auto power below ratio*max are dropped
};

/// Welch-averaged cross/auto spectral ratio: per bin, sum(Y X*) / sum(X X*)
/// over Hann-windowed segments. One-sided, DC excluded. Error(argument) for
/// misaligned series or a bad segment length; Error(degenerate) when every
/// bin falls below the auto-power floor.
FrequencyResponse etfe(const TimeSeries& input, const TimeSeries& output, const EtfeOptions& options = {});
FrequencyResponse etfe(const TimeSeries& input, const TimeSeries& output, std::size_t segment_len,
                       double overlap_fraction);

struct MagnitudePoint {
    double f_hz;
    double db;
};

/// 20*log10|gain|. Error(domain) naming the first zero-gain bin.
std::vector<MagnitudePoint> magnitude_db(const FrequencyResponse& fr);

/// Least-squares slope of dB against log10(f) over points with f in
/// [f_lo, f_hi]. Error(argument) if fewer than two points fall inside.
double slope_db_per_decade(std::span<const MagnitudePoint> curve, double f_lo, double f_hi);

}  // namespace fesid::spectral
