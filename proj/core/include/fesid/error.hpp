#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fesid {

/// Failure categories shared by every module. The CLI maps each one to an
/// exit code (see `exit_code_for`).
enum class ErrorKind {
    argument,             // bad caller input: mismatched series, out-of-range values
    configuration,        // unsupported setup: unknown register length, cutoff >= Nyquist
    resolution,           // sample period too coarse for the requested signal
    overlap,              // waveform longer than its pulse slot
    domain,               // evaluation at a pole, log of zero gain
    degenerate,           // rank-deficient regression, no usable spectral bins
    nonphysical,          // fitted pole outside (0, 1)
    unidentifiable,       // regressors carry no information
    onset_detection,      // no onset found in a trial
    threshold_not_reached,
    data_format,          // malformed file contents
    io,                   // file could not be opened or written
    stage,                // pipeline stage failure; message names the stage
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// 2 for argument-style errors, 3 for file/data format errors, 4 for
/// numerical and fitting failures.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace fesid
