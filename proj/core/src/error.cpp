#include "fesid/error.hpp"

namespace fesid {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::argument: return "argument";
        case ErrorKind::configuration: return "configuration";
        case ErrorKind::resolution: return "resolution";
        case ErrorKind::overlap: return "overlap";
        case ErrorKind::domain: return "domain";
        case ErrorKind::degenerate: return "degenerate";
        case ErrorKind::nonphysical: return "nonphysical";
        case ErrorKind::unidentifiable: return "unidentifiable";
        case ErrorKind::onset_detection: return "onset-detection";
        case ErrorKind::threshold_not_reached: return "threshold-not-reached";
        case ErrorKind::data_format: return "data-format";
        case ErrorKind::io: return "io";
        case ErrorKind::stage: return "stage";
    }
    return "unknown";
}

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::argument:
        case ErrorKind::configuration:
        case ErrorKind::resolution:
        case ErrorKind::overlap:
            return 2;
        case ErrorKind::data_format:
        case ErrorKind::io:
            return 3;
        case ErrorKind::domain:
        case ErrorKind::degenerate:
        case ErrorKind::nonphysical:
        case ErrorKind::unidentifiable:
        case ErrorKind::onset_detection:
        case ErrorKind::threshold_not_reached:
        case ErrorKind::stage:
            return 4;
    }
    return 4;
}

}  // namespace fesid
