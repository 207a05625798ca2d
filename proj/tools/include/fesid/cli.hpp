#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fesid::cli {

/// Runs one command line (without the program name). Returns the process
/// exit code: 0 success, 2 argument errors, 3 data-format or I/O errors,
/// 4 numerical or fit errors. Diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fesid::cli
