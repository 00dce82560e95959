#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sefe {

/// Runs one `sefe <verb> ...` invocation. Returns the process exit status; failures print
/// a one-line diagnostic to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sefe
