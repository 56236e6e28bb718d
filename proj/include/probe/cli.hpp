#pragma once

#include <string>
#include <vector>

namespace probe {

/// Command-line entry: generate | evaluate | stats | validate.
/// Returns the process exit status; diagnostics go to stderr.
int dispatch(const std::vector<std::string>& args);

}  // namespace probe
