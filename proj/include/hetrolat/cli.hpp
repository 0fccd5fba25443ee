#pragma once

#include <string>
#include <vector>

namespace hetrolat {

/// Run one CLI invocation (argv without the program name).
/// Exit codes: 0 success, 1 stage failure, 2 usage error.
int dispatch(const std::vector<std::string>& args);

} // namespace hetrolat
