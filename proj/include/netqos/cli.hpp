#pragma once

namespace netqos {

/// Full command-line entry point. Returns the process exit code:
/// 0 success, 1 runtime error (diagnostic on standard error), 2 usage error.
int run(int argc, const char* const* argv);

} // namespace netqos
