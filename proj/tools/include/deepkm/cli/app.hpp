#pragma once

#include <iosfwd>

namespace deepkm::cli {

/// Full CLI entry point. Returns 0 when every requested run completed, 1 on
/// run failures, 2 on usage errors.
int run_app(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace deepkm::cli
