#pragma once

#include <iosfwd>

namespace diffmean {

// Exit codes: 0 success, 1 numerical failure or failed check, 2 usage error.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace diffmean
