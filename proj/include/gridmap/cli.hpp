#pragma once
#include <iosfwd>
#include <string>
#include <vector>

namespace gridmap {

// Whole CLI behind a testable entry point. Exit codes: 0 success,
// 1 usage/parse error, 2 mapping failure.
int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

} // namespace gridmap
