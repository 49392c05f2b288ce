#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mgm::cli {

// Runs one invocation; args excludes the program name. Errors are reported on
// `err` as {"error":{"kind":...,"message":...}} and yield a nonzero status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mgm::cli
