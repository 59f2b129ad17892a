#pragma once

#include <string>
#include <vector>

#include "midas/types.hpp"

namespace midas {

// Pure invariant check; each violation string starts with a rule tag followed
// by enough detail to locate the offending field.
std::vector<std::string> validate_trial(const Trial& trial);

}  // namespace midas
