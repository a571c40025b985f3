#pragma once

#include <string_view>

namespace revtraj::resources {

// Versioned text resources compiled into the library from resources/.
std::string_view craft_suite();
std::string_view graded_suite();
std::string_view judge_prompt();
std::string_view revision_thoughts();

}  // namespace revtraj::resources
