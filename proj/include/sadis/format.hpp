#pragma once

#include <span>
#include <string>

namespace sadis {

// Shortest "%.9g" rendering, with -0 normalized to 0.
std::string format_number(double value);

std::string format_list(std::span<const long> values);

}  // namespace sadis
