#include "sadis/format.hpp"

#include <cstdio>

namespace sadis {

std::string format_number(double value)
{
    if (value == 0.0) value = 0.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

std::string format_list(std::span<const long> values)
{
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(values[i]);
    }
    return out + "]";
}

}  // namespace sadis
