#include "atomguide/csv.hpp"

#include <array>
#include <charconv>

namespace atomguide {

std::string format_number(double value) {
    std::array<char, 64> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

}  // namespace atomguide
