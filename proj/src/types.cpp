#include "sepm/types.hpp"

namespace sepm {

std::optional<Polarity> parse_polarity(std::string_view text) noexcept {
    if (text == "+1" || text == "1" || text == "+") {
        return Polarity::positive;
    }
    if (text == "-1" || text == "-") {
        return Polarity::negative;
    }
    return std::nullopt;
}

}  // namespace sepm
