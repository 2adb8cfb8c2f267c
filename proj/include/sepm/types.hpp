#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace sepm {

/// Two stable states of an S-EPM: Alnico magnetization sign, pulse polarity and
/// valve logical state all share this representation.
enum class Polarity : int { negative = -1, positive = +1 };

[[nodiscard]] constexpr int sign(Polarity p) noexcept { return static_cast<int>(p); }

[[nodiscard]] constexpr Polarity flip(Polarity p) noexcept {
    return p == Polarity::positive ? Polarity::negative : Polarity::positive;
}

[[nodiscard]] constexpr std::string_view to_string(Polarity p) noexcept {
    return p == Polarity::positive ? "+1" : "-1";
}

/// Accepts "+1", "1", "-1", "+", "-".
[[nodiscard]] std::optional<Polarity> parse_polarity(std::string_view text) noexcept;

}  // namespace sepm
