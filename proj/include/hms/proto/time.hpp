#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace hms::proto {

using Seconds = std::int64_t;

/// Whole seconds since 1970-01-01T00:00:00Z.
struct EpochTime {
  std::int64_t seconds = 0;

  constexpr EpochTime() = default;
  constexpr explicit EpochTime(std::int64_t s) : seconds(s) {}

  static EpochTime parse(std::string_view text);  // throws BadTime
  static std::optional<EpochTime> try_parse(std::string_view text) noexcept;
  std::string to_string() const { return std::to_string(seconds); }

  /// UTC rendering "YYYY-MM-DDTHH:MM:SSZ", for logs and the gateway.
  std::string iso8601() const;

  constexpr auto operator<=>(EpochTime const&) const = default;

  constexpr EpochTime& operator+=(Seconds d) {
    seconds += d;
    return *this;
  }
  friend constexpr EpochTime operator+(EpochTime t, Seconds d) { return EpochTime{t.seconds + d}; }
  friend constexpr EpochTime operator-(EpochTime t, Seconds d) { return EpochTime{t.seconds - d}; }
  friend constexpr Seconds operator-(EpochTime a, EpochTime b) { return a.seconds - b.seconds; }
};

}  // namespace hms::proto
