#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

namespace hms::msg {

/// A pub/sub channel address, rendered "A.B.C.D:port".
///
/// Parsing is strict: four decimal octets without leading zeros and a port
/// in 1..65535, so that `parse(s).to_string() == s` for every accepted `s`.
struct ChannelId {
  std::array<std::uint8_t, 4> address{};
  std::uint16_t port{};

  static ChannelId parse(std::string_view text);
  static std::optional<ChannelId> try_parse(std::string_view text) noexcept;

  std::string to_string() const;
  bool is_multicast() const noexcept { return address[0] >= 224 && address[0] <= 239; }

  auto operator<=>(ChannelId const&) const = default;
};

std::ostream& operator<<(std::ostream& os, ChannelId const& id);

}  // namespace hms::msg

template <>
struct std::hash<hms::msg::ChannelId> {
  std::size_t operator()(hms::msg::ChannelId const& id) const noexcept {
    std::uint64_t v = 0;
    for (auto b : id.address) v = (v << 8) | b;
    return std::hash<std::uint64_t>{}((v << 16) | id.port);
  }
};
