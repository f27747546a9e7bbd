#include "hms/msg/channel.hpp"

#include <charconv>
#include <ostream>

#include "hms/error.hpp"

namespace hms::msg {

namespace {

// Parses a decimal number without sign or leading zeros.
std::optional<unsigned> parse_decimal(std::string_view s, unsigned max) {
  if (s.empty() || s.size() > 5) return std::nullopt;
  if (s.size() > 1 && s.front() == '0') return std::nullopt;
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || value > max) return std::nullopt;
  return value;
}

}  // namespace

std::optional<ChannelId> ChannelId::try_parse(std::string_view text) noexcept {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos) return std::nullopt;
  auto host = text.substr(0, colon);
  auto port = parse_decimal(text.substr(colon + 1), 65535);
  if (!port || *port == 0) return std::nullopt;

  ChannelId id;
  id.port = static_cast<std::uint16_t>(*port);
  for (int i = 0; i < 4; ++i) {
    auto dot = host.find('.');
    auto part = (i < 3) ? host.substr(0, dot) : host;
    if (i < 3 && dot == std::string_view::npos) return std::nullopt;
    auto octet = parse_decimal(part, 255);
    if (!octet) return std::nullopt;
    id.address[i] = static_cast<std::uint8_t>(*octet);
    if (i < 3) host.remove_prefix(dot + 1);
  }
  return id;
}

ChannelId ChannelId::parse(std::string_view text) {
  if (auto id = try_parse(text)) return *id;
  throw Error(Errc::BadChannel, std::string(text));
}

std::string ChannelId::to_string() const {
  std::string out;
  for (int i = 0; i < 4; ++i) {
    out += std::to_string(address[i]);
    out += (i < 3) ? '.' : ':';
  }
  out += std::to_string(port);
  return out;
}

std::ostream& operator<<(std::ostream& os, ChannelId const& id) { return os << id.to_string(); }

}  // namespace hms::msg
