#include "hms/fb/value.hpp"

#include <charconv>

#include "hms/error.hpp"

namespace hms::fb {

ValueKind kind_of(Value const& v) noexcept { return static_cast<ValueKind>(v.index()); }

Value default_value(ValueKind kind) {
  switch (kind) {
    case ValueKind::Text: return std::string{};
    case ValueKind::Integer: return std::int64_t{0};
    case ValueKind::Boolean: return false;
    case ValueKind::Blob: return Blob{};
  }
  return std::string{};
}

std::string_view to_string(ValueKind kind) noexcept {
  switch (kind) {
    case ValueKind::Text: return "text";
    case ValueKind::Integer: return "integer";
    case ValueKind::Boolean: return "boolean";
    case ValueKind::Blob: return "blob";
  }
  return "?";
}

namespace {
[[noreturn]] void bad_value(ValueKind kind, std::string_view text) {
  throw Error(Errc::SchemaViolation, "'" + std::string(text) + "' is not a " + std::string(to_string(kind)));
}
}  // namespace

Value parse_value(ValueKind kind, std::string_view text) {
  auto bad = [&] { bad_value(kind, text); };
  switch (kind) {
    case ValueKind::Text: return std::string(text);
    case ValueKind::Integer: {
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) bad();
      return v;
    }
    case ValueKind::Boolean:
      if (text == "true") return true;
      if (text == "false") return false;
      bad_value(kind, text);
    case ValueKind::Blob: {
      if (text.size() % 2 != 0) bad();
      Blob out;
      for (std::size_t i = 0; i < text.size(); i += 2) {
        unsigned byte = 0;
        auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + i + 2, byte, 16);
        if (ec != std::errc{} || ptr != text.data() + i + 2) bad();
        out.push_back(static_cast<std::byte>(byte));
      }
      return out;
    }
  }
  bad_value(kind, text);
}

std::string format_value(Value const& v) {
  struct Visitor {
    std::string operator()(std::string const& s) const { return s; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(Blob const& b) const {
      static constexpr char kHex[] = "0123456789abcdef";
      std::string out;
      for (auto byte : b) {
        out += kHex[std::to_integer<unsigned>(byte) >> 4];
        out += kHex[std::to_integer<unsigned>(byte) & 0xF];
      }
      return out;
    }
  };
  return std::visit(Visitor{}, v);
}

}  // namespace hms::fb
