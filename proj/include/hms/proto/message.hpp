#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hms::proto {

/// One protocol message: an XML element whose name is the message type and
/// whose attributes, text and child elements carry the data.
struct Message {
  using Attribute = std::pair<std::string, std::string>;

  std::string type_name;
  std::vector<Attribute> attributes;  // insertion ordered, names unique
  std::vector<Message> children;
  std::string text;

  Message() = default;
  explicit Message(std::string name) : type_name(std::move(name)) {}

  /// Replaces the value of an existing attribute or appends a new one.
  Message& set(std::string_view name, std::string value);
  Message& set(std::string_view name, std::int64_t value) { return set(name, std::to_string(value)); }
  Message& set(std::string_view name, char const* value) { return set(name, std::string(value)); }
  Message& add(Message child) {
    children.push_back(std::move(child));
    return *this;
  }

  std::optional<std::string_view> get(std::string_view name) const noexcept;
  bool has(std::string_view name) const noexcept { return get(name).has_value(); }
  /// Throws MissingAttribute when absent.
  std::string const& at(std::string_view name) const;
  bool erase(std::string_view name);

  bool operator==(Message const&) const = default;
};

}  // namespace hms::proto
