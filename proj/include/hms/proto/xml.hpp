#pragma once

#include <string>
#include <string_view>

#include "hms/proto/message.hpp"

namespace hms::proto {

/// True for names usable as element or attribute names (ASCII XML Name subset).
bool is_valid_name(std::string_view name) noexcept;

/// Serializes without schema handling: attributes in stored order,
/// double-quoted, `<Name ... />` when there is neither text nor children.
std::string encode_raw(Message const& message);

/// Canonical encoding. Messages of a known schema type are validated and
/// their attributes written in schema order; other messages are written as
/// stored. Throws SchemaViolation (or the more specific validation error).
std::string encode(Message const& message);

/// Parses one element (optionally preceded by an XML declaration and
/// comments). Unknown element names decode as generic messages; schema checks
/// are a separate step (`validate`). Throws MalformedXml.
Message decode(std::string_view text);

}  // namespace hms::proto
