#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hms::fb {

enum class ValueKind { Text, Integer, Boolean, Blob };

using Blob = std::vector<std::byte>;
using Value = std::variant<std::string, std::int64_t, bool, Blob>;

ValueKind kind_of(Value const& v) noexcept;
Value default_value(ValueKind kind);
std::string_view to_string(ValueKind kind) noexcept;

/// Converts the textual form used in config files and management requests.
/// Blobs are hex encoded. Throws SchemaViolation on malformed input.
Value parse_value(ValueKind kind, std::string_view text);
std::string format_value(Value const& v);

}  // namespace hms::fb
