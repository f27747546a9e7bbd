#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hms/msg/channel.hpp"
#include "hms/proto/message.hpp"
#include "hms/proto/time.hpp"

namespace hms::proto {

enum class AttrKind { Text, Integer, Positive, Epoch, Channel, Bool, Percent };

struct AttrSpec {
  std::string_view name;
  AttrKind kind;
  bool required;
};

struct Schema {
  std::string_view type_name;
  std::span<AttrSpec const> attributes;
  bool children_allowed = false;
};

/// Schema of a known message type, or nullptr.
Schema const* find_schema(std::string_view type_name) noexcept;

/// Strict check of a known message type (and of its known children).
/// Unknown types pass. Throws MissingAttribute, BadTime or SchemaViolation.
void validate(Message const& message);

/// Validated copy with attributes in schema order. Unknown types are
/// returned unchanged.
Message canonicalize(Message const& message);

// ---- typed attribute access -------------------------------------------------

EpochTime epoch_attr(Message const& m, std::string_view name);
std::int64_t int_attr(Message const& m, std::string_view name);
msg::ChannelId channel_attr(Message const& m, std::string_view name);
bool bool_attr(Message const& m, std::string_view name);
inline std::string bool_text(bool b) { return b ? "true" : "false"; }

// ---- negotiation messages ---------------------------------------------------

/// GetBidForOp: call for bids on one operation.
struct BidRequest {
  std::string id;
  std::string op_id;
  EpochTime min_start;
  msg::ChannelId sender;

  Message to_message() const;
  static BidRequest from(Message const& m);
  bool operator==(BidRequest const&) const = default;
};

/// RspBidForOp: a resource holon's quote.
struct BidResponse {
  std::string id;
  std::string op_id;
  EpochTime start;
  Seconds exec_time = 0;
  msg::ChannelId sender;

  EpochTime finish() const { return start + exec_time; }
  /// A response answers `request` legally when it matches the conversation
  /// and neither starts before MinStartTime nor has a non-positive duration.
  bool answers(BidRequest const& request) const;

  Message to_message() const;
  static BidResponse from(Message const& m);
  bool operator==(BidResponse const&) const = default;
};

struct AwardOp {
  std::string id;
  std::string op_id;
  EpochTime start;
  msg::ChannelId sender;
  std::string order_id;  // optional
  bool hold = false;     // keep the output at the work post for a later assembly

  Message to_message() const;
  static AwardOp from(Message const& m);
};

struct ConfirmOp {
  std::string id;
  std::string op_id;
  bool accepted = false;

  Message to_message() const;
  static ConfirmOp from(Message const& m);
};

}  // namespace hms::proto
