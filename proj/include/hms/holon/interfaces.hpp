#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hms/fb/resource.hpp"
#include "hms/fb/type.hpp"
#include "hms/msg/channel.hpp"
#include "hms/proto/message.hpp"

namespace hms::holon {

enum class Side { B1, B2, Both };

/// One port of the holon component interface table.
struct TablePort {
  std::string_view name;
  bool event;
  bool input;
  std::string_view paired;  // event port a data port travels with; empty for ID
  Side side;
};

std::span<TablePort const> component_ports();

/// Port layout of the conscious (B1) and subconscious (B2) components.
/// `kind` is left for the caller to fill in.
fb::FBTypeDef b1_interface(std::string name);
fb::FBTypeDef b2_interface(std::string name);

/// Every table port sits exactly where the split puts it, with the right
/// direction and event pairing. Returns the violations (empty when fine).
std::vector<std::string> check_component_split(fb::FBTypeDef const& b1, fb::FBTypeDef const& b2);

/// Helpers shared by component behaviors.
class Component : public fb::Behavior {
 protected:
  /// "B1" sends cross-component messages on SendB2Msg, "B2" on SendB1Msg.
  explicit Component(bool conscious) : conscious_(conscious) {}

  void send_group(fb::BlockContext& ctx, msg::ChannelId const& to, proto::Message const& m);
  void send_peer(fb::BlockContext& ctx, proto::Message const& m);
  void send_hmi(fb::BlockContext& ctx, proto::Message const& m);
  void send_ctrl(fb::BlockContext& ctx, proto::Message const& m);  // B2 only

  /// Decodes the data input travelling with `event`; nullopt when the
  /// payload is not a valid message.
  static std::optional<proto::Message> incoming(fb::BlockContext& ctx, std::string_view event);

 private:
  bool conscious_;
};

}  // namespace hms::holon
