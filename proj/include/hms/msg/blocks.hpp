#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <string>
#include <string_view>

#include "hms/fb/type.hpp"
#include "hms/msg/transport.hpp"

namespace hms::msg {

enum class Target { B1, B2 };
std::string_view to_string(Target t) noexcept;

/// Message type name to component; anything unlisted goes to B1.
class RoutingTable {
 public:
  RoutingTable() = default;
  RoutingTable(std::initializer_list<std::pair<std::string const, Target>> entries) : map_(entries) {}

  void set(std::string type_name, Target t) { map_[std::move(type_name)] = t; }
  Target operator[](std::string_view type_name) const;
  std::map<std::string, Target, std::less<>> const& entries() const noexcept { return map_; }

  /// Execution reports and controller replies go to B2.
  static RoutingTable resource_holon();
  /// Order holons have no B2.
  static RoutingTable order_holon() { return {}; }

 private:
  std::map<std::string, Target, std::less<>> map_;
};

struct Routed {
  Target target;
  std::string type_name;
};

/// Routes by element name. The payload itself is never modified. Throws
/// MalformedPayload when it does not decode.
Routed dispatch(std::string const& payload, RoutingTable const& table);

struct MessagingStats {
  std::uint64_t malformed = 0;       // dropped by a Dispatcher
  std::uint64_t publish_failed = 0;  // PUBLISH on a closed or bad channel
  std::uint64_t received = 0;        // SUBSCRIBE indications
};

/// Registers SUBSCRIBE, PUBLISH, Dispatcher (resource-holon table) and
/// OrderDispatcher (everything to B1).
///
///   SUBSCRIBE  param ID = channel;       IND{RD_1} per delivered envelope
///   PUBLISH    REQ{ID, SD_1} -> CNF;     ID may change per request
///   Dispatcher REQ{IN} -> B1{OUT1} | B2{OUT2}
void register_messaging_types(fb::TypeRegistry& types, Bus& bus, MessagingStats& stats);

fb::FBTypeDef dispatcher_type(std::string name, RoutingTable table, MessagingStats& stats);

}  // namespace hms::msg
