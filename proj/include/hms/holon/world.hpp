#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hms/fb/timer.hpp"
#include "hms/holon/directory.hpp"
#include "hms/msg/channel.hpp"
#include "hms/proto/message.hpp"
#include "hms/sched/negotiation.hpp"
#include "hms/sched/plan.hpp"
#include "hms/sim/cell.hpp"

namespace hms::holon {

using proto::EpochTime;

enum class HolonKind { Resource, Order, Manager, Coordinator };
std::string_view to_string(HolonKind k) noexcept;

struct HolonInfo {
  std::string id;
  HolonKind kind = HolonKind::Resource;
  msg::ChannelId inbox;
  std::string parent;  // holon id, order holons only
  std::string order_id;
  std::string product;
};

/// Live holons by id.
class HolonRegistry {
 public:
  void add(HolonInfo info);
  bool remove(std::string const& id);
  HolonInfo const* find(std::string_view id) const;
  std::vector<std::string> census() const;  // sorted ids
  std::size_t count(HolonKind k) const;
  std::map<std::string, HolonInfo, std::less<>> const& all() const noexcept { return holons_; }

 private:
  std::map<std::string, HolonInfo, std::less<>> holons_;
};

/// A simulated controller and what its hardware-independent interface needs.
struct CellBinding {
  std::unique_ptr<sim::CellSim> sim;
  int pending_faults = 0;  // the next n controller commands fail
  /// Installed by the interface block; receives controller status reports.
  std::function<void(proto::Message const&)> report;
};

/// Shared state of one running system: catalogs, the simulated plant and
/// simulated time. Only the executor thread touches it.
struct World {
  EpochTime now;
  sched::ProductCatalog products;
  std::map<std::string, proto::ServiceDef, std::less<>> services;
  sched::StockTable stock;
  Directory directory;
  fb::TimerService timers;
  sched::NegotiationConfig negotiation;
  HolonRegistry holons;
  std::map<std::string, CellBinding, std::less<>> cells;

  msg::ChannelId manager;
  msg::ChannelId coordinator;
  std::optional<msg::ChannelId> hmi;
  msg::ChannelId order_device;      // management endpoint hosting order holons
  std::string order_resource = "Orders";
  msg::ChannelId order_inbox_base;  // first order-holon inbox; ports count up

  CellBinding& cell(std::string_view name);  // throws ConfigError
};

/// Status report of a controller event, or nothing for events that stay
/// inside the cell (blocking, eviction).
std::optional<proto::Message> controller_report(sim::CellEvent const& e, sim::CellSim const& cell);

}  // namespace hms::holon
