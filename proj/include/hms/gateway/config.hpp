#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hms/holon/directory.hpp"
#include "hms/msg/channel.hpp"
#include "hms/proto/product.hpp"
#include "hms/sched/negotiation.hpp"
#include "hms/sched/plan.hpp"
#include "hms/sim/cell.hpp"

namespace hms::gateway {

enum class HolonRole { Manager, Coordinator, Cell };

struct HolonConfig {
  std::string id;
  HolonRole role = HolonRole::Cell;
  msg::ChannelId inbox;
  std::string cell;                   // Cell role: simulated cell it drives
  std::vector<std::string> services;  // Cell role: empty means "from the directory"
  std::optional<msg::ChannelId> ctrl_out;
  std::optional<msg::ChannelId> ctrl_in;
};

/// A hardware-independent interface in front of a simulated controller.
struct InterfaceConfig {
  std::string id;
  std::string cell;
  msg::ChannelId commands;
  msg::ChannelId status;
};

struct ResourceConfig {
  std::string name;
  std::vector<HolonConfig> holons;
  std::vector<InterfaceConfig> interfaces;
};

struct DeviceConfig {
  std::string name;
  std::optional<msg::ChannelId> management;
  std::vector<ResourceConfig> resources;
};

struct CellConfig {
  std::string name;
  sim::CellParams params;
};

struct SystemConfig {
  proto::EpochTime start{1308574800};
  sched::ProductCatalog products;
  std::vector<proto::ServiceDef> services;
  holon::Directory directory;
  std::optional<std::filesystem::path> directory_file;
  sched::StockTable stock;
  sched::NegotiationConfig negotiation;
  proto::Seconds idle_timeout = 300;

  msg::ChannelId hmi;
  std::string order_device;  // device hosting order holons
  std::string order_resource = "Orders";
  msg::ChannelId order_inbox_base;

  std::vector<DeviceConfig> devices;
  std::vector<CellConfig> cells;

  HolonConfig const* holon(HolonRole role) const;  // first of that role
};

/// Reads the JSON system file; relative catalog paths resolve against its
/// directory. Throws ConfigError with the offending key.
SystemConfig load_system_config(std::filesystem::path const& file);
SystemConfig parse_system_config(std::string const& json_text, std::filesystem::path const& base_dir);

}  // namespace hms::gateway
