#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hms/fb/device.hpp"
#include "hms/gateway/config.hpp"
#include "hms/gateway/events.hpp"
#include "hms/holon/holons.hpp"
#include "hms/msg/blocks.hpp"
#include "hms/msg/transport.hpp"
#include "hms/sim/scenario.hpp"

namespace hms::gateway {

struct RunOptions {
  msg::TransportKind transport = msg::TransportKind::InProc;
  std::uint64_t seed = 1;
  double speed = 0;  // simulated seconds per wall second; 0 = as fast as possible
  std::optional<std::filesystem::path> trace;
};

struct RunReport {
  int exit_code = 0;  // 0 all orders Done, 1 otherwise
  bool starved = false;
  proto::EpochTime finished_at;
  std::vector<std::string> orders;  // root order ids, in submission order
  std::vector<std::string> failed;  // roots not Done
  std::vector<std::string> rejected_provisions;
  std::size_t frames = 0;
  std::string summary() const;
};

/// One running holonic system: the devices of a config, the simulated plant,
/// the bus and a single seeded executor that interleaves all of them.
///
/// All methods except `post` and `events()` belong to the executor thread.
class System {
 public:
  System(SystemConfig config, RunOptions options);
  ~System();
  System(System const&) = delete;
  System& operator=(System const&) = delete;

  /// Assembles every device and settles the boot traffic.
  void boot();

  // ---- executor ------------------------------------------------------------
  /// One delivery or dispatch step, picked uniformly among the ready ones.
  bool step();
  /// Steps until nothing is ready (waits for in-flight datagrams over UDP).
  std::size_t settle(std::size_t max_steps = 1'000'000);
  /// Earliest pending simulated event: timers, cells, queued scenario lines.
  std::optional<proto::EpochTime> next_time() const;
  /// Moves simulated time to `t` and fires everything due there.
  void advance_to(proto::EpochTime t);
  /// Feeds cell events up to now into the controller interfaces.
  void pump_cells();

  /// Scenario lines, offsets relative to boot time.
  void schedule(std::vector<sim::ScenarioEvent> const& events);
  /// Runs to quiescence or starvation.
  RunReport run();

  // ---- commands (protocol messages only) -------------------------------------
  /// Publishes CreateOrder to the manager. Throws UnknownProduct.
  std::string submit_order(std::string const& product);
  /// Adds a product definition to the catalog.
  void add_product(proto::ProductSpec spec);
  /// Adds a service definition and registers `provider` (default: the first
  /// cell holon) with the coordinator.
  void add_service(proto::ServiceDef def, std::optional<msg::ChannelId> provider = std::nullopt);

  /// Thread-safe: queues `fn` for the executor thread.
  void post(std::function<void()> fn);
  /// Executes queued commands; true when any ran.
  bool run_commands();
  /// Server loop: runs until `stop()`; time advances at `speed`.
  void serve();
  void stop();

  // ---- inspection ----------------------------------------------------------
  EventLog& events() noexcept { return events_; }
  holon::World& world() noexcept { return world_; }
  msg::Bus& bus() noexcept { return *bus_; }
  fb::TypeRegistry const& types() const noexcept { return types_; }
  SystemConfig const& config() const noexcept { return config_; }
  std::vector<fb::Resource*> resources() const;
  fb::Device& device(std::string_view name) const;  // throws ConfigError
  holon::ManagerB1* manager() const;
  msg::MessagingStats const& messaging_stats() const noexcept { return stats_; }
  std::vector<std::string> const& submitted() const noexcept { return submitted_; }
  /// Channels the configuration declares; every delivery must use one.
  std::set<msg::ChannelId> declared_channels() const;
  std::vector<msg::Envelope> const& deliveries() const noexcept { return deliveries_; }
  void record_deliveries(bool on) { record_ = on; }
  std::uint64_t steps() const noexcept { return steps_; }

 private:
  void build_device(DeviceConfig const& d);
  void on_hmi(std::string const& payload);
  bool outstanding() const;
  bool any_pending() const;

  SystemConfig config_;
  RunOptions options_;
  holon::World world_;
  fb::TypeRegistry types_;
  msg::MessagingStats stats_;
  std::unique_ptr<msg::Bus> bus_;
  std::vector<std::unique_ptr<fb::Device>> devices_;
  std::mt19937_64 rng_;
  EventLog events_;
  std::ofstream trace_;
  std::uint64_t hmi_token_ = 0;

  std::deque<std::pair<proto::EpochTime, sim::ScenarioEvent>> scenario_;
  std::vector<std::string> submitted_;
  std::vector<std::string> rejected_provisions_;
  int order_serial_ = 0;
  proto::EpochTime last_frame_;
  std::vector<msg::Envelope> deliveries_;
  bool record_ = false;
  std::uint64_t steps_ = 0;

  std::mutex commands_mutex_;
  std::condition_variable commands_cv_;
  std::deque<std::function<void()>> commands_;
  bool stopping_ = false;
};

}  // namespace hms::gateway
