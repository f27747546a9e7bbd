#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hms/fb/resource.hpp"
#include "hms/holon/interfaces.hpp"
#include "hms/holon/world.hpp"
#include "hms/msg/transport.hpp"
#include "hms/sched/agenda.hpp"

namespace hms::holon {

/// Registers the component types (CellB1, CellB2, OrderB1, ManagerB1,
/// DirectoryB1), the HII controller interface and the OrderHolon composite.
/// Messaging and timer types must already be registered.
void register_holon_types(fb::TypeRegistry& types, World& world);

struct ResourceHolonSpec {
  std::string id;
  msg::ChannelId inbox;
  std::string b1_type = "CellB1";
  std::string b2_type = "CellB2";
  fb::ParamMap b1_params;  // ID and INBOX are filled in
  fb::ParamMap b2_params;
  std::optional<msg::ChannelId> ctrl_out;  // commands to the controller interface
  std::optional<msg::ChannelId> ctrl_in;   // its status reports
  std::optional<msg::ChannelId> hmi;
  std::optional<msg::ChannelId> hmi_in;
};

/// SUBSCRIBE(inbox) -> Dispatcher -> B1 | B2, both sending through their own
/// PUBLISH, cross-linked, B2 wired to the controller channels. Blocks are
/// named "<id>.<role>". Throws ChannelInUse when the inbox is taken.
void assemble_resource_holon(fb::Resource& resource, msg::Bus& bus, World& world, ResourceHolonSpec const& spec);

/// Single-component holon (manager, coordinator): SUBSCRIBE -> OrderDispatcher
/// -> B1 -> PUBLISH.
struct ServiceHolonSpec {
  std::string id;
  msg::ChannelId inbox;
  std::string b1_type;
  HolonKind kind = HolonKind::Manager;
  fb::ParamMap params;
  std::optional<msg::ChannelId> hmi;
};
void assemble_service_holon(fb::Resource& resource, msg::Bus& bus, World& world, ServiceHolonSpec const& spec);

// ---- behaviors with an inspection surface -----------------------------------

/// Conscious component of a cell: bids, commits awards, hands them to B2.
class CellB1 final : public Component {
 public:
  explicit CellB1(World& world) : Component(true), world_(world) {}
  void on_event(fb::BlockContext& ctx, std::string_view event) override;

  sched::ResourceScheduler const* scheduler() const noexcept { return sched_.get(); }
  std::vector<std::string> const& resident_view() const noexcept { return resident_; }

 private:
  void on_create(fb::BlockContext& ctx) override;
  void announce(fb::BlockContext& ctx);
  void on_group(fb::BlockContext& ctx, proto::Message const& m);
  void cancel(fb::BlockContext& ctx, std::string const& conversation);

  World& world_;
  std::unique_ptr<sched::ResourceScheduler> sched_;
  std::vector<std::string> resident_;
  std::vector<std::string> offered_;
  msg::ChannelId inbox_;
};

/// Subconscious component of a cell: turns awarded jobs into controller
/// command sequences and relays controller reports.
class CellB2 final : public Component {
 public:
  struct Job {
    proto::Message exec;  // the ExecOp
    std::optional<msg::ChannelId> order_addr;
    std::size_t next_command = 0;
    bool retried = false;
    bool queued = false;  // every command acknowledged
  };

  explicit CellB2(World& world) : Component(false), world_(world) {}
  void on_event(fb::BlockContext& ctx, std::string_view event) override;

  std::map<std::string, Job> const& jobs() const noexcept { return jobs_; }
  int failures() const noexcept { return failures_; }

  /// Commands sent for every job, in order.
  static std::vector<std::string> const& command_sequence();

 private:
  void send_command(fb::BlockContext& ctx, std::string const& conv);
  void on_ctrl(fb::BlockContext& ctx, proto::Message m);

  World& world_;
  std::map<std::string, Job> jobs_;
  std::map<std::int64_t, std::string> outstanding_;  // Seq -> conversation
  std::int64_t seq_ = 0;
  int failures_ = 0;
};

/// Order-holon manager: spawns and removes order holons through management
/// requests to the order device.
class ManagerB1 final : public Component {
 public:
  struct Node {
    std::string id;
    msg::ChannelId inbox;
    std::string parent;
    std::set<std::string> children;
    std::string order_id;
    std::string product;
    std::string state = "Pending";
    bool spawned = false;
    bool removing = false;
    proto::Message create;  // forwarded once the holon exists
  };

  explicit ManagerB1(World& world) : Component(true), world_(world) {}
  void on_create(fb::BlockContext& ctx) override;
  void on_event(fb::BlockContext& ctx, std::string_view event) override;

  /// Throws HolonBusy unless the holon's plan is terminal and its children
  /// are gone, UnknownInstance for unknown holons.
  void despawn(fb::BlockContext& ctx, std::string const& holon);

  std::map<std::string, Node> const& nodes() const noexcept { return nodes_; }
  int spawned() const noexcept { return spawned_; }
  int despawned() const noexcept { return despawned_; }

 private:
  void create_order(fb::BlockContext& ctx, proto::Message const& m);
  void on_response(fb::BlockContext& ctx, proto::Message const& m);
  void on_status(fb::BlockContext& ctx, proto::Message const& m);
  void maybe_despawn(fb::BlockContext& ctx, std::string const& holon);
  void reject(fb::BlockContext& ctx, proto::Message const& create, std::string const& reason);

  World& world_;
  msg::ChannelId inbox_;
  std::map<std::string, Node> nodes_;
  std::map<std::string, std::pair<std::string, bool>> pending_;  // request id -> (holon, is_create)
  int serial_ = 0;
  int requests_ = 0;
  int spawned_ = 0;
  int despawned_ = 0;
  int roots_ = 0;
};

/// Conscious component of an order holon.
class OrderB1 final : public Component {
 public:
  struct Child {
    std::string order_id;
    std::string product;
    std::string state = "Pending";
    int percent = 0;
    std::optional<EpochTime> end;
  };
  struct Step {
    std::string serv_id;
    std::optional<sched::ScheduleSlot> slot;
    int percent = 0;
    bool done = false;
  };

  explicit OrderB1(World& world) : Component(true), world_(world) {}
  void on_create(fb::BlockContext& ctx) override;
  void on_event(fb::BlockContext& ctx, std::string_view event) override;

  sched::PlanState state() const noexcept { return state_; }
  std::vector<Child> const& children() const noexcept { return children_; }
  std::vector<Step> const& steps() const noexcept { return steps_; }
  std::vector<std::string> const& stocked() const noexcept { return stocked_; }

 private:
  void start(fb::BlockContext& ctx, proto::Message const& m);
  void on_group(fb::BlockContext& ctx, proto::Message const& m);
  void maybe_negotiate(fb::BlockContext& ctx);
  void next_service(fb::BlockContext& ctx);
  void apply(fb::BlockContext& ctx, sched::Negotiation::Step const& step);
  void fail(fb::BlockContext& ctx, std::string const& reason);
  void report(fb::BlockContext& ctx);
  int percent() const;
  Step* step_for(std::string_view conversation);

  World& world_;
  msg::ChannelId inbox_;
  std::string holon_;
  std::string order_id_;
  std::string product_;
  std::string path_;
  std::optional<msg::ChannelId> parent_;
  std::string parent_order_;
  sched::PlanState state_ = sched::PlanState::Pending;
  std::vector<std::string> stocked_;
  std::vector<Child> children_;
  std::vector<Step> steps_;
  std::optional<sched::Negotiation> negotiation_;
  std::string lookup_id_;
  EpochTime pending_min_;
  bool started_ = false;
  std::pair<std::string, int> reported_{"", -1};
};

}  // namespace hms::holon
