#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hms/proto/product.hpp"
#include "hms/sched/agenda.hpp"
#include "hms/sched/negotiation.hpp"

namespace hms::sched {

enum class PlanState { Pending, Negotiating, Scheduled, Executing, Done, Failed };
std::string_view to_string(PlanState s) noexcept;
std::optional<PlanState> plan_state_from(std::string_view s) noexcept;

using StockTable = std::map<std::string, int, std::less<>>;
using ProductCatalog = std::map<std::string, proto::ProductSpec, std::less<>>;

struct PlanNode {
  std::string product;
  std::vector<std::string> services;  // ServIDs in processing order
  std::vector<std::string> stocked;   // components taken from stock
  std::vector<PlanNode> children;
  std::vector<ScheduleSlot> awarded;  // one per service once scheduled
  PlanState state = PlanState::Pending;

  std::size_t size() const;
  int depth() const;
  /// Latest awarded end in this subtree; `floor` when nothing is awarded.
  EpochTime finish(EpochTime floor = EpochTime{}) const;
  /// Done needs every child Done, Scheduled needs every service awarded.
  bool consistent() const;
};

/// Result of looking one level down a product: which components come from
/// stock and which need their own order.
struct Expansion {
  std::vector<std::string> stocked;
  std::vector<std::string> to_build;
};

/// Takes what it can from `stock`. Throws UnknownProduct for components
/// without a spec.
Expansion expand(proto::ProductSpec const& spec, StockTable& stock, ProductCatalog const& catalog);

/// Full tree. Throws UnknownProduct or CyclicProduct.
PlanNode decompose_order(proto::ProductSpec const& product, StockTable& stock, ProductCatalog const& catalog);

/// Books one service no earlier than `min_start`; throws on failure.
using NegotiateFn = std::function<ScheduleSlot(std::string const& serv_id, EpochTime min_start)>;

/// Leaves first, services of one node in sequence, each parent no earlier
/// than all of its children. A failing node and all its ancestors end
/// Failed and the negotiation error is rethrown.
void schedule_plan(PlanNode& plan, NegotiateFn const& negotiate, EpochTime now);

/// Every slot of a node starts at or after the end of every slot below it.
bool precedence_holds(PlanNode const& plan);

/// Drives a Negotiation to completion against in-process schedulers, with
/// immediate replies. Throws the negotiation error on failure.
ScheduleSlot negotiate_local(std::string const& id_prefix, std::string const& serv_id, EpochTime min_start,
                             std::vector<ResourceScheduler*> const& providers, msg::ChannelId self,
                             NegotiationConfig config = {});

}  // namespace hms::sched
