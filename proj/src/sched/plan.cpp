#include "hms/sched/plan.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "hms/error.hpp"

namespace hms::sched {

namespace {

constexpr std::string_view kStateNames[] = {"Pending", "Negotiating", "Scheduled", "Executing", "Done", "Failed"};

PlanNode decompose(proto::ProductSpec const& spec, StockTable& stock, ProductCatalog const& catalog,
                   std::vector<std::string>& path) {
  if (std::find(path.begin(), path.end(), spec.name) != path.end())
    throw Error(Errc::CyclicProduct, spec.name);
  path.push_back(spec.name);
  PlanNode node;
  node.product = spec.name;
  for (auto const& s : spec.services) node.services.push_back(s.serv_id);
  auto exp = expand(spec, stock, catalog);
  node.stocked = exp.stocked;
  for (auto const& name : exp.to_build) node.children.push_back(decompose(catalog.find(name)->second, stock, catalog, path));
  path.pop_back();
  return node;
}

void mark_failed(PlanNode& n) {
  if (n.state != PlanState::Done) n.state = PlanState::Failed;
}

}  // namespace

std::string_view to_string(PlanState s) noexcept { return kStateNames[static_cast<int>(s)]; }

std::optional<PlanState> plan_state_from(std::string_view s) noexcept {
  for (int i = 0; i < 6; ++i)
    if (kStateNames[i] == s) return static_cast<PlanState>(i);
  return std::nullopt;
}

std::size_t PlanNode::size() const {
  std::size_t n = 1;
  for (auto const& c : children) n += c.size();
  return n;
}

int PlanNode::depth() const {
  int d = 0;
  for (auto const& c : children) d = std::max(d, c.depth());
  return d + 1;
}

EpochTime PlanNode::finish(EpochTime floor) const {
  EpochTime t = floor;
  for (auto const& s : awarded) t = std::max(t, s.end);
  for (auto const& c : children) t = std::max(t, c.finish(floor));
  return t;
}

bool PlanNode::consistent() const {
  if (state == PlanState::Done &&
      !std::all_of(children.begin(), children.end(), [](auto const& c) { return c.state == PlanState::Done; }))
    return false;
  if ((state == PlanState::Scheduled || state == PlanState::Executing || state == PlanState::Done) &&
      awarded.size() != services.size())
    return false;
  return std::all_of(children.begin(), children.end(), [](auto const& c) { return c.consistent(); });
}

Expansion expand(proto::ProductSpec const& spec, StockTable& stock, ProductCatalog const& catalog) {
  Expansion out;
  for (auto const& service : spec.services) {
    for (auto const& component : service.components) {
      auto it = stock.find(component);
      if (it != stock.end() && it->second > 0) {
        --it->second;
        out.stocked.push_back(component);
        continue;
      }
      if (!catalog.count(component)) throw Error(Errc::UnknownProduct, component + " (component of " + spec.name + ")");
      out.to_build.push_back(component);
    }
  }
  return out;
}

PlanNode decompose_order(proto::ProductSpec const& product, StockTable& stock, ProductCatalog const& catalog) {
  std::vector<std::string> path;
  return decompose(product, stock, catalog, path);
}

void schedule_plan(PlanNode& plan, NegotiateFn const& negotiate, EpochTime now) {
  EpochTime ready = now;
  for (auto& child : plan.children) {
    try {
      schedule_plan(child, negotiate, now);
    } catch (...) {
      mark_failed(plan);
      throw;
    }
    ready = std::max(ready, child.finish(now));
  }
  plan.state = PlanState::Negotiating;
  plan.awarded.clear();
  for (auto const& serv : plan.services) {
    try {
      auto slot = negotiate(serv, ready);
      ready = slot.end;
      plan.awarded.push_back(std::move(slot));
    } catch (...) {
      mark_failed(plan);
      throw;
    }
  }
  plan.state = PlanState::Scheduled;
}

bool precedence_holds(PlanNode const& plan) {
  for (auto const& child : plan.children) {
    if (!precedence_holds(child)) return false;
    auto below = child.finish();
    for (auto const& s : plan.awarded)
      if (s.start < below) return false;
  }
  for (std::size_t i = 1; i < plan.awarded.size(); ++i)
    if (plan.awarded[i].start < plan.awarded[i - 1].end) return false;
  return true;
}

ScheduleSlot negotiate_local(std::string const& id_prefix, std::string const& serv_id, EpochTime min_start,
                             std::vector<ResourceScheduler*> const& providers, msg::ChannelId self,
                             NegotiationConfig config) {
  Negotiation n(id_prefix, serv_id, min_start, self, config);
  std::vector<msg::ChannelId> addrs;
  for (auto* p : providers)
    if (p->offers(serv_id)) addrs.push_back(p->address());
  auto find = [&](msg::ChannelId const& a) -> ResourceScheduler* {
    for (auto* p : providers)
      if (p->address() == a) return p;
    return nullptr;
  };

  EpochTime now = min_start;
  std::deque<Negotiation::Outbound> wire;
  auto post = [&](Negotiation::Step s) {
    for (auto& o : s.send) wire.push_back(std::move(o));
  };
  post(n.begin(addrs, now));
  while (!n.finished()) {
    if (wire.empty()) {
      now = n.deadline().value_or(now);
      post(n.on_timeout(now));
      continue;
    }
    auto out = std::move(wire.front());
    wire.pop_front();
    auto* p = find(out.to);
    if (!p) continue;
    auto const& type = out.message.type_name;
    if (type == "GetBidForOp") {
      if (auto rsp = p->quote(proto::BidRequest::from(out.message))) post(n.on_bid(*rsp, now));
    } else if (type == "AwardOp") {
      post(n.on_confirm(p->award(proto::AwardOp::from(out.message)), now));
    } else if (type == "CancelOp") {
      p->cancel(out.message.at("ID"));
    }
  }
  if (n.state() == Negotiation::State::Failed) throw Error(*n.error(), n.error_detail());
  auto* winner = find(n.awarded()->sender);
  return *winner->agenda().find(n.conversation());
}

}  // namespace hms::sched
