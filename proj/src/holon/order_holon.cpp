#include <algorithm>
#include <sstream>

#include "hms/error.hpp"
#include "hms/fb/device.hpp"
#include "hms/holon/holons.hpp"
#include "hms/proto/schema.hpp"
#include "hms/proto/xml.hpp"

namespace hms::holon {

using sched::PlanState;

namespace {

bool terminal(std::string_view state) { return state == "Done" || state == "Failed" || state == "Cancelled"; }

bool scheduled_or_later(std::string_view state) {
  return state == "Scheduled" || state == "Executing" || state == "Done";
}

}  // namespace

// ---- OrderB1 ------------------------------------------------------------------

void OrderB1::on_create(fb::BlockContext& ctx) {
  inbox_ = msg::ChannelId::parse(ctx.text("INBOX"));
  holon_ = ctx.text("ID");
}

void OrderB1::on_event(fb::BlockContext& ctx, std::string_view event) {
  if (event == "Wakeup") {
    if (negotiation_ && !negotiation_->finished()) apply(ctx, negotiation_->on_timeout(world_.now));
    return;
  }
  if (event != "RecGroupMsg") return;
  auto m = incoming(ctx, event);
  if (!m) return;
  if (m->type_name == "CreateOrder") {
    if (!started_) start(ctx, *m);
    return;
  }
  if (started_) on_group(ctx, *m);
}

void OrderB1::start(fb::BlockContext& ctx, proto::Message const& m) {
  started_ = true;
  product_ = m.at("Product");
  order_id_ = std::string(m.get("OrderID").value_or(holon_));
  path_ = std::string(m.get("Path").value_or(""));
  if (m.has("Parent")) {
    parent_ = proto::channel_attr(m, "Parent");
    parent_order_ = order_id_.substr(0, order_id_.rfind('.'));
  }

  auto spec = world_.products.find(product_);
  if (spec == world_.products.end()) return fail(ctx, "UnknownProduct: " + product_);
  std::stringstream ancestors(path_);
  for (std::string p; std::getline(ancestors, p, '/');)
    if (p == product_) return fail(ctx, "CyclicProduct: " + path_ + "/" + product_);

  sched::Expansion expansion;
  try {
    expansion = sched::expand(spec->second, world_.stock, world_.products);
  } catch (Error const& e) {
    return fail(ctx, e.what());
  }
  stocked_ = expansion.stocked;
  for (auto const& s : spec->second.services) steps_.push_back({s.serv_id});
  for (std::size_t i = 0; i < expansion.to_build.size(); ++i)
    children_.push_back({order_id_ + "." + std::to_string(i + 1), expansion.to_build[i]});

  for (auto const& c : children_) {
    proto::Message create("CreateOrder");
    create.set("Product", c.product).set("OrderID", c.order_id).set("Parent", inbox_.to_string());
    create.set("Path", path_ + "/" + product_);
    send_group(ctx, world_.manager, create);
  }
  report(ctx);
  maybe_negotiate(ctx);
}

void OrderB1::maybe_negotiate(fb::BlockContext& ctx) {
  if (state_ != PlanState::Pending) return;
  for (auto const& c : children_)
    if (!scheduled_or_later(c.state)) return;
  state_ = PlanState::Negotiating;
  report(ctx);
  next_service(ctx);
}

void OrderB1::next_service(fb::BlockContext& ctx) {
  auto it = std::find_if(steps_.begin(), steps_.end(), [](Step const& s) { return !s.slot; });
  if (it == steps_.end()) {
    state_ = PlanState::Scheduled;
    report(ctx);
    return;
  }
  // Components first, then this product's services in order.
  pending_min_ = world_.now;
  for (auto const& c : children_)
    if (c.end) pending_min_ = std::max(pending_min_, *c.end);
  if (it != steps_.begin()) pending_min_ = std::max(pending_min_, std::prev(it)->slot->end);

  auto index = std::to_string(it - steps_.begin() + 1);
  lookup_id_ = order_id_ + "/" + index + "/" + it->serv_id;
  proto::Message lookup("LookupService");
  lookup.set("ID", lookup_id_).set("ServID", it->serv_id).set("Sender", inbox_.to_string());
  send_group(ctx, world_.coordinator, lookup);
}

void OrderB1::on_group(fb::BlockContext& ctx, proto::Message const& m) {
  auto const& type = m.type_name;
  try {
    if (type == "RspLookup") {
      if (m.get("ID") != std::optional<std::string_view>(lookup_id_) || negotiation_) return;
      auto step = std::find_if(steps_.begin(), steps_.end(), [](Step const& s) { return !s.slot; });
      if (step == steps_.end() || state_ != PlanState::Negotiating) return;
      std::vector<msg::ChannelId> providers;
      for (auto const& p : m.children) providers.push_back(proto::channel_attr(p, "HolonAddr"));
      negotiation_.emplace(lookup_id_, step->serv_id, pending_min_, inbox_, world_.negotiation);
      negotiation_->set_order(order_id_, parent_.has_value());
      apply(ctx, negotiation_->begin(std::move(providers), world_.now));
    } else if (type == "RspBidForOp") {
      if (negotiation_) apply(ctx, negotiation_->on_bid(proto::BidResponse::from(m), world_.now));
    } else if (type == "ConfirmOp") {
      if (negotiation_) apply(ctx, negotiation_->on_confirm(proto::ConfirmOp::from(m), world_.now));
    } else if (type == "OrderStatus") {
      auto child = std::find_if(children_.begin(), children_.end(),
                                [&](Child const& c) { return c.order_id == m.at("OrderID"); });
      if (child == children_.end()) return;
      if (auto s = m.get("State")) child->state = std::string(*s);
      child->percent = static_cast<int>(proto::int_attr(m, "Percent"));
      if (m.has("EndTime")) child->end = proto::epoch_attr(m, "EndTime");
      if (child->state == "Failed") return fail(ctx, "component " + child->order_id + " failed");
      maybe_negotiate(ctx);
      report(ctx);
    } else if (type == "OpStarted" || type == "OpProgress" || type == "OpDone") {
      auto* step = step_for(m.at("ID"));
      if (!step || state_ == PlanState::Failed) return;
      if (type == "OpStarted" && state_ == PlanState::Scheduled) state_ = PlanState::Executing;
      if (type == "OpProgress") step->percent = static_cast<int>(proto::int_attr(m, "Percent"));
      if (type == "OpDone") {
        step->done = true;
        step->percent = 100;
        if (std::all_of(steps_.begin(), steps_.end(), [](Step const& s) { return s.done; })) state_ = PlanState::Done;
      }
      report(ctx);
    } else if (type == "OpFailed") {
      if (step_for(m.at("ID"))) fail(ctx, std::string(m.get("Reason").value_or("operation failed")));
    }
  } catch (Error const&) {
    // Malformed replies are ignored; negotiation timeouts cover the silence.
  }
}

void OrderB1::apply(fb::BlockContext& ctx, sched::Negotiation::Step const& step) {
  for (auto const& out : step.send) send_group(ctx, out.to, out.message);
  if (step.wake_at) {
    ctx.set_output("DT", std::max<std::int64_t>(0, *step.wake_at - world_.now));
    ctx.emit("StartTimer");
  }
  if (!negotiation_ || !negotiation_->finished()) return;
  ctx.emit("StopTimer");
  if (negotiation_->state() == sched::Negotiation::State::Failed) {
    auto why = std::string(to_string(*negotiation_->error())) + ": " + negotiation_->error_detail();
    return fail(ctx, why);
  }
  auto const& won = *negotiation_->awarded();
  auto step_it = std::find_if(steps_.begin(), steps_.end(), [](Step const& s) { return !s.slot; });
  step_it->slot = sched::ScheduleSlot{step_it->serv_id, won.id, order_id_, won.start, won.finish(), false,
                                      parent_.has_value()};
  negotiation_.reset();
  next_service(ctx);
}

void OrderB1::fail(fb::BlockContext& ctx, std::string const& reason) {
  if (state_ == PlanState::Failed || state_ == PlanState::Done) return;
  (void)reason;
  state_ = PlanState::Failed;
  if (negotiation_) {
    negotiation_.reset();
    ctx.emit("StopTimer");
  }
  report(ctx);
}

OrderB1::Step* OrderB1::step_for(std::string_view conversation) {
  for (auto& s : steps_)
    if (s.slot && s.slot->conversation == conversation) return &s;
  return nullptr;
}

int OrderB1::percent() const {
  if (state_ == PlanState::Done) return 100;
  int total = static_cast<int>(children_.size() + steps_.size());
  if (total == 0) return 0;
  int sum = 0;
  for (auto const& c : children_) sum += c.percent;
  for (auto const& s : steps_) sum += s.done ? 100 : s.percent;
  return sum / total;
}

void OrderB1::report(fb::BlockContext& ctx) {
  auto state = std::string(to_string(state_));
  int pct = percent();
  if (reported_ == std::pair{state, pct}) return;
  reported_ = {state, pct};

  proto::Message status("OrderStatus");
  status.set("OrderID", order_id_).set("Percent", std::int64_t{pct}).set("Holon", holon_).set("State", state);
  if (std::all_of(steps_.begin(), steps_.end(), [](Step const& s) { return s.slot.has_value(); }) && !steps_.empty()) {
    EpochTime end;
    for (auto const& s : steps_) end = std::max(end, s.slot->end);
    status.set("EndTime", end.to_string());
  }
  if (parent_) send_group(ctx, *parent_, status);
  send_group(ctx, world_.manager, status);

  proto::Message progress("OrderProgress");
  progress.set("OrderID", order_id_).set("Holon", holon_).set("Product", product_);
  if (parent_) progress.set("Parent", parent_order_);
  progress.set("State", state).set("Percent", std::int64_t{pct});
  send_hmi(ctx, progress);
}

// ---- ManagerB1 ----------------------------------------------------------------

void ManagerB1::on_create(fb::BlockContext& ctx) { inbox_ = msg::ChannelId::parse(ctx.text("INBOX")); }

void ManagerB1::on_event(fb::BlockContext& ctx, std::string_view event) {
  if (event == "INIT") {
    proto::Message hello("HolonCreated");
    hello.set("Holon", ctx.text("ID")).set("Kind", "Manager").set("Inbox", inbox_.to_string());
    send_hmi(ctx, hello);
    return;
  }
  if (event != "RecGroupMsg" && event != "RecMsgHMI") return;
  auto m = incoming(ctx, event);
  if (!m) return;
  try {
    if (m->type_name == "CreateOrder") create_order(ctx, *m);
    else if (m->type_name == "Response") on_response(ctx, *m);
    else if (m->type_name == "OrderStatus") on_status(ctx, *m);
  } catch (Error const&) {
  }
}

void ManagerB1::reject(fb::BlockContext& ctx, proto::Message const& create, std::string const& reason) {
  (void)reason;
  auto order_id = std::string(create.get("OrderID").value_or(""));
  if (create.has("Parent")) {
    proto::Message status("OrderStatus");
    status.set("OrderID", order_id).set("Percent", std::int64_t{0}).set("State", "Failed");
    send_group(ctx, proto::channel_attr(create, "Parent"), status);
  }
  proto::Message progress("OrderProgress");
  progress.set("OrderID", order_id).set("Product", create.at("Product"));
  progress.set("State", "Failed").set("Percent", std::int64_t{0});
  send_hmi(ctx, progress);
}

void ManagerB1::create_order(fb::BlockContext& ctx, proto::Message const& m) {
  proto::Message create = m;
  if (!create.has("OrderID")) create.set("OrderID", "O" + std::to_string(++roots_));
  auto const& product = create.at("Product");
  auto spec = world_.products.find(product);
  if (spec == world_.products.end()) return reject(ctx, create, "UnknownProduct");
  if (!create.has("Parent")) {
    // Refuse trees that can never be built before spawning anything.
    auto stock = world_.stock;
    try {
      sched::decompose_order(spec->second, stock, world_.products);
    } catch (Error const& e) {
      return reject(ctx, create, e.what());
    }
  }

  std::string parent;
  if (create.has("Parent")) {
    auto addr = proto::channel_attr(create, "Parent");
    for (auto const& [id, n] : nodes_)
      if (n.inbox == addr) parent = id;
  }
  auto id = "OH" + std::to_string(++serial_);
  auto inbox = world_.order_inbox_base;
  inbox.port = static_cast<std::uint16_t>(inbox.port + serial_ - 1);
  nodes_[id] = Node{id, inbox, parent, {}, create.at("OrderID"), product, "Pending", false, false, create};

  fb::ParamMap params{{"ID", id}, {"INBOX", inbox.to_string()}};
  params["HMI"] = world_.hmi ? world_.hmi->to_string() : std::string();
  fb::MgmtRequest req{"M" + std::to_string(++requests_), world_.order_resource,
                      fb::CreateInstance{id, "OrderHolon", params}, inbox_};
  pending_[req.id] = {id, true};
  send_group(ctx, world_.order_device, fb::mgmt_request_message(req));
}

void ManagerB1::on_response(fb::BlockContext& ctx, proto::Message const& m) {
  auto p = pending_.find(m.at("ID"));
  if (p == pending_.end()) return;
  auto [holon, is_create] = p->second;
  pending_.erase(p);
  auto node = nodes_.find(holon);
  if (node == nodes_.end()) return;
  auto& n = node->second;
  bool ok = !m.has("Reason");

  if (is_create) {
    if (!ok) {
      reject(ctx, n.create, m.at("Reason"));
      nodes_.erase(node);
      return;
    }
    n.spawned = true;
    ++spawned_;
    world_.holons.add({holon, HolonKind::Order, n.inbox, n.parent, n.order_id, n.product});
    if (!n.parent.empty()) nodes_[n.parent].children.insert(holon);
    proto::Message created("HolonCreated");
    created.set("Holon", holon).set("Kind", "Order").set("Inbox", n.inbox.to_string());
    if (!n.parent.empty()) created.set("Parent", n.parent);
    created.set("OrderID", n.order_id).set("Product", n.product);
    send_hmi(ctx, created);
    send_group(ctx, n.inbox, n.create);
    return;
  }

  if (!ok) {
    n.removing = false;
    return;
  }
  ++despawned_;
  world_.holons.remove(holon);
  proto::Message removed("HolonRemoved");
  removed.set("Holon", holon);
  send_hmi(ctx, removed);
  auto parent = n.parent;
  nodes_.erase(node);
  if (parent.empty()) return;
  if (auto pn = nodes_.find(parent); pn != nodes_.end()) {
    pn->second.children.erase(holon);
    maybe_despawn(ctx, parent);
  }
}

void ManagerB1::on_status(fb::BlockContext& ctx, proto::Message const& m) {
  auto holon = std::string(m.get("Holon").value_or(""));
  auto node = nodes_.find(holon);
  if (node == nodes_.end()) return;
  if (auto s = m.get("State")) node->second.state = std::string(*s);
  if (terminal(node->second.state)) maybe_despawn(ctx, holon);
}

void ManagerB1::maybe_despawn(fb::BlockContext& ctx, std::string const& holon) {
  auto node = nodes_.find(holon);
  if (node == nodes_.end()) return;
  auto& n = node->second;
  if (!n.spawned || n.removing || !terminal(n.state) || !n.children.empty()) return;
  n.removing = true;
  fb::MgmtRequest req{"M" + std::to_string(++requests_), world_.order_resource, fb::DeleteInstance{holon}, inbox_};
  pending_[req.id] = {holon, false};
  send_group(ctx, world_.order_device, fb::mgmt_request_message(req));
}

void ManagerB1::despawn(fb::BlockContext& ctx, std::string const& holon) {
  auto node = nodes_.find(holon);
  if (node == nodes_.end()) throw Error(Errc::UnknownInstance, holon);
  auto const& n = node->second;
  if (!terminal(n.state)) throw Error(Errc::HolonBusy, holon + " is " + n.state);
  if (!n.children.empty()) throw Error(Errc::HolonBusy, holon + " still has " + std::to_string(n.children.size()) + " children");
  maybe_despawn(ctx, holon);
}

// ---- coordinator / service directory ------------------------------------------------

namespace {

class DirectoryB1 final : public Component {
 public:
  explicit DirectoryB1(World& world) : Component(true), world_(world) {}

  void on_create(fb::BlockContext& ctx) override { inbox_ = msg::ChannelId::parse(ctx.text("INBOX")); }

  void on_event(fb::BlockContext& ctx, std::string_view event) override {
    if (event == "INIT") {
      proto::Message hello("HolonCreated");
      hello.set("Holon", ctx.text("ID")).set("Kind", "Coordinator").set("Inbox", inbox_.to_string());
      send_hmi(ctx, hello);
      for (auto const& row : world_.directory.rows()) announce(ctx, row);
      return;
    }
    if (event != "RecGroupMsg") return;
    auto m = incoming(ctx, event);
    if (!m) return;
    try {
      if (m->type_name == "RegisterService") {
        auto [row, added] = world_.directory.register_service(m->at("ServID"), proto::channel_attr(*m, "HolonAddr"));
        if (added) announce(ctx, row);
      } else if (m->type_name == "LookupService" && m->has("Sender")) {
        proto::Message rsp("RspLookup");
        if (auto id = m->get("ID")) rsp.set("ID", std::string(*id));
        rsp.set("ServID", m->at("ServID"));
        for (auto const& addr : world_.directory.lookup(m->at("ServID")))
          rsp.add(proto::Message("Provider").set("HolonAddr", addr.to_string()));
        send_group(ctx, proto::channel_attr(*m, "Sender"), rsp);
      }
    } catch (Error const&) {
    }
  }

 private:
  void announce(fb::BlockContext& ctx, DirectoryEntry const& row) {
    proto::Message reg("ServiceRegistered");
    reg.set("ID", std::int64_t{row.id}).set("Service", row.service).set("HolonAddr", row.holon_addr.to_string());
    send_hmi(ctx, reg);
  }

  World& world_;
  msg::ChannelId inbox_;
};

}  // namespace

std::unique_ptr<fb::Behavior> make_directory_component(World& world) { return std::make_unique<DirectoryB1>(world); }

}  // namespace hms::holon
