#include "hms/gateway/system.hpp"

#include <chrono>
#include <sstream>
#include <thread>
#include <variant>

#include "hms/error.hpp"
#include "hms/proto/schema.hpp"
#include "hms/proto/xml.hpp"

namespace hms::gateway {

using proto::EpochTime;

std::string RunReport::summary() const {
  std::ostringstream out;
  out << (exit_code == 0 ? "ok" : "FAILED") << ": " << orders.size() << " order(s), " << failed.size()
      << " not done, " << frames << " frames, finished at " << finished_at.seconds;
  if (starved) out << " (starved)";
  for (auto const& f : failed) out << "\n  not done: " << f;
  for (auto const& r : rejected_provisions) out << "\n  rejected: " << r;
  return out.str();
}

System::System(SystemConfig config, RunOptions options)
    : config_(std::move(config)), options_(std::move(options)), rng_(options_.seed) {
  world_.now = config_.start;
  last_frame_ = config_.start;
  world_.products = config_.products;
  for (auto const& s : config_.services) world_.services[s.serv_id] = s;
  world_.stock = config_.stock;
  world_.directory = config_.directory;
  world_.negotiation = config_.negotiation;
  world_.hmi = config_.hmi;
  world_.order_inbox_base = config_.order_inbox_base;
  world_.order_resource = config_.order_resource;
  world_.manager = config_.holon(HolonRole::Manager)->inbox;
  world_.coordinator = config_.holon(HolonRole::Coordinator)->inbox;
  for (auto const& d : config_.devices)
    if (d.name == config_.order_device) world_.order_device = *d.management;
  for (auto const& c : config_.cells)
    world_.cells[c.name].sim = std::make_unique<sim::CellSim>(c.params, config_.services, config_.start);

  bus_ = std::make_unique<msg::Bus>(msg::make_transport(options_.transport));
  bus_->set_tap([this](msg::Envelope const& e) {
    if (record_) deliveries_.push_back(e);
  });
  msg::register_messaging_types(types_, *bus_, stats_);
  fb::register_timer_types(types_, world_.timers, [this] { return world_.now; });
  holon::register_holon_types(types_, world_);

  if (options_.trace) {
    trace_.open(*options_.trace, std::ios::trunc);
    if (!trace_) throw Error(Errc::ConfigError, "cannot write trace " + options_.trace->string());
  }
}

System::~System() {
  if (hmi_token_) bus_->unsubscribe(hmi_token_);
  devices_.clear();
}

void System::boot() {
  hmi_token_ = bus_->subscribe(config_.hmi, [this](std::string const& payload) { on_hmi(payload); });
  for (auto const& d : config_.devices) build_device(d);
  settle();
}

void System::build_device(DeviceConfig const& d) {
  auto dev = std::make_unique<fb::Device>(d.name, types_);
  for (auto const& rc : d.resources) {
    auto& r = dev->add_resource(rc.name);
    for (auto const& i : rc.interfaces) {
      auto n = [&](char const* role) { return i.id + "." + role; };
      r.create_instance(n("PUB"), "PUBLISH", {{"ID", i.status.to_string()}});
      r.create_instance(n("HII"), "HII", {{"CELL", i.cell}});
      r.create_instance(n("SUB"), "SUBSCRIBE", {{"ID", i.commands.to_string()}});
      r.connect(n("SUB.IND"), n("HII.REQ"));
      r.connect(n("SUB.RD_1"), n("HII.SD"));
      r.connect(n("HII.IND"), n("PUB.REQ"));
      r.connect(n("HII.RD"), n("PUB.SD_1"));
    }
    for (auto const& h : rc.holons) {
      if (h.role == HolonRole::Cell) {
        holon::ResourceHolonSpec spec;
        spec.id = h.id;
        spec.inbox = h.inbox;
        std::string services;
        for (auto const& s : h.services) services += (services.empty() ? "" : ",") + s;
        spec.b1_params = {{"SERVICES", services}, {"CELL", h.cell}};
        spec.ctrl_out = h.ctrl_out;
        spec.ctrl_in = h.ctrl_in;
        spec.hmi = config_.hmi;
        holon::assemble_resource_holon(r, *bus_, world_, spec);
      } else {
        holon::ServiceHolonSpec spec;
        spec.id = h.id;
        spec.inbox = h.inbox;
        spec.b1_type = h.role == HolonRole::Manager ? "ManagerB1" : "DirectoryB1";
        spec.kind = h.role == HolonRole::Manager ? holon::HolonKind::Manager : holon::HolonKind::Coordinator;
        spec.hmi = config_.hmi;
        holon::assemble_service_holon(r, *bus_, world_, spec);
      }
    }
  }
  if (d.management) dev->bind_management(*bus_, *d.management);
  devices_.push_back(std::move(dev));
}

std::vector<fb::Resource*> System::resources() const {
  std::vector<fb::Resource*> out;
  for (auto const& d : devices_)
    for (auto* r : d->resources()) out.push_back(r);
  return out;
}

fb::Device& System::device(std::string_view name) const {
  for (auto const& d : devices_)
    if (d->name() == name) return *d;
  throw Error(Errc::ConfigError, "no device " + std::string(name));
}

holon::ManagerB1* System::manager() const {
  auto id = config_.holon(HolonRole::Manager)->id + ".B1";
  for (auto* r : resources())
    if (r->has_instance(id)) return dynamic_cast<holon::ManagerB1*>(r->behavior(id));
  return nullptr;
}

std::set<msg::ChannelId> System::declared_channels() const {
  std::set<msg::ChannelId> out{config_.hmi};
  for (auto const& d : config_.devices) {
    if (d.management) out.insert(*d.management);
    for (auto const& r : d.resources) {
      for (auto const& h : r.holons) {
        out.insert(h.inbox);
        if (h.ctrl_out) out.insert(*h.ctrl_out);
        if (h.ctrl_in) out.insert(*h.ctrl_in);
      }
      for (auto const& i : r.interfaces) {
        out.insert(i.commands);
        out.insert(i.status);
      }
    }
  }
  for (auto const& f : events_.since(0))
    if (f.kind == "HolonCreated")
      if (auto c = msg::ChannelId::try_parse(f.get("Inbox").value_or(""))) out.insert(*c);
  return out;
}

// ---- executor ---------------------------------------------------------------

bool System::any_pending() const {
  for (auto* r : resources())
    if (r->pending() > 0) return true;
  return false;
}

bool System::step() {
  std::vector<std::variant<msg::ChannelId, fb::Resource*>> ready;
  for (auto const& ch : bus_->ready()) ready.emplace_back(ch);
  for (auto* r : resources())
    if (r->pending() > 0) ready.emplace_back(r);
  if (ready.empty()) return false;
  auto const& pick = ready[rng_() % ready.size()];
  if (auto const* ch = std::get_if<msg::ChannelId>(&pick)) bus_->deliver_one(*ch);
  else std::get<fb::Resource*>(pick)->dispatch_step();
  ++steps_;
  return true;
}

std::size_t System::settle(std::size_t max_steps) {
  std::size_t n = 0;
  int idle_waits = 0;
  for (;;) {
    if (step()) {
      if (++n > max_steps) throw Error(Errc::StepBudgetExceeded, std::to_string(max_steps) + " steps without settling");
      idle_waits = 0;
      continue;
    }
    // A datagram that never arrives is given up on after ~2 s.
    if (bus_->in_flight() == 0 || ++idle_waits > 40) break;
    bus_->wait(std::chrono::milliseconds(50));
  }
  return n;
}

void System::pump_cells() {
  for (auto& [name, binding] : world_.cells) {
    for (auto const& e : binding.sim->advance_to(world_.now)) {
      if (!binding.report) continue;
      if (auto m = holon::controller_report(e, *binding.sim)) binding.report(*m);
    }
  }
}

std::optional<EpochTime> System::next_time() const {
  std::optional<EpochTime> t = world_.timers.next();
  auto consider = [&](std::optional<EpochTime> c) {
    if (c && (!t || *c < *t)) t = c;
  };
  for (auto const& [name, binding] : world_.cells) consider(binding.sim->next_event_time());
  if (!scenario_.empty()) consider(scenario_.front().first);
  return t;
}

void System::advance_to(EpochTime t) {
  if (t > world_.now) world_.now = t;
  world_.timers.fire_due(world_.now);
  while (!scenario_.empty() && scenario_.front().first <= world_.now) {
    auto e = scenario_.front().second;
    scenario_.pop_front();
    auto& cell = world_.cells.begin()->second;
    try {
      switch (e.kind) {
        case sim::ScenarioEvent::Kind::Board:
          for (int i = 0; i < e.count; ++i) cell.sim->board_arrived();
          break;
        case sim::ScenarioEvent::Kind::Refill: cell.sim->magazine_refill(e.count); break;
        case sim::ScenarioEvent::Kind::Order: submit_order(e.product); break;
        case sim::ScenarioEvent::Kind::Fault: cell.pending_faults += e.count; break;
      }
    } catch (Error const& err) {
      rejected_provisions_.push_back(sim::format_scenario_event(e) + ": " + err.what());
    }
  }
  pump_cells();
}

void System::schedule(std::vector<sim::ScenarioEvent> const& events) {
  for (auto const& e : events) scenario_.emplace_back(config_.start + e.offset, e);
  std::stable_sort(scenario_.begin(), scenario_.end(), [](auto const& a, auto const& b) { return a.first < b.first; });
}

bool System::outstanding() const {
  return events_.read([&](ReadModel const& m) {
    for (auto const& id : submitted_) {
      auto it = m.orders().find(id);
      if (it == m.orders().end() || (it->second.state != "Done" && it->second.state != "Failed")) return true;
    }
    return false;
  });
}

RunReport System::run() {
  RunReport report;
  auto busy = [&] { return bus_->queued() > 0 || any_pending(); };  // settle() already waited out datagrams
  for (;;) {
    run_commands();
    settle();
    pump_cells();
    if (busy()) continue;
    auto next = next_time();
    bool open = outstanding();
    if (!next) {
      if (open) {
        report.starved = true;
        world_.now = std::max(world_.now, last_frame_ + config_.idle_timeout);
      }
      break;
    }
    if (open && *next - last_frame_ > config_.idle_timeout) {
      report.starved = true;
      world_.now = std::max(world_.now, last_frame_ + config_.idle_timeout);
      break;
    }
    if (options_.speed > 0 && *next > world_.now)
      std::this_thread::sleep_for(std::chrono::duration<double>((*next - world_.now) / options_.speed));
    advance_to(*next);
  }

  report.finished_at = world_.now;
  report.orders = submitted_;
  events_.read([&](ReadModel const& m) {
    for (auto const& id : submitted_) {
      auto it = m.orders().find(id);
      if (it == m.orders().end() || it->second.state != "Done") report.failed.push_back(id);
    }
    return 0;
  });
  report.rejected_provisions = rejected_provisions_;
  report.frames = events_.size();
  report.exit_code = report.failed.empty() && !report.starved ? 0 : 1;
  if (trace_) trace_.flush();
  return report;
}

// ---- commands -----------------------------------------------------------------

std::string System::submit_order(std::string const& product) {
  if (!world_.products.count(product)) throw Error(Errc::UnknownProduct, product);
  auto id = "O" + std::to_string(++order_serial_);
  proto::Message create("CreateOrder");
  create.set("Product", product).set("OrderID", id);
  bus_->publish(world_.manager, proto::encode(create));
  submitted_.push_back(id);
  return id;
}

void System::add_product(proto::ProductSpec spec) {
  auto name = spec.name;
  world_.products.insert_or_assign(std::move(name), std::move(spec));
}

void System::add_service(proto::ServiceDef def, std::optional<msg::ChannelId> provider) {
  if (!provider) {
    auto const* cell = config_.holon(HolonRole::Cell);
    if (!cell) throw Error(Errc::NoProvider, def.serv_id);
    provider = cell->inbox;
  }
  proto::Message reg("RegisterService");
  reg.set("ServID", def.serv_id).set("HolonAddr", provider->to_string());
  world_.services.insert_or_assign(def.serv_id, def);
  bus_->publish(world_.coordinator, proto::encode(reg));
}

void System::post(std::function<void()> fn) {
  {
    std::lock_guard lock(commands_mutex_);
    commands_.push_back(std::move(fn));
  }
  commands_cv_.notify_all();
}

bool System::run_commands() {
  std::deque<std::function<void()>> batch;
  {
    std::lock_guard lock(commands_mutex_);
    batch.swap(commands_);
  }
  for (auto& fn : batch) fn();
  return !batch.empty();
}

void System::serve() {
  using clock = std::chrono::steady_clock;
  std::optional<std::pair<EpochTime, clock::time_point>> target;
  for (;;) {
    {
      std::lock_guard lock(commands_mutex_);
      if (stopping_) return;
    }
    run_commands();
    settle();
    pump_cells();
    if (bus_->queued() > 0 || any_pending()) continue;
    auto next = next_time();
    std::unique_lock lock(commands_mutex_);
    if (!next) {
      target.reset();
      commands_cv_.wait_for(lock, std::chrono::milliseconds(100), [&] { return stopping_ || !commands_.empty(); });
      continue;
    }
    if (options_.speed > 0) {
      if (!target || target->first != *next)
        target = {*next, clock::now() + std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(
                                             (*next - world_.now) / options_.speed))};
      if (commands_cv_.wait_until(lock, target->second, [&] { return stopping_ || !commands_.empty(); })) continue;
    }
    lock.unlock();
    target.reset();
    advance_to(*next);
  }
}

void System::stop() {
  {
    std::lock_guard lock(commands_mutex_);
    stopping_ = true;
  }
  commands_cv_.notify_all();
}

void System::on_hmi(std::string const& payload) {
  proto::Message m;
  try {
    m = proto::decode(payload);
  } catch (Error const&) {
    return;
  }
  if (!is_frame_kind(m.type_name)) return;
  auto f = events_.append(m, world_.now);
  last_frame_ = world_.now;
  if (trace_) trace_ << to_line(f) << '\n';
}

}  // namespace hms::gateway
