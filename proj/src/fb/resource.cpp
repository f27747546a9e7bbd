#include "hms/fb/resource.hpp"

#include <algorithm>
#include <stdexcept>

#include "hms/error.hpp"

namespace hms::fb {

// ---- BlockContext ----------------------------------------------------------

Value const& BlockContext::input(std::string_view port) const {
  return resource_->data_input(instance_, port);
}

std::string const& BlockContext::text(std::string_view port) const {
  auto const& v = input(port);
  if (auto const* s = std::get_if<std::string>(&v)) return *s;
  throw Error(Errc::UnknownPort, instance_ + "." + std::string(port) + " is not text");
}

std::int64_t BlockContext::integer(std::string_view port) const {
  auto const& v = input(port);
  if (auto const* i = std::get_if<std::int64_t>(&v)) return *i;
  throw Error(Errc::UnknownPort, instance_ + "." + std::string(port) + " is not an integer");
}

void BlockContext::set_output(std::string_view port, Value v) {
  resource_->set_data_output(instance_, port, std::move(v));
}

void BlockContext::emit(std::string_view event_output) { resource_->emit(instance_, event_output); }

// ---- Resource --------------------------------------------------------------

namespace {

Value coerce(DataPort const& port, Value const& v, std::string const& where) {
  if (kind_of(v) == port.kind) return v;
  if (auto const* s = std::get_if<std::string>(&v)) return parse_value(port.kind, *s);
  throw Error(Errc::SchemaViolation, where + " expects " + std::string(to_string(port.kind)));
}

}  // namespace

Resource::Resource(std::string name, TypeRegistry const& types) : name_(std::move(name)), types_(types) {}

Resource::~Resource() {
  // Give service interfaces the chance to release external bindings.
  dispatching_ = false;
  for (auto& [id, inst] : instances_) {
    if (inst.behavior) {
      BlockContext ctx(*this, id);
      try {
        inst.behavior->on_delete(ctx);
      } catch (...) {
      }
    }
  }
}

Resource::Instance& Resource::instance(std::string_view id) {
  auto it = instances_.find(id);
  if (it == instances_.end()) throw Error(Errc::UnknownInstance, name_ + "/" + std::string(id));
  return it->second;
}

Resource::Instance const& Resource::instance(std::string_view id) const {
  auto it = instances_.find(id);
  if (it == instances_.end()) throw Error(Errc::UnknownInstance, name_ + "/" + std::string(id));
  return it->second;
}

MgmtAck Resource::mgmt(MgmtCommand const& command) {
  if (dispatching_) {
    deferred_.push_back(command);
    return {true};
  }
  apply(command);
  return {false};
}

void Resource::create_instance(std::string const& id, std::string_view type, ParamMap const& params) {
  mgmt(CreateInstance{id, std::string(type), params});
}

void Resource::delete_instance(std::string const& id) { mgmt(DeleteInstance{id}); }

void Resource::connect(std::string_view source, std::string_view target) {
  mgmt(CreateConnection{std::string(source), std::string(target)});
}

void Resource::disconnect(std::string_view source, std::string_view target) {
  mgmt(DeleteConnection{std::string(source), std::string(target)});
}

void Resource::apply(MgmtCommand const& command) {
  struct Visitor {
    Resource& self;
    void operator()(CreateInstance const& c) const {
      if (c.id.empty()) throw Error(Errc::UnknownInstance, "empty instance id");
      if (self.has_instance(c.id)) throw Error(Errc::DuplicateInstance, self.name_ + "/" + c.id);
      auto type = self.types_.get(c.type);
      if (type->is_composite()) self.create_composite(c.id, type, c.params);
      else self.create_concrete(c.id, type, c.params);
    }
    void operator()(DeleteInstance const& c) const {
      if (auto it = self.composites_.find(c.id); it != self.composites_.end()) {
        auto members = it->second.members;
        for (auto m = members.rbegin(); m != members.rend(); ++m)
          if (self.has_instance(*m)) (*this)(DeleteInstance{*m});
        self.composites_.erase(c.id);
        return;
      }
      if (!self.instances_.count(c.id)) throw Error(Errc::UnknownInstance, self.name_ + "/" + c.id);
      self.delete_concrete(c.id);
    }
    void operator()(CreateConnection const& c) const {
      self.add_connections(self.resolve_connection(c.source, c.target));
    }
    void operator()(DeleteConnection const& c) const {
      auto edges = self.resolve_connection(c.source, c.target);
      for (auto const& e : edges)
        if (std::find(self.connections_.begin(), self.connections_.end(), e) == self.connections_.end())
          throw Error(Errc::UnknownConnection, e.source.to_string() + " -> " + e.target.to_string());
      std::erase_if(self.connections_, [&](Connection const& x) {
        return std::find(edges.begin(), edges.end(), x) != edges.end();
      });
    }
  };
  std::visit(Visitor{*this}, command);
}

void Resource::create_concrete(std::string const& id, std::shared_ptr<FBTypeDef const> type, ParamMap const& params) {
  Instance inst;
  inst.serial = next_serial_++;
  inst.type = type;
  for (auto const& p : type->data_inputs) inst.inputs.emplace(p.name, p.initial.value_or(default_value(p.kind)));
  for (auto const& p : type->data_outputs) inst.outputs.emplace(p.name, p.initial.value_or(default_value(p.kind)));
  for (auto const& [name, value] : params) {
    auto const* port = type->data_input(name);
    if (!port) throw Error(Errc::UnknownPort, id + "." + name);
    inst.inputs[name] = coerce(*port, value, id + "." + name);
  }
  auto [it, inserted] = instances_.emplace(id, std::move(inst));
  (void)inserted;
  if (auto const* si = std::get_if<ServiceInterface>(&type->kind); si && si->factory) {
    BlockContext ctx(*this, id);
    try {
      it->second.behavior = si->factory(ctx);
      if (it->second.behavior) it->second.behavior->on_create(ctx);
    } catch (...) {
      instances_.erase(id);
      throw;
    }
  }
}

void Resource::create_composite(std::string const& id, std::shared_ptr<FBTypeDef const> type, ParamMap const& params) {
  auto const& comp = std::get<Composite>(type->kind);
  for (auto const& [name, value] : params)
    if (!type->data_input(name)) throw Error(Errc::UnknownPort, id + "." + name);

  composites_.emplace(id, CompositeRecord{type, {}});
  try {
    for (auto const& member : comp.members) {
      ParamMap member_params = member.params;
      for (auto const& in : comp.inputs) {
        auto pv = params.find(in.port);
        if (pv == params.end()) continue;
        for (auto const& target : in.targets) {
          auto [m, port] = split_endpoint(target);
          if (m == member.id) member_params[port] = pv->second;
        }
      }
      auto full = id + "." + member.id;
      apply(CreateInstance{full, member.type, member_params});
      composites_.at(id).members.push_back(full);
    }
    for (auto const& link : comp.links) apply(CreateConnection{id + "." + link.source, id + "." + link.target});
  } catch (...) {
    apply(DeleteInstance{id});
    throw;
  }
}

void Resource::delete_concrete(std::string const& id) {
  auto& inst = instances_.at(id);
  if (inst.behavior) {
    BlockContext ctx(*this, id);
    inst.behavior->on_delete(ctx);
  }
  std::erase_if(connections_,
                [&](Connection const& c) { return c.source.instance == id || c.target.instance == id; });
  instances_.erase(id);
  for (auto& [cid, rec] : composites_) std::erase(rec.members, id);
}

Endpoint Resource::resolve_source(std::string_view inst, std::string_view port, ConnectionKind& kind) const {
  if (auto it = composites_.find(inst); it != composites_.end()) {
    auto const& type = *it->second.type;
    if (!type.event_output(port) && !type.data_output(port))
      throw Error(Errc::UnknownPort, std::string(inst) + "." + std::string(port));
    for (auto const& out : std::get<Composite>(type.kind).outputs) {
      if (out.port != port) continue;
      auto [member, mport] = split_endpoint(out.source);
      return resolve_source(std::string(inst) + "." + member, mport, kind);
    }
    throw Error(Errc::IllegalConnection, std::string(inst) + "." + std::string(port) + " is not mapped");
  }
  auto const& type = *instance(inst).type;
  if (type.event_output(port)) kind = ConnectionKind::Event;
  else if (type.data_output(port)) kind = ConnectionKind::Data;
  else throw Error(Errc::UnknownPort, std::string(inst) + "." + std::string(port));
  return Endpoint{std::string(inst), std::string(port)};
}

std::vector<Endpoint> Resource::resolve_targets(std::string_view inst, std::string_view port,
                                                ConnectionKind& kind) const {
  if (auto it = composites_.find(inst); it != composites_.end()) {
    auto const& type = *it->second.type;
    if (type.event_input(port)) kind = ConnectionKind::Event;
    else if (type.data_input(port)) kind = ConnectionKind::Data;
    else throw Error(Errc::UnknownPort, std::string(inst) + "." + std::string(port));
    std::vector<Endpoint> out;
    for (auto const& in : std::get<Composite>(type.kind).inputs) {
      if (in.port != port) continue;
      for (auto const& t : in.targets) {
        auto [member, mport] = split_endpoint(t);
        ConnectionKind inner{};
        auto more = resolve_targets(std::string(inst) + "." + member, mport, inner);
        out.insert(out.end(), more.begin(), more.end());
      }
    }
    return out;
  }
  auto const& type = *instance(inst).type;
  if (type.event_input(port)) kind = ConnectionKind::Event;
  else if (type.data_input(port)) kind = ConnectionKind::Data;
  else throw Error(Errc::UnknownPort, std::string(inst) + "." + std::string(port));
  return {Endpoint{std::string(inst), std::string(port)}};
}

std::vector<Connection> Resource::resolve_connection(std::string_view source, std::string_view target) const {
  auto [src_inst, src_port] = split_endpoint(source);
  auto [dst_inst, dst_port] = split_endpoint(target);
  ConnectionKind src_kind{}, dst_kind{};
  auto src = resolve_source(src_inst, src_port, src_kind);
  auto dsts = resolve_targets(dst_inst, dst_port, dst_kind);
  if (src_kind != dst_kind)
    throw Error(Errc::IllegalConnection, std::string(source) + " -> " + std::string(target) + ": kind mismatch");
  std::vector<Connection> edges;
  for (auto& d : dsts) edges.push_back(Connection{src_kind, src, std::move(d)});
  return edges;
}

void Resource::add_connections(std::vector<Connection> const& edges) {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    auto const& e = edges[i];
    auto clash = [&](Connection const& c) {
      if (c == e) return true;
      return e.kind == ConnectionKind::Data && c.kind == ConnectionKind::Data && c.target == e.target;
    };
    if (std::any_of(connections_.begin(), connections_.end(), clash) ||
        std::any_of(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(i), clash))
      throw Error(Errc::IllegalConnection,
                  e.source.to_string() + " -> " + e.target.to_string() + ": target already connected");
  }
  connections_.insert(connections_.end(), edges.begin(), edges.end());
}

void Resource::emit(std::string_view inst_id, std::string_view event_output) {
  if (composites_.count(inst_id)) {
    ConnectionKind kind{};
    auto src = resolve_source(inst_id, event_output, kind);
    if (kind != ConnectionKind::Event) throw Error(Errc::UnknownPort, src.to_string() + " is not an event output");
    emit(src.instance, src.port);
    return;
  }
  auto& inst = instance(inst_id);
  auto const* eo = inst.type->event_output(event_output);
  if (!eo) throw Error(Errc::UnknownPort, std::string(inst_id) + "." + std::string(event_output));

  for (auto const& c : connections_) {
    if (c.kind != ConnectionKind::Event || c.source.instance != inst_id || c.source.port != event_output) continue;
    auto target = instances_.find(c.target.instance);
    if (target == instances_.end()) continue;
    Delivery d{c.target.instance, target->second.serial, c.target.port, {}};
    for (auto const& with : eo->with) {
      for (auto const& dc : connections_) {
        if (dc.kind == ConnectionKind::Data && dc.source.instance == inst_id && dc.source.port == with &&
            dc.target.instance == c.target.instance)
          d.samples.emplace_back(dc.target.port, inst.outputs.at(with));
      }
    }
    queue_.push_back(std::move(d));
  }
}

void Resource::emit_external(std::string_view inst, std::string_view event_output,
                             std::vector<std::pair<std::string, Value>> const& outputs) {
  for (auto const& [port, value] : outputs) set_data_output(inst, port, value);
  emit(inst, event_output);
}

void Resource::inject(std::string_view inst_id, std::string_view event_input,
                      std::vector<std::pair<std::string, Value>> const& inputs) {
  auto& inst = instance(inst_id);
  if (!inst.type->event_input(event_input))
    throw Error(Errc::UnknownPort, std::string(inst_id) + "." + std::string(event_input));
  for (auto const& [port, v] : inputs)
    if (!inst.type->data_input(port)) throw Error(Errc::UnknownPort, std::string(inst_id) + "." + port);
  queue_.push_back(Delivery{std::string(inst_id), inst.serial, std::string(event_input), inputs});
}

std::size_t Resource::dispatch_step() {
  if (queue_.empty()) return 0;
  Delivery d = std::move(queue_.front());
  queue_.pop_front();

  auto it = instances_.find(d.target);
  if (it == instances_.end() || it->second.serial != d.serial) {
    ++dropped_;
    return 1;
  }
  auto& inst = it->second;
  for (auto& [port, value] : d.samples) {
    auto const* dp = inst.type->data_input(port);
    inst.inputs[port] = dp ? coerce(*dp, value, d.target + "." + port) : value;
  }
  if (tracing_) trace_.push_back({d.target, d.event_input});

  struct Guard {
    bool& flag;
    ~Guard() { flag = false; }
  };
  {
    dispatching_ = true;
    Guard guard{dispatching_};
    BlockContext ctx(*this, d.target);
    try {
      if (auto const* basic = std::get_if<Basic>(&inst.type->kind)) {
        if (basic->callback) basic->callback(ctx, d.event_input);
      } else if (inst.behavior) {
        inst.behavior->on_event(ctx, d.event_input);
      }
    } catch (std::exception const& e) {
      behavior_errors_.push_back(d.target + "." + d.event_input + ": " + e.what());
    }
  }

  auto pending = std::move(deferred_);
  deferred_.clear();
  for (auto const& cmd : pending) {
    try {
      apply(cmd);
    } catch (Error const& e) {
      deferred_errors_.push_back(e.what());
    }
  }
  return 1;
}

std::size_t Resource::run_until_quiescent(std::size_t max_steps) {
  if (max_steps == 0) throw std::invalid_argument("max_steps must be positive");
  std::size_t steps = 0;
  while (!queue_.empty() && steps < max_steps) steps += dispatch_step();
  if (!queue_.empty())
    throw Error(Errc::StepBudgetExceeded, name_ + " still has " + std::to_string(queue_.size()) +
                                              " pending deliveries after " + std::to_string(steps) + " steps");
  return steps;
}

bool Resource::has_instance(std::string_view id) const noexcept {
  return instances_.count(id) > 0 || composites_.count(id) > 0;
}

std::vector<std::string> Resource::instance_ids() const {
  std::vector<std::string> ids;
  for (auto const& [id, inst] : instances_) ids.push_back(id);
  return ids;
}

std::vector<std::string> Resource::composite_ids() const {
  std::vector<std::string> ids;
  for (auto const& [id, rec] : composites_) ids.push_back(id);
  return ids;
}

std::shared_ptr<FBTypeDef const> Resource::type_of(std::string_view id) const {
  if (auto it = composites_.find(id); it != composites_.end()) return it->second.type;
  return instance(id).type;
}

Value const& Resource::data_input(std::string_view inst_id, std::string_view port) const {
  if (auto it = composites_.find(inst_id); it != composites_.end()) {
    ConnectionKind kind{};
    auto targets = resolve_targets(inst_id, port, kind);
    if (kind != ConnectionKind::Data || targets.empty())
      throw Error(Errc::UnknownPort, std::string(inst_id) + "." + std::string(port));
    return data_input(targets.front().instance, targets.front().port);
  }
  auto const& inst = instance(inst_id);
  auto it = inst.inputs.find(port);
  if (it == inst.inputs.end()) throw Error(Errc::UnknownPort, std::string(inst_id) + "." + std::string(port));
  return it->second;
}

Value const& Resource::data_output(std::string_view inst_id, std::string_view port) const {
  if (composites_.count(inst_id)) {
    ConnectionKind kind{};
    auto src = resolve_source(inst_id, port, kind);
    return data_output(src.instance, src.port);
  }
  auto const& inst = instance(inst_id);
  auto it = inst.outputs.find(port);
  if (it == inst.outputs.end()) throw Error(Errc::UnknownPort, std::string(inst_id) + "." + std::string(port));
  return it->second;
}

void Resource::set_data_output(std::string_view inst_id, std::string_view port, Value v) {
  auto& inst = instance(inst_id);
  auto const* dp = inst.type->data_output(port);
  if (!dp) throw Error(Errc::UnknownPort, std::string(inst_id) + "." + std::string(port));
  inst.outputs[std::string(port)] = coerce(*dp, v, std::string(inst_id) + "." + std::string(port));
}

Behavior* Resource::behavior(std::string_view inst_id) const {
  auto it = instances_.find(inst_id);
  return it == instances_.end() ? nullptr : it->second.behavior.get();
}

bool Resource::check_integrity() const {
  for (std::size_t i = 0; i < connections_.size(); ++i) {
    auto const& c = connections_[i];
    auto s = instances_.find(c.source.instance);
    auto t = instances_.find(c.target.instance);
    if (s == instances_.end() || t == instances_.end()) return false;
    if (c.kind == ConnectionKind::Event) {
      if (!s->second.type->event_output(c.source.port) || !t->second.type->event_input(c.target.port)) return false;
    } else {
      if (!s->second.type->data_output(c.source.port) || !t->second.type->data_input(c.target.port)) return false;
      for (std::size_t j = i + 1; j < connections_.size(); ++j)
        if (connections_[j].kind == ConnectionKind::Data && connections_[j].target == c.target) return false;
    }
  }
  return true;
}

}  // namespace hms::fb
