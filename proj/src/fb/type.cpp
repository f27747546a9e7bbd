#include "hms/fb/type.hpp"

#include <algorithm>
#include <set>

#include "hms/error.hpp"

namespace hms::fb {

namespace {

template <class Port>
Port const* find_port(std::vector<Port> const& ports, std::string_view name) noexcept {
  auto it = std::find_if(ports.begin(), ports.end(), [&](Port const& p) { return p.name == name; });
  return it == ports.end() ? nullptr : &*it;
}

[[noreturn]] void invalid(FBTypeDef const& def, std::string const& why) {
  throw Error(Errc::InvalidType, def.name + ": " + why);
}

}  // namespace

EventPort const* FBTypeDef::event_input(std::string_view n) const noexcept { return find_port(event_inputs, n); }
EventPort const* FBTypeDef::event_output(std::string_view n) const noexcept { return find_port(event_outputs, n); }
DataPort const* FBTypeDef::data_input(std::string_view n) const noexcept { return find_port(data_inputs, n); }
DataPort const* FBTypeDef::data_output(std::string_view n) const noexcept { return find_port(data_outputs, n); }

std::pair<std::string, std::string> split_endpoint(std::string_view endpoint) {
  auto dot = endpoint.rfind('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == endpoint.size())
    throw Error(Errc::UnknownPort, "malformed endpoint '" + std::string(endpoint) + "'");
  return {std::string(endpoint.substr(0, dot)), std::string(endpoint.substr(dot + 1))};
}

TypeId TypeRegistry::register_type(FBTypeDef def) {
  if (def.name.empty()) throw Error(Errc::InvalidType, "type name is empty");
  if (by_name_.count(def.name)) throw Error(Errc::DuplicateType, def.name);

  std::set<std::string, std::less<>> names;
  auto claim = [&](std::string const& n) {
    if (n.empty()) invalid(def, "empty port name");
    if (!names.insert(n).second) invalid(def, "duplicate port '" + n + "'");
  };
  for (auto const& p : def.event_inputs) claim(p.name);
  for (auto const& p : def.event_outputs) claim(p.name);
  for (auto const& p : def.data_inputs) claim(p.name);
  for (auto const& p : def.data_outputs) claim(p.name);

  for (auto const& p : def.data_inputs)
    if (p.initial && kind_of(*p.initial) != p.kind) invalid(def, "initial value of '" + p.name + "' has wrong kind");
  for (auto const& e : def.event_inputs)
    for (auto const& w : e.with)
      if (!def.data_input(w)) invalid(def, "event input '" + e.name + "' associates unknown data input '" + w + "'");
  for (auto const& e : def.event_outputs)
    for (auto const& w : e.with)
      if (!def.data_output(w)) invalid(def, "event output '" + e.name + "' associates unknown data output '" + w + "'");

  if (auto const* comp = std::get_if<Composite>(&def.kind)) {
    std::map<std::string, std::shared_ptr<FBTypeDef const>, std::less<>> members;
    for (auto const& m : comp->members) {
      auto t = find(m.type);
      if (!t) invalid(def, "member '" + m.id + "' has unknown type '" + m.type + "'");
      if (m.id.empty() || m.id.find('.') != std::string::npos) invalid(def, "bad member id '" + m.id + "'");
      if (!members.emplace(m.id, t).second) invalid(def, "duplicate member '" + m.id + "'");
    }
    auto member_port = [&](std::string const& ep, bool input) {
      auto [member, port] = split_endpoint(ep);
      auto it = members.find(member);
      if (it == members.end()) invalid(def, "unknown member in '" + ep + "'");
      auto const& t = *it->second;
      bool ok = input ? (t.event_input(port) || t.data_input(port)) : (t.event_output(port) || t.data_output(port));
      if (!ok) invalid(def, "unknown member port '" + ep + "'");
    };
    for (auto const& l : comp->links) {
      member_port(l.source, false);
      member_port(l.target, true);
    }
    for (auto const& in : comp->inputs) {
      if (!def.event_input(in.port) && !def.data_input(in.port)) invalid(def, "mapping of undeclared input " + in.port);
      for (auto const& t : in.targets) member_port(t, true);
    }
    for (auto const& out : comp->outputs) {
      if (!def.event_output(out.port) && !def.data_output(out.port))
        invalid(def, "mapping of undeclared output " + out.port);
      member_port(out.source, false);
    }
  }

  TypeId id = types_.size();
  by_name_.emplace(def.name, id);
  types_.push_back(std::make_shared<FBTypeDef const>(std::move(def)));
  return id;
}

std::shared_ptr<FBTypeDef const> TypeRegistry::find(std::string_view name) const noexcept {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : types_[it->second];
}

std::shared_ptr<FBTypeDef const> TypeRegistry::get(std::string_view name) const {
  if (auto t = find(name)) return t;
  throw Error(Errc::UnknownType, std::string(name));
}

std::shared_ptr<FBTypeDef const> TypeRegistry::get(TypeId id) const {
  if (id >= types_.size()) throw Error(Errc::UnknownType, "#" + std::to_string(id));
  return types_[id];
}

std::optional<TypeId> TypeRegistry::id_of(std::string_view name) const noexcept {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

}  // namespace hms::fb
