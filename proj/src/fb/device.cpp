#include "hms/fb/device.hpp"

#include "hms/error.hpp"
#include "hms/msg/transport.hpp"
#include "hms/proto/schema.hpp"
#include "hms/proto/xml.hpp"

namespace hms::fb {

MgmtRequest parse_mgmt_request(proto::Message const& m) {
  if (m.type_name != "Request") throw Error(Errc::SchemaViolation, "expected Request, got " + m.type_name);
  proto::validate(m);
  MgmtRequest r;
  r.id = m.at("ID");
  r.resource = m.get("Resource").value_or("");
  if (m.has("Reply")) r.reply = proto::channel_attr(m, "Reply");
  if (m.children.size() != 1) throw Error(Errc::SchemaViolation, "Request needs exactly one FB or Connection");
  auto const& action = m.at("Action");
  auto const& subject = m.children.front();
  bool create = action == "CREATE";
  if (!create && action != "DELETE") throw Error(Errc::SchemaViolation, "unknown Action " + action);

  if (subject.type_name == "FB") {
    if (!create) {
      r.command = DeleteInstance{subject.at("Name")};
      return r;
    }
    CreateInstance c{subject.at("Name"), subject.at("Type"), {}};
    for (auto const& p : subject.children) {
      if (p.type_name != "Param") throw Error(Errc::SchemaViolation, "unexpected " + p.type_name + " in FB");
      c.params.insert_or_assign(p.at("Name"), Value{p.at("Value")});
    }
    r.command = std::move(c);
  } else if (subject.type_name == "Connection") {
    if (create) r.command = CreateConnection{subject.at("Source"), subject.at("Destination")};
    else r.command = DeleteConnection{subject.at("Source"), subject.at("Destination")};
  } else {
    throw Error(Errc::SchemaViolation, "unknown management subject " + subject.type_name);
  }
  return r;
}

proto::Message mgmt_request_message(MgmtRequest const& r) {
  proto::Message m("Request");
  m.set("ID", r.id);
  std::visit(
      [&](auto const& c) {
        using T = std::decay_t<decltype(c)>;
        bool create = std::is_same_v<T, CreateInstance> || std::is_same_v<T, CreateConnection>;
        m.set("Action", create ? "CREATE" : "DELETE");
        if (!r.resource.empty()) m.set("Resource", r.resource);
        if (r.reply) m.set("Reply", r.reply->to_string());
        if constexpr (std::is_same_v<T, CreateInstance>) {
          proto::Message fbm("FB");
          fbm.set("Name", c.id).set("Type", c.type);
          for (auto const& [k, v] : c.params) fbm.add(proto::Message("Param").set("Name", k).set("Value", format_value(v)));
          m.add(std::move(fbm));
        } else if constexpr (std::is_same_v<T, DeleteInstance>) {
          m.add(proto::Message("FB").set("Name", c.id));
        } else {
          m.add(proto::Message("Connection").set("Source", c.source).set("Destination", c.target));
        }
      },
      r.command);
  return m;
}

Device::Device(std::string name, TypeRegistry const& types) : name_(std::move(name)), types_(types) {}

Device::~Device() {
  if (bus_ && token_) bus_->unsubscribe(token_);
}

Resource& Device::add_resource(std::string const& name) {
  if (resources_.count(name)) throw Error(Errc::ConfigError, "duplicate resource " + name + " in " + name_);
  auto& slot = resources_[name];
  slot = std::make_unique<Resource>(name, types_);
  return *slot;
}

Resource* Device::find_resource(std::string_view name) const noexcept {
  auto it = resources_.find(name);
  return it == resources_.end() ? nullptr : it->second.get();
}

Resource& Device::resource(std::string_view name) const {
  if (auto* r = find_resource(name)) return *r;
  throw Error(Errc::ConfigError, "no resource " + std::string(name) + " in " + name_);
}

std::vector<Resource*> Device::resources() const {
  std::vector<Resource*> out;
  for (auto const& [n, r] : resources_) out.push_back(r.get());
  return out;
}

proto::Message Device::handle(MgmtRequest const& request) {
  ++handled_;
  proto::Message rsp("Response");
  rsp.set("ID", request.id);
  try {
    Resource* res = request.resource.empty() && resources_.size() == 1 ? resources_.begin()->second.get()
                                                                      : find_resource(request.resource);
    if (!res) throw Error(Errc::UnknownInstance, "resource '" + request.resource + "'");
    // Deliveries already queued by a block about to be deleted still go out.
    if (std::holds_alternative<DeleteInstance>(request.command) && !res->dispatching()) res->run_until_quiescent();
    res->mgmt(request.command);
  } catch (Error const& e) {
    rsp.set("Reason", e.what());
  }
  return rsp;
}

void Device::bind_management(msg::Bus& bus, msg::ChannelId channel) {
  if (bus_ && token_) bus_->unsubscribe(token_);
  bus_ = &bus;
  endpoint_ = channel;
  token_ = bus.subscribe(channel, [this](std::string const& payload) {
    MgmtRequest req;
    try {
      req = parse_mgmt_request(proto::decode(payload));
    } catch (Error const&) {
      ++handled_;
      return;  // unanswerable: no ID or Reply to use
    }
    auto rsp = handle(req);
    if (!req.reply) return;
    try {
      bus_->publish(*req.reply, proto::encode(rsp));
    } catch (Error const&) {
    }
  });
}

}  // namespace hms::fb
