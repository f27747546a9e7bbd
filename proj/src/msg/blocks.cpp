#include "hms/msg/blocks.hpp"

#include "hms/error.hpp"
#include "hms/fb/resource.hpp"
#include "hms/proto/xml.hpp"

namespace hms::msg {

std::string_view to_string(Target t) noexcept { return t == Target::B1 ? "B1" : "B2"; }

Target RoutingTable::operator[](std::string_view type_name) const {
  auto it = map_.find(type_name);
  return it == map_.end() ? Target::B1 : it->second;
}

RoutingTable RoutingTable::resource_holon() {
  return {{"OpStarted", Target::B2}, {"OpProgress", Target::B2}, {"OpDone", Target::B2},
          {"Overrun", Target::B2},   {"OpFailed", Target::B2},   {"CommandResult", Target::B2}};
}

Routed dispatch(std::string const& payload, RoutingTable const& table) {
  std::string name;
  try {
    name = proto::decode(payload).type_name;
  } catch (Error const& e) {
    throw Error(Errc::MalformedPayload, e.what());
  }
  return {table[name], std::move(name)};
}

namespace {

class Subscriber final : public fb::Behavior {
 public:
  Subscriber(Bus& bus, MessagingStats& stats) : bus_(bus), stats_(stats) {}

  void on_create(fb::BlockContext& ctx) override {
    auto channel = ChannelId::parse(ctx.text("ID"));
    auto* res = &ctx.resource();
    auto id = ctx.instance_id();
    token_ = bus_.subscribe(channel, [res, id, stats = &stats_](std::string const& payload) {
      ++stats->received;
      res->emit_external(id, "IND", {{"RD_1", payload}});
    });
  }
  void on_delete(fb::BlockContext&) override {
    if (token_) bus_.unsubscribe(token_);
    token_ = 0;
  }
  void on_event(fb::BlockContext&, std::string_view) override {}

 private:
  Bus& bus_;
  MessagingStats& stats_;
  std::uint64_t token_ = 0;
};

class Publisher final : public fb::Behavior {
 public:
  Publisher(Bus& bus, MessagingStats& stats) : bus_(bus), stats_(stats) {}

  void on_event(fb::BlockContext& ctx, std::string_view event) override {
    if (event != "REQ") return;
    try {
      bus_.publish(ChannelId::parse(ctx.text("ID")), ctx.text("SD_1"));
    } catch (Error const&) {
      ++stats_.publish_failed;
      return;
    }
    ctx.emit("CNF");
  }

 private:
  Bus& bus_;
  MessagingStats& stats_;
};

}  // namespace

fb::FBTypeDef dispatcher_type(std::string name, RoutingTable table, MessagingStats& stats) {
  fb::FBTypeDef def;
  def.name = std::move(name);
  def.event_inputs = {{"REQ", {"IN"}}};
  def.event_outputs = {{"B1", {"OUT1"}}, {"B2", {"OUT2"}}};
  def.data_inputs = {{"IN"}};
  def.data_outputs = {{"OUT1"}, {"OUT2"}};
  def.kind = fb::Basic{[table = std::move(table), &stats](fb::BlockContext& ctx, std::string_view) {
    auto const& payload = ctx.text("IN");
    Routed r;
    try {
      r = dispatch(payload, table);
    } catch (Error const&) {
      ++stats.malformed;
      return;
    }
    bool b1 = r.target == Target::B1;
    ctx.set_output(b1 ? "OUT1" : "OUT2", payload);
    ctx.emit(b1 ? "B1" : "B2");
  }};
  return def;
}

void register_messaging_types(fb::TypeRegistry& types, Bus& bus, MessagingStats& stats) {
  fb::FBTypeDef sub;
  sub.name = "SUBSCRIBE";
  sub.event_outputs = {{"IND", {"RD_1"}}};
  sub.data_inputs = {{"ID"}};
  sub.data_outputs = {{"RD_1"}};
  sub.kind = fb::ServiceInterface{[&bus, &stats](fb::BlockContext&) { return std::make_unique<Subscriber>(bus, stats); }};
  types.register_type(std::move(sub));

  fb::FBTypeDef pub;
  pub.name = "PUBLISH";
  pub.event_inputs = {{"REQ", {"ID", "SD_1"}}};
  pub.event_outputs = {{"CNF", {}}};
  pub.data_inputs = {{"ID"}, {"SD_1"}};
  pub.kind = fb::ServiceInterface{[&bus, &stats](fb::BlockContext&) { return std::make_unique<Publisher>(bus, stats); }};
  types.register_type(std::move(pub));

  types.register_type(dispatcher_type("Dispatcher", RoutingTable::resource_holon(), stats));
  types.register_type(dispatcher_type("OrderDispatcher", RoutingTable::order_holon(), stats));
}

}  // namespace hms::msg
