#include "hms/holon/interfaces.hpp"

#include <algorithm>

#include "hms/error.hpp"
#include "hms/proto/schema.hpp"
#include "hms/proto/xml.hpp"

namespace hms::holon {

namespace {

constexpr TablePort kPorts[] = {
    {"RecGroupMsg", true, true, "", Side::Both},
    {"RecB2Msg", true, true, "", Side::B1},
    {"RecB1Msg", true, true, "", Side::B2},
    {"RecCtrlMsg", true, true, "", Side::B2},
    {"RecMsgHMI", true, true, "", Side::Both},
    {"ID", false, true, "", Side::Both},
    {"InGroupMsg", false, true, "RecGroupMsg", Side::Both},
    {"InB2Msg", false, true, "RecB2Msg", Side::B1},
    {"InB1Msg", false, true, "RecB1Msg", Side::B2},
    {"InCtrlMsg", false, true, "RecCtrlMsg", Side::B2},
    {"InMsgHMI", false, true, "RecMsgHMI", Side::Both},
    {"SendGroupMsg", true, false, "", Side::Both},
    {"SendB2Msg", true, false, "", Side::B1},
    {"SendB1Msg", true, false, "", Side::B2},
    {"SendCtrlMsg", true, false, "", Side::B2},
    {"SendMsgHMI", true, false, "", Side::Both},
    {"ID_Dest", false, false, "SendGroupMsg", Side::Both},
    {"OutGroupMsg", false, false, "SendGroupMsg", Side::Both},
    {"OutB2Msg", false, false, "SendB2Msg", Side::B1},
    {"OutB1Msg", false, false, "SendB1Msg", Side::B2},
    {"OutCtrlMsg", false, false, "SendCtrlMsg", Side::B2},
    {"OutMsgHMI", false, false, "SendMsgHMI", Side::Both},
};

bool on(Side s, bool b1) { return s == Side::Both || s == (b1 ? Side::B1 : Side::B2); }

fb::FBTypeDef component(std::string name, bool b1) {
  fb::FBTypeDef def;
  def.name = std::move(name);
  for (auto const& p : kPorts) {
    if (!on(p.side, b1) || !p.event) continue;
    fb::EventPort ev{std::string(p.name), {}};
    for (auto const& d : kPorts)
      if (!d.event && d.paired == p.name && on(d.side, b1)) ev.with.emplace_back(d.name);
    (p.input ? def.event_inputs : def.event_outputs).push_back(std::move(ev));
  }
  for (auto const& p : kPorts) {
    if (!on(p.side, b1) || p.event) continue;
    (p.input ? def.data_inputs : def.data_outputs).push_back({std::string(p.name)});
  }
  return def;
}

}  // namespace

std::span<TablePort const> component_ports() { return kPorts; }

fb::FBTypeDef b1_interface(std::string name) { return component(std::move(name), true); }
fb::FBTypeDef b2_interface(std::string name) { return component(std::move(name), false); }

std::vector<std::string> check_component_split(fb::FBTypeDef const& b1, fb::FBTypeDef const& b2) {
  std::vector<std::string> bad;
  auto check = [&](fb::FBTypeDef const& t, bool is_b1) {
    for (auto const& p : kPorts) {
      bool want = on(p.side, is_b1);
      bool have = p.event ? (p.input ? t.event_input(p.name) : t.event_output(p.name)) != nullptr
                          : (p.input ? t.data_input(p.name) : t.data_output(p.name)) != nullptr;
      // Wrong direction counts as missing.
      bool wrong_dir = p.event ? (p.input ? t.event_output(p.name) : t.event_input(p.name)) != nullptr
                               : (p.input ? t.data_output(p.name) : t.data_input(p.name)) != nullptr;
      if (want != have || wrong_dir)
        bad.push_back(t.name + "." + std::string(p.name) + (want ? " missing" : " misplaced"));
      if (!want || !have || p.event || p.paired.empty()) continue;
      auto const* ev = p.input ? t.event_input(p.paired) : t.event_output(p.paired);
      if (!ev || std::find(ev->with.begin(), ev->with.end(), p.name) == ev->with.end())
        bad.push_back(t.name + "." + std::string(p.name) + " not carried by " + std::string(p.paired));
      // ... and by no other event.
      auto const& events = p.input ? t.event_inputs : t.event_outputs;
      for (auto const& e : events)
        if (e.name != p.paired && std::find(e.with.begin(), e.with.end(), p.name) != e.with.end())
          bad.push_back(t.name + "." + std::string(p.name) + " also carried by " + e.name);
    }
  };
  check(b1, true);
  check(b2, false);
  return bad;
}

void Component::send_group(fb::BlockContext& ctx, msg::ChannelId const& to, proto::Message const& m) {
  ctx.set_output("ID_Dest", to.to_string());
  ctx.set_output("OutGroupMsg", proto::encode(m));
  ctx.emit("SendGroupMsg");
}

void Component::send_peer(fb::BlockContext& ctx, proto::Message const& m) {
  ctx.set_output(conscious_ ? "OutB2Msg" : "OutB1Msg", proto::encode(m));
  ctx.emit(conscious_ ? "SendB2Msg" : "SendB1Msg");
}

void Component::send_hmi(fb::BlockContext& ctx, proto::Message const& m) {
  ctx.set_output("OutMsgHMI", proto::encode(m));
  ctx.emit("SendMsgHMI");
}

void Component::send_ctrl(fb::BlockContext& ctx, proto::Message const& m) {
  ctx.set_output("OutCtrlMsg", proto::encode(m));
  ctx.emit("SendCtrlMsg");
}

std::optional<proto::Message> Component::incoming(fb::BlockContext& ctx, std::string_view event) {
  static constexpr std::pair<std::string_view, std::string_view> kData[] = {
      {"RecGroupMsg", "InGroupMsg"}, {"RecB2Msg", "InB2Msg"},   {"RecB1Msg", "InB1Msg"},
      {"RecCtrlMsg", "InCtrlMsg"},   {"RecMsgHMI", "InMsgHMI"},
  };
  for (auto const& [ev, data] : kData) {
    if (ev != event) continue;
    try {
      auto m = proto::decode(ctx.text(data));
      proto::validate(m);
      return m;
    } catch (Error const&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace hms::holon
