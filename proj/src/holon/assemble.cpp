#include "hms/error.hpp"
#include "hms/holon/holons.hpp"

namespace hms::holon {

std::unique_ptr<fb::Behavior> make_controller_interface(World& world);
std::unique_ptr<fb::Behavior> make_directory_component(World& world);

namespace {

template <class B>
fb::ServiceInterface factory_of(World& world) {
  return fb::ServiceInterface{[&world](fb::BlockContext&) -> std::unique_ptr<fb::Behavior> {
    return std::make_unique<B>(world);
  }};
}

void add_init(fb::FBTypeDef& def) {
  def.event_inputs.push_back({"INIT", {}});
  def.data_inputs.push_back({"INBOX"});
}

void add_timer_ports(fb::FBTypeDef& def) {
  def.event_outputs.push_back({"StartTimer", {"DT"}});
  def.event_outputs.push_back({"StopTimer", {}});
  def.event_inputs.push_back({"Wakeup", {}});
  def.data_outputs.push_back({"DT", fb::ValueKind::Integer});
}

fb::FBTypeDef order_holon_type() {
  fb::FBTypeDef def;
  def.name = "OrderHolon";
  def.data_inputs = {{"ID"}, {"INBOX"}, {"HMI"}};
  fb::Composite c;
  c.members = {{"SUB", "SUBSCRIBE", {}}, {"DISP", "OrderDispatcher", {}}, {"B1", "OrderB1", {}},
               {"PUB", "PUBLISH", {}},   {"HMI", "PUBLISH", {}},         {"TMR", "E_DELAY", {}}};
  c.links = {
      {"SUB.IND", "DISP.REQ"},           {"SUB.RD_1", "DISP.IN"},         {"DISP.B1", "B1.RecGroupMsg"},
      {"DISP.OUT1", "B1.InGroupMsg"},    {"B1.SendGroupMsg", "PUB.REQ"},  {"B1.OutGroupMsg", "PUB.SD_1"},
      {"B1.ID_Dest", "PUB.ID"},          {"B1.SendMsgHMI", "HMI.REQ"},    {"B1.OutMsgHMI", "HMI.SD_1"},
      {"B1.StartTimer", "TMR.START"},    {"B1.DT", "TMR.DT"},             {"B1.StopTimer", "TMR.STOP"},
      {"TMR.EO", "B1.Wakeup"},
  };
  c.inputs = {{"ID", {"B1.ID"}}, {"INBOX", {"SUB.ID", "B1.INBOX"}}, {"HMI", {"HMI.ID"}}};
  def.kind = std::move(c);
  return def;
}

void add_holon(World& world, std::string const& id, HolonKind kind, msg::ChannelId const& inbox) {
  world.holons.add(HolonInfo{id, kind, inbox, {}, {}, {}});
}

}  // namespace

void register_holon_types(fb::TypeRegistry& types, World& world) {
  auto cell_b1 = b1_interface("CellB1");
  add_init(cell_b1);
  cell_b1.data_inputs.push_back({"SERVICES"});
  cell_b1.data_inputs.push_back({"CELL"});
  cell_b1.kind = factory_of<CellB1>(world);
  types.register_type(std::move(cell_b1));

  auto cell_b2 = b2_interface("CellB2");
  cell_b2.kind = factory_of<CellB2>(world);
  types.register_type(std::move(cell_b2));

  fb::FBTypeDef hii;
  hii.name = "HII";
  hii.event_inputs = {{"REQ", {"SD"}}};
  hii.event_outputs = {{"IND", {"RD"}}};
  hii.data_inputs = {{"SD"}, {"CELL"}};
  hii.data_outputs = {{"RD"}};
  hii.kind = fb::ServiceInterface{[&world](fb::BlockContext&) { return make_controller_interface(world); }};
  types.register_type(std::move(hii));

  auto order_b1 = b1_interface("OrderB1");
  order_b1.data_inputs.push_back({"INBOX"});
  add_timer_ports(order_b1);
  order_b1.kind = factory_of<OrderB1>(world);
  types.register_type(std::move(order_b1));

  auto manager = b1_interface("ManagerB1");
  add_init(manager);
  manager.kind = factory_of<ManagerB1>(world);
  types.register_type(std::move(manager));

  auto directory = b1_interface("DirectoryB1");
  add_init(directory);
  directory.kind = fb::ServiceInterface{[&world](fb::BlockContext&) { return make_directory_component(world); }};
  types.register_type(std::move(directory));

  types.register_type(order_holon_type());
}

void assemble_resource_holon(fb::Resource& r, msg::Bus& bus, World& world, ResourceHolonSpec const& spec) {
  auto const& id = spec.id;
  auto n = [&](std::string_view role) { return id + "." + std::string(role); };
  auto link = [&](std::string_view from, std::string_view to) { r.connect(id + "." + std::string(from), id + "." + std::string(to)); };

  bus.claim(spec.inbox, id);
  std::vector<std::string> created;
  auto create = [&](std::string_view role, std::string const& type, fb::ParamMap params) {
    r.create_instance(n(role), type, params);
    created.push_back(n(role));
  };
  try {
    fb::ParamMap b1 = spec.b1_params;
    b1["ID"] = id;
    b1["INBOX"] = spec.inbox.to_string();
    fb::ParamMap b2 = spec.b2_params;
    b2["ID"] = id;

    create("B1", spec.b1_type, b1);
    create("B2", spec.b2_type, b2);
    create("DISP", "Dispatcher", {});
    create("PUB1", "PUBLISH", {});
    create("PUB2", "PUBLISH", {});
    create("SUB", "SUBSCRIBE", {{"ID", spec.inbox.to_string()}});

    link("SUB.IND", "DISP.REQ");
    link("SUB.RD_1", "DISP.IN");
    link("DISP.B1", "B1.RecGroupMsg");
    link("DISP.OUT1", "B1.InGroupMsg");
    link("DISP.B2", "B2.RecGroupMsg");
    link("DISP.OUT2", "B2.InGroupMsg");
    for (auto [b, pub] : {std::pair{"B1", "PUB1"}, std::pair{"B2", "PUB2"}}) {
      auto bs = std::string(b) + ".", ps = std::string(pub) + ".";
      link(bs + "SendGroupMsg", ps + "REQ");
      link(bs + "OutGroupMsg", ps + "SD_1");
      link(bs + "ID_Dest", ps + "ID");
    }
    link("B1.SendB2Msg", "B2.RecB1Msg");
    link("B1.OutB2Msg", "B2.InB1Msg");
    link("B2.SendB1Msg", "B1.RecB2Msg");
    link("B2.OutB1Msg", "B1.InB2Msg");

    if (spec.ctrl_out) {
      create("CTRL_PUB", "PUBLISH", {{"ID", spec.ctrl_out->to_string()}});
      link("B2.SendCtrlMsg", "CTRL_PUB.REQ");
      link("B2.OutCtrlMsg", "CTRL_PUB.SD_1");
    }
    if (spec.ctrl_in) {
      create("CTRL_SUB", "SUBSCRIBE", {{"ID", spec.ctrl_in->to_string()}});
      link("CTRL_SUB.IND", "B2.RecCtrlMsg");
      link("CTRL_SUB.RD_1", "B2.InCtrlMsg");
    }
    if (spec.hmi) {
      for (auto [b, pub] : {std::pair{"B1", "HMI1"}, std::pair{"B2", "HMI2"}}) {
        create(pub, "PUBLISH", {{"ID", spec.hmi->to_string()}});
        link(std::string(b) + ".SendMsgHMI", std::string(pub) + ".REQ");
        link(std::string(b) + ".OutMsgHMI", std::string(pub) + ".SD_1");
      }
    }
    if (spec.hmi_in) {
      create("HMI_SUB", "SUBSCRIBE", {{"ID", spec.hmi_in->to_string()}});
      for (auto b : {"B1", "B2"}) {
        link("HMI_SUB.IND", std::string(b) + ".RecMsgHMI");
        link("HMI_SUB.RD_1", std::string(b) + ".InMsgHMI");
      }
    }
  } catch (...) {
    for (auto it = created.rbegin(); it != created.rend(); ++it)
      if (r.has_instance(*it)) r.delete_instance(*it);
    bus.unclaim(spec.inbox);
    throw;
  }
  add_holon(world, id, HolonKind::Resource, spec.inbox);
  if (r.type_of(n("B1"))->event_input("INIT")) r.inject(n("B1"), "INIT");
}

void assemble_service_holon(fb::Resource& r, msg::Bus& bus, World& world, ServiceHolonSpec const& spec) {
  auto const& id = spec.id;
  auto n = [&](std::string_view role) { return id + "." + std::string(role); };
  auto link = [&](std::string_view from, std::string_view to) { r.connect(n(from), n(to)); };

  bus.claim(spec.inbox, id);
  std::vector<std::string> created;
  auto create = [&](std::string_view role, std::string const& type, fb::ParamMap params) {
    r.create_instance(n(role), type, params);
    created.push_back(n(role));
  };
  try {
    fb::ParamMap b1 = spec.params;
    b1["ID"] = id;
    b1["INBOX"] = spec.inbox.to_string();
    create("B1", spec.b1_type, b1);
    create("DISP", "OrderDispatcher", {});
    create("PUB", "PUBLISH", {});
    create("SUB", "SUBSCRIBE", {{"ID", spec.inbox.to_string()}});
    link("SUB.IND", "DISP.REQ");
    link("SUB.RD_1", "DISP.IN");
    link("DISP.B1", "B1.RecGroupMsg");
    link("DISP.OUT1", "B1.InGroupMsg");
    link("B1.SendGroupMsg", "PUB.REQ");
    link("B1.OutGroupMsg", "PUB.SD_1");
    link("B1.ID_Dest", "PUB.ID");
    if (spec.hmi) {
      create("HMI", "PUBLISH", {{"ID", spec.hmi->to_string()}});
      link("B1.SendMsgHMI", "HMI.REQ");
      link("B1.OutMsgHMI", "HMI.SD_1");
    }
  } catch (...) {
    for (auto it = created.rbegin(); it != created.rend(); ++it)
      if (r.has_instance(*it)) r.delete_instance(*it);
    bus.unclaim(spec.inbox);
    throw;
  }
  add_holon(world, id, spec.kind, spec.inbox);
  if (r.type_of(n("B1"))->event_input("INIT")) r.inject(n("B1"), "INIT");
}

}  // namespace hms::holon
