#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

#include "hms/error.hpp"
#include "hms/fb/timer.hpp"
#include "hms/gateway/system.hpp"
#include "hms/holon/holons.hpp"
#include "hms/msg/blocks.hpp"
#include "hms/proto/product.hpp"
#include "hms/proto/xml.hpp"

using namespace hms;
using namespace hms::holon;

namespace {

std::string ref(std::string const& rel) { return std::string(HMS_SOURCE_DIR) + "/config/reference/" + rel; }

msg::ChannelId ch(std::string_view s) { return msg::ChannelId::parse(s); }

bool invoked(fb::Resource const& r, std::string_view instance, std::string_view event) {
  return std::any_of(r.trace().begin(), r.trace().end(),
                     [&](fb::Invocation const& i) { return i.instance == instance && i.event == event; });
}

// Bare plant-less setup for assembling holons by hand.
struct Rig {
  World world;
  fb::TypeRegistry types;
  msg::MessagingStats stats;
  msg::Bus bus{msg::make_transport(msg::TransportKind::InProc)};
  fb::Resource res{"R", types};

  Rig() {
    msg::register_messaging_types(types, bus, stats);
    fb::register_timer_types(types, world.timers, [this] { return world.now; });
    register_holon_types(types, world);
  }

  void settle() {
    for (int guard = 0; guard < 100000; ++guard) {
      bool moved = false;
      for (auto const& c : bus.ready()) moved = bus.deliver_one(c) || moved;
      if (res.pending()) {
        res.dispatch_step();
        moved = true;
      }
      if (!moved) return;
    }
    FAIL("rig did not settle");
  }
};

}  // namespace

TEST_CASE("registered cell components follow the component table") {
  gateway::System sys(gateway::load_system_config(ref("system.json")), {});
  auto b1 = sys.types().get("CellB1");
  auto b2 = sys.types().get("CellB2");
  auto problems = check_component_split(*b1, *b2);
  for (auto const& p : problems) MESSAGE(p);
  CHECK(problems.empty());

  // swapping the halves must be caught
  CHECK_FALSE(check_component_split(*b2, *b1).empty());
}

TEST_CASE("directory rows") {
  auto d = Directory::load(ref("directory.jsonl"));
  CHECK(d.lookup("S_20") == std::vector{ch("225.0.0.1:3002")});
  CHECK(d.lookup("S_99").empty());

  auto rows = d.rows().size();
  auto [row, added] = d.register_service("S_20", ch("225.0.0.1:3002"));
  CHECK_FALSE(added);
  CHECK(d.rows().size() == rows);
  auto [fresh, added2] = d.register_service("S_20", ch("225.0.0.1:3003"));
  CHECK(added2);
  CHECK(fresh.id == static_cast<int>(rows) + 1);
  CHECK(d.lookup("S_20") == std::vector{ch("225.0.0.1:3002"), ch("225.0.0.1:3003")});

  CHECK(Directory::parse(d.to_jsonl()).rows() == d.rows());
  CHECK_THROWS_AS(Directory::parse("{\"ID\":1,\"Service\":\"S_1\"}\n"), Error);
  CHECK_THROWS_AS(Directory::parse("not json\n"), Error);
}

TEST_CASE("directory persists new registrations") {
  auto file = std::filesystem::temp_directory_path() / "hms_directory_test.jsonl";
  std::filesystem::remove(file);
  Directory d;
  d.persist_to(file);
  d.register_service("S_30", ch("225.0.0.1:3010"));
  d.register_service("S_30", ch("225.0.0.1:3010"));
  auto back = Directory::load(file);
  CHECK(back.rows() == d.rows());
  CHECK(back.rows().size() == 1);
  std::filesystem::remove(file);
}

TEST_CASE("coordinator answers lookups over the bus") {
  gateway::System sys(gateway::load_system_config(ref("system.json")), {});
  sys.boot();
  auto reply = ch("225.0.0.1:7100");
  std::vector<proto::Message> got;
  sys.bus().subscribe(reply, [&](std::string const& p) { got.push_back(proto::decode(p)); });
  for (auto serv : {"S_20", "S_99"}) {
    proto::Message q("LookupService");
    q.set("ID", std::string("q-") + serv).set("ServID", serv).set("Sender", reply.to_string());
    sys.bus().publish(sys.world().coordinator, proto::encode(q));
  }
  sys.settle();
  REQUIRE(got.size() == 2);
  std::sort(got.begin(), got.end(), [](auto const& a, auto const& b) { return a.at("ServID") < b.at("ServID"); });
  CHECK(got[0].at("ID") == "q-S_20");
  REQUIRE(got[0].children.size() == 1);
  CHECK(got[0].children[0].at("HolonAddr") == "225.0.0.1:3002");
  CHECK(got[1].at("ServID") == "S_99");
  CHECK(got[1].children.empty());

  // registering a second provider is visible to the next lookup
  proto::Message reg("RegisterService");
  reg.set("ServID", "S_20").set("HolonAddr", "225.0.0.1:3009");
  sys.bus().publish(sys.world().coordinator, proto::encode(reg));
  sys.settle();
  CHECK(sys.world().directory.lookup("S_20").size() == 2);
}

TEST_CASE("dispatcher routes by message type") {
  gateway::System sys(gateway::load_system_config(ref("system.json")), {});
  sys.boot();
  auto& cell = sys.device("Assembling_DEV").resource("Cell");
  cell.enable_trace(true);
  auto inbox = ch("225.0.0.1:3002");

  proto::Message bid("GetBidForOp");
  bid.set("ID", "t/1/S_20.1").set("OpID", "S_20").set("MinStartTime", sys.world().now.seconds)
      .set("Sender", "225.0.0.1:7101");
  sys.bus().publish(inbox, proto::encode(bid));
  sys.settle();
  CHECK(invoked(cell, "Cell.B1", "RecGroupMsg"));
  CHECK_FALSE(invoked(cell, "Cell.B2", "RecGroupMsg"));

  cell.clear_trace();
  proto::Message progress("OpProgress");
  progress.set("ID", "t/1/S_20.1").set("OpID", "S_20").set("Percent", 10);
  sys.bus().publish(inbox, proto::encode(progress));
  sys.settle();
  CHECK(invoked(cell, "Cell.B2", "RecGroupMsg"));
  CHECK_FALSE(invoked(cell, "Cell.B1", "RecGroupMsg"));
  CHECK(cell.behavior_errors().empty());
}

TEST_CASE("resource holon without an HMI channel") {
  Rig rig;
  std::ifstream in(ref("services.xml"));
  std::string xml((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto defs = proto::parse_services(xml);
  for (auto const& d : defs) rig.world.services[d.serv_id] = d;
  rig.world.cells["C"].sim = std::make_unique<sim::CellSim>(sim::CellParams{}, defs);
  ResourceHolonSpec spec;
  spec.id = "C1";
  spec.inbox = ch("225.0.0.1:3100");
  spec.b1_params["CELL"] = std::string("C");
  spec.b1_params["SERVICES"] = std::string("S_20");
  assemble_resource_holon(rig.res, rig.bus, rig.world, spec);
  rig.settle();
  CHECK(rig.res.has_instance("C1.B1"));
  CHECK(rig.res.has_instance("C1.B2"));
  CHECK(rig.res.check_integrity());
  CHECK(rig.world.holons.find("C1"));
  CHECK(rig.res.behavior_errors().empty());

  SUBCASE("a second holon on the same inbox is refused and leaves nothing behind") {
    auto before = rig.res.instance_ids();
    auto other = spec;
    other.id = "C2";
    try {
      assemble_resource_holon(rig.res, rig.bus, rig.world, other);
      FAIL("second claim accepted");
    } catch (Error const& e) {
      CHECK(e.code() == Errc::ChannelInUse);
    }
    CHECK(rig.res.instance_ids() == before);
    CHECK_FALSE(rig.world.holons.find("C2"));
  }
}

TEST_CASE("order holons spawned per product") {
  for (auto [product, expected] : {std::pair{"P_10", 3}, std::pair{"P_20", 1}, std::pair{"P_21", 1}}) {
    CAPTURE(product);
    gateway::System sys(gateway::load_system_config(ref("system.json")), {});
    sys.boot();
    std::set<msg::ChannelId> inboxes;
    sys.bus().set_tap([&](msg::Envelope const& e) {
      if (e.payload.rfind("<HolonCreated", 0) != 0) return;
      auto m = proto::decode(e.payload);
      if (m.at("Kind") == "Order") inboxes.insert(ch(m.at("Inbox")));
    });
    sys.submit_order(product);
    sys.settle();
    CHECK(sys.manager()->spawned() == expected);
    CHECK(inboxes.size() == static_cast<std::size_t>(expected));
    CHECK(sys.world().holons.count(HolonKind::Order) == static_cast<std::size_t>(expected));
    for (auto const& [id, node] : sys.manager()->nodes()) CHECK_FALSE(node.removing);
  }
}

TEST_CASE("cycle in the product catalog is rejected without spawning") {
  gateway::System sys(gateway::load_system_config(ref("system.json")), {});
  sys.boot();
  proto::ProductSpec a;
  a.name = "P_A";
  a.kind = proto::ProductKind::Composite;
  a.services.push_back({1, "S_10", {"P_B"}});
  proto::ProductSpec b;
  b.name = "P_B";
  b.kind = proto::ProductKind::Composite;
  b.services.push_back({1, "S_10", {"P_A"}});
  sys.add_product(a);
  sys.add_product(b);
  sys.submit_order("P_A");
  auto report = sys.run();
  CHECK(report.exit_code == 1);
  CHECK(sys.manager()->spawned() == 0);
  CHECK(sys.world().holons.count(HolonKind::Order) == 0);
}

TEST_CASE("device management requests") {
  fb::TypeRegistry types;
  fb::FBTypeDef t;
  t.name = "Relay";
  t.event_inputs = {{"REQ", {}}};
  t.event_outputs = {{"CNF", {}}};
  types.register_type(t);
  fb::Device dev("D", types);
  dev.add_resource("R");

  auto request = [&](std::string id, fb::MgmtCommand cmd) {
    return dev.handle(fb::MgmtRequest{std::move(id), "R", std::move(cmd), std::nullopt});
  };
  auto ok = request("1", fb::CreateInstance{"a", "Relay", {}});
  CHECK(ok.type_name == "Response");
  CHECK(ok.at("ID") == "1");
  CHECK_FALSE(ok.has("Reason"));
  request("2", fb::CreateInstance{"b", "Relay", {}});
  CHECK_FALSE(request("3", fb::CreateConnection{"a.CNF", "b.REQ"}).has("Reason"));

  auto dup = request("4", fb::CreateInstance{"a", "Relay", {}});
  REQUIRE(dup.has("Reason"));
  auto unknown = request("5", fb::CreateInstance{"c", "Nope", {}});
  REQUIRE(unknown.has("Reason"));

  CHECK_FALSE(request("6", fb::DeleteInstance{"b"}).has("Reason"));
  auto& r = dev.resource("R");
  CHECK(r.connections().empty());
  CHECK(r.check_integrity());
  CHECK(dev.requests_handled() == 6);

  // wire form survives a round trip
  fb::MgmtRequest wire{"9", "R", fb::CreateInstance{"x", "Relay", {{"P", std::string("v")}}}, ch("225.0.0.1:7000")};
  auto back = fb::parse_mgmt_request(proto::decode(proto::encode(fb::mgmt_request_message(wire))));
  CHECK(back.id == "9");
  CHECK(back.reply == wire.reply);
  CHECK(std::get<fb::CreateInstance>(back.command).id == "x");
}
