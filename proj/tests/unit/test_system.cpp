#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "hms/error.hpp"
#include "hms/gateway/system.hpp"

using namespace hms;
using namespace hms::gateway;

namespace {

std::string ref(std::string const& rel) { return std::string(HMS_SOURCE_DIR) + "/config/reference/" + rel; }

std::string slurp(std::filesystem::path const& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Shape {
  std::size_t instances = 0;
  std::size_t connections = 0;
};

Shape shape(System const& sys) {
  Shape s;
  for (auto* r : sys.resources()) {
    s.instances += r->instance_ids().size();
    s.connections += r->connections().size();
  }
  return s;
}

bool integral(System const& sys) {
  auto rs = sys.resources();
  return std::all_of(rs.begin(), rs.end(), [](fb::Resource* r) { return r->check_integrity(); });
}

std::size_t count_kind(System& sys, std::string_view kind, std::string_view holon_kind = {}) {
  std::size_t n = 0;
  for (auto const& f : sys.events().since(0))
    if (f.kind == kind && (holon_kind.empty() || f.get("Kind") == holon_kind)) ++n;
  return n;
}

// Agenda of the single cell: no overlaps, and S_10 after both of its inputs.
void check_agenda(System& sys, std::size_t roots) {
  sys.events().read([&](ReadModel const& m) {
    auto it = m.slots().find("Cell");
    REQUIRE(it != m.slots().end());
    std::vector<ReadModel::Slot> slots;
    for (auto const& [id, s] : it->second) slots.push_back(s);
    std::sort(slots.begin(), slots.end(), [](auto const& a, auto const& b) { return a.start < b.start; });
    CHECK(slots.size() == 3 * roots);
    for (std::size_t i = 1; i < slots.size(); ++i) CHECK(slots[i - 1].end <= slots[i].start);
    for (std::size_t r = 1; r <= roots; ++r) {
      auto prefix = "O" + std::to_string(r);
      std::optional<proto::EpochTime> s10, e20, e21;
      for (auto const& s : slots) {
        if (s.order_id != prefix && s.order_id.rfind(prefix + ".", 0) != 0) continue;
        if (s.serv_id == "S_10") s10 = s.start;
        if (s.serv_id == "S_20") e20 = s.end;
        if (s.serv_id == "S_21") e21 = s.end;
        CHECK(s.state == "Done");
      }
      REQUIRE(s10);
      REQUIRE(e20);
      REQUIRE(e21);
      CHECK(*s10 >= std::max(*e20, *e21));
    }
    return 0;
  });
}

}  // namespace

TEST_CASE("reference P_10 scenario completes") {
  System sys(load_system_config(ref("system.json")), {});
  sys.record_deliveries(true);
  sys.boot();
  auto boot_census = sys.events().read([](ReadModel const& m) { return m.census(); });
  CHECK(boot_census == std::vector<std::string>{"Cell", "Coordinator", "Manager"});
  CHECK(sys.world().holons.census() == boot_census);
  auto before = shape(sys);

  sys.schedule(sim::load_scenario(ref("scenarios/p10.txt")));
  auto report = sys.run();
  INFO(report.summary());
  CHECK(report.exit_code == 0);
  CHECK_FALSE(report.starved);
  CHECK(report.failed.empty());

  // one root plus two children spawn, and all of them go away again
  CHECK(count_kind(sys, "HolonCreated", "Order") == 3);
  CHECK(count_kind(sys, "HolonRemoved") == 3);
  check_agenda(sys, 1);

  auto after_census = sys.events().read([](ReadModel const& m) { return m.census(); });
  CHECK(after_census == boot_census);
  CHECK(sys.world().holons.census() == boot_census);
  auto after = shape(sys);
  CHECK(after.instances == before.instances);
  CHECK(after.connections == before.connections);
  CHECK(integral(sys));

  auto declared = sys.declared_channels();
  for (auto const& e : sys.deliveries()) CHECK_MESSAGE(declared.count(e.channel), e.channel.to_string());
}

TEST_CASE("order tree: children report to the root, root reaches Done") {
  System sys(load_system_config(ref("system.json")), {});
  sys.boot();
  sys.schedule(sim::load_scenario(ref("scenarios/p10.txt")));
  sys.run();
  sys.events().read([](ReadModel const& m) {
    auto tree = m.order_json("O1");
    REQUIRE(tree);
    CHECK((*tree)["state"] == "Done");
    CHECK((*tree)["children"].size() == 2);
    CHECK(m.orders().at("O1.1").parent == "O1");
    CHECK(m.orders().at("O1.2").parent == "O1");
    CHECK(m.orders().at("O1.1").state == "Done");
    return 0;
  });
}

TEST_CASE("two overlapping orders over many seeds") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    RunOptions o;
    o.seed = seed;
    System sys(load_system_config(ref("system.json")), o);
    sys.boot();
    auto before = shape(sys);
    sys.schedule(sim::load_scenario(ref("scenarios/p10x2.txt")));
    auto report = sys.run();
    INFO(report.summary());
    CHECK(report.exit_code == 0);
    check_agenda(sys, 2);
    CHECK(sys.world().holons.census() == std::vector<std::string>{"Cell", "Coordinator", "Manager"});
    auto after = shape(sys);
    CHECK(after.instances == before.instances);
    CHECK(after.connections == before.connections);
    CHECK(integral(sys));
  }
}

TEST_CASE("same seed, same trace") {
  auto dir = std::filesystem::temp_directory_path() / "hms_trace_test";
  std::filesystem::create_directories(dir);
  auto run = [&](std::uint64_t seed, std::string const& name) {
    RunOptions o;
    o.seed = seed;
    o.trace = dir / name;
    System sys(load_system_config(ref("system.json")), o);
    sys.boot();
    sys.schedule(sim::load_scenario(ref("scenarios/p10x2.txt")));
    CHECK(sys.run().exit_code == 0);
    return slurp(dir / name);
  };
  auto a = run(5, "a.jsonl");
  auto b = run(5, "b.jsonl");
  CHECK_FALSE(a.empty());
  CHECK(a == b);
  std::filesystem::remove_all(dir);
}

TEST_CASE("replaying the frames rebuilds the same read model") {
  System sys(load_system_config(ref("system.json")), {});
  sys.boot();
  sys.schedule(sim::load_scenario(ref("scenarios/p10x2.txt")));
  sys.run();
  ReadModel replay;
  for (auto const& f : sys.events().since(0)) replay.apply(frame_from_json(nlohmann::json::parse(to_line(f))));
  auto live = sys.events().read([](ReadModel const& m) { return m.snapshot(); });
  CHECK(replay.snapshot() == live);
}

TEST_CASE("order that never gets its boards starves") {
  System sys(load_system_config(ref("system.json")), {});
  sys.boot();
  sys.schedule(sim::load_scenario(ref("scenarios/starved.txt")));
  auto report = sys.run();
  CHECK(report.starved);
  CHECK(report.exit_code == 1);
  CHECK(report.failed == std::vector<std::string>{"O1"});
}

TEST_CASE("unknown product is refused before anything is spawned") {
  System sys(load_system_config(ref("system.json")), {});
  sys.boot();
  CHECK_THROWS_AS(sys.submit_order("P_99"), Error);
  CHECK(sys.submitted().empty());
  CHECK(sys.run().exit_code == 0);
  CHECK(count_kind(sys, "HolonCreated", "Order") == 0);
}

TEST_CASE("commands posted from another thread run on the executor") {
  System sys(load_system_config(ref("system.json")), {});
  sys.boot();
  std::promise<std::string> id;
  auto fut = id.get_future();
  std::thread t([&] { sys.post([&] { id.set_value(sys.submit_order("P_20")); }); });
  t.join();
  CHECK(sys.run_commands());
  CHECK(fut.get() == "O1");
  sys.schedule({{0, sim::ScenarioEvent::Kind::Board}});
  auto report = sys.run();
  INFO(report.summary());
  CHECK(report.exit_code == 0);
  CHECK(count_kind(sys, "HolonCreated", "Order") == 1);
}

TEST_CASE("udp transport runs the reference scenario") {
  RunOptions o;
  o.transport = msg::TransportKind::Udp;
  std::optional<System> sys;
  try {
    sys.emplace(load_system_config(ref("system.json")), o);
    sys->boot();
  } catch (Error const& e) {
    if (e.code() == Errc::TransportUnavailable) {
      MESSAGE("no UDP in this environment: " << e.what());
      return;
    }
    throw;
  }
  sys->schedule(sim::load_scenario(ref("scenarios/p10.txt")));
  auto report = sys->run();
  INFO(report.summary());
  CHECK(report.exit_code == 0);
  check_agenda(*sys, 1);
  CHECK(integral(*sys));
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(load_system_config(ref("missing.json")), Error);
  try {
    parse_system_config("{}", ref(""));
    FAIL("accepted an empty config");
  } catch (Error const& e) {
    CHECK(e.code() == Errc::ConfigError);
  }
  try {
    parse_system_config("{", ref(""));
    FAIL("accepted broken JSON");
  } catch (Error const& e) {
    CHECK(e.code() == Errc::ConfigError);
  }
}
