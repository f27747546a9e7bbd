#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "hms/error.hpp"
#include "hms/fb/resource.hpp"

using namespace hms;
using namespace hms::fb;

namespace {

template <class F>
Errc error_of(F&& f) {
  try {
    f();
  } catch (Error const& e) {
    return e.code();
  }
  FAIL("expected an hms::Error");
  return Errc::ConfigError;
}

// EI/I in, EO/O out, integers. Forwards a decremented value until it hits 0,
// then overwrites O so a late sampler would see garbage.
FBTypeDef relay_type(std::vector<std::pair<std::string, std::int64_t>>* log = nullptr) {
  FBTypeDef t;
  t.name = "Relay";
  t.event_inputs = {{"EI", {"I"}}};
  t.event_outputs = {{"EO", {"O"}}};
  t.data_inputs = {{"I", ValueKind::Integer, {}}};
  t.data_outputs = {{"O", ValueKind::Integer, {}}};
  t.kind = Basic{[log](BlockContext& ctx, std::string_view) {
    auto v = ctx.integer("I");
    if (log) log->emplace_back(ctx.instance_id(), v);
    if (v <= 0) return;
    ctx.set_output("O", v - 1);
    ctx.emit("EO");
    ctx.set_output("O", std::int64_t{-999});
  }};
  return t;
}

FBTypeDef forward_type() {
  FBTypeDef t;
  t.name = "Fwd";
  t.event_inputs = {{"EI", {}}};
  t.event_outputs = {{"EO", {}}};
  t.kind = Basic{[](BlockContext& ctx, std::string_view) { ctx.emit("EO"); }};
  return t;
}

}  // namespace

TEST_CASE("register_type: dispatcher shape, empty interface, duplicates") {
  TypeRegistry reg;
  FBTypeDef d;
  d.name = "Dispatcher";
  d.event_inputs = {{"REQ", {"IN"}}};
  d.event_outputs = {{"B1", {"OUT1"}}, {"B2", {"OUT2"}}};
  d.data_inputs = {{"IN", ValueKind::Text, {}}};
  d.data_outputs = {{"OUT1", ValueKind::Text, {}}, {"OUT2", ValueKind::Text, {}}};
  auto id = reg.register_type(d);
  auto t = reg.get(id);
  CHECK(t->event_inputs.size() == 1);
  CHECK(t->data_inputs.size() == 1);
  CHECK(t->event_outputs.size() == 2);
  CHECK(t->data_outputs.size() == 2);
  CHECK(reg.get("Dispatcher") == t);

  FBTypeDef empty;
  empty.name = "Empty";
  CHECK(reg.register_type(empty) == 1);
  CHECK(error_of([&] { reg.register_type(empty); }) == Errc::DuplicateType);
  CHECK(error_of([&] { reg.get("Nope"); }) == Errc::UnknownType);

  FBTypeDef clash;
  clash.name = "Clash";
  clash.event_inputs = {{"X", {}}};
  clash.data_inputs = {{"X", ValueKind::Text, {}}};
  CHECK(error_of([&] { reg.register_type(clash); }) == Errc::InvalidType);

  FBTypeDef dangling;
  dangling.name = "Dangling";
  dangling.event_inputs = {{"E", {"NOPE"}}};
  CHECK(error_of([&] { reg.register_type(dangling); }) == Errc::InvalidType);
}

TEST_CASE("create instance: defaults, params, errors") {
  TypeRegistry reg;
  FBTypeDef t;
  t.name = "P";
  t.event_inputs = {{"E", {}}};
  t.data_inputs = {{"N", ValueKind::Integer, {}}, {"S", ValueKind::Text, Value{std::string("x")}}};
  reg.register_type(t);
  Resource r("res", reg);
  r.create_instance("a", "P");
  CHECK(std::get<std::int64_t>(r.data_input("a", "N")) == 0);
  CHECK(std::get<std::string>(r.data_input("a", "S")) == "x");
  r.create_instance("b", "P", {{"N", std::string("42")}});
  CHECK(std::get<std::int64_t>(r.data_input("b", "N")) == 42);
  CHECK(error_of([&] { r.create_instance("a", "P"); }) == Errc::DuplicateInstance);
  CHECK(error_of([&] { r.create_instance("c", "Q"); }) == Errc::UnknownType);
  CHECK(error_of([&] { r.create_instance("c", "P", {{"Z", std::int64_t{1}}}); }) == Errc::UnknownPort);
  CHECK(error_of([&] { r.delete_instance("zz"); }) == Errc::UnknownInstance);
  CHECK_FALSE(r.has_instance("c"));
}

TEST_CASE("delete cascades attached connections") {
  TypeRegistry reg;
  reg.register_type(relay_type());
  Resource r("res", reg);
  for (auto id : {"a", "b", "c"}) r.create_instance(id, "Relay");
  r.connect("a.EO", "b.EI");
  r.connect("a.O", "b.I");
  r.connect("b.EO", "c.EI");
  r.connect("c.EO", "a.EI");
  REQUIRE(r.connections().size() == 4);
  r.delete_instance("b");
  CHECK(r.connections().size() == 1);
  for (auto const& c : r.connections()) {
    CHECK(c.source.instance != "b");
    CHECK(c.target.instance != "b");
  }
  CHECK(r.check_integrity());
  CHECK(error_of([&] { r.disconnect("a.EO", "b.EI"); }) == Errc::UnknownInstance);
  CHECK(error_of([&] { r.disconnect("c.EO", "c.EI"); }) == Errc::UnknownConnection);
}

TEST_CASE("connections: kind mismatch and every two-source configuration are rejected") {
  TypeRegistry reg;
  FBTypeDef t;
  t.name = "T";
  t.event_inputs = {{"EI", {"I1", "I2"}}};
  t.event_outputs = {{"EO", {"O"}}};
  t.data_inputs = {{"I1", ValueKind::Integer, {}}, {"I2", ValueKind::Integer, {}}};
  t.data_outputs = {{"O", ValueKind::Integer, {}}};
  reg.register_type(t);

  std::vector<std::string> blocks{"x", "y", "z"};
  std::vector<std::string> sources, targets;
  for (auto const& b : blocks) {
    sources.push_back(b + ".O");
    targets.push_back(b + ".I1");
    targets.push_back(b + ".I2");
  }
  int rejected = 0;
  for (auto const& target : targets) {
    for (auto const& first : sources) {
      for (auto const& second : sources) {
        Resource r("res", reg);
        for (auto const& b : blocks) r.create_instance(b, "T");
        r.connect(first, target);
        CHECK(error_of([&] { r.connect(second, target); }) == Errc::IllegalConnection);
        CHECK(r.connections().size() == 1);
        CHECK(r.check_integrity());
        ++rejected;
      }
    }
  }
  CHECK(rejected == 6 * 3 * 3);

  Resource r("res", reg);
  r.create_instance("x", "T");
  r.create_instance("y", "T");
  CHECK(error_of([&] { r.connect("x.EO", "y.I1"); }) == Errc::IllegalConnection);
  CHECK(error_of([&] { r.connect("x.O", "y.EI"); }) == Errc::IllegalConnection);
  CHECK(error_of([&] { r.connect("x.EI", "y.EI"); }) == Errc::UnknownPort);
  CHECK(error_of([&] { r.connect("x.EO", "q.EI"); }) == Errc::UnknownInstance);
  CHECK(r.connections().empty());
}

TEST_CASE("emit snapshots associated outputs") {
  TypeRegistry reg;
  std::vector<std::pair<std::string, std::int64_t>> log;
  reg.register_type(relay_type(&log));
  Resource r("res", reg);
  r.create_instance("a", "Relay");
  r.create_instance("b", "Relay");
  r.connect("a.EO", "b.EI");
  r.connect("a.O", "b.I");

  r.emit_external("a", "EO", {{"O", std::int64_t{0}}});
  r.set_data_output("a", "O", std::int64_t{77});
  CHECK(r.pending() == 1);
  r.run_until_quiescent();
  REQUIRE(log.size() == 1);
  CHECK(log[0] == std::pair<std::string, std::int64_t>{"b", 0});

  // Zero fan-out is a no-op.
  r.emit("b", "EO");
  CHECK(r.pending() == 0);
  CHECK(error_of([&] { r.emit("b", "NOPE"); }) == Errc::UnknownPort);
}

TEST_CASE("snapshot coherence against immediate-delivery replay on random networks") {
  std::mt19937 rng(1234);
  for (int trial = 0; trial < 300; ++trial) {
    TypeRegistry reg;
    std::vector<std::pair<std::string, std::int64_t>> log;
    reg.register_type(relay_type(&log));
    Resource r("res", reg);

    int n = std::uniform_int_distribution<int>(1, 6)(rng);
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("b" + std::to_string(i));
    for (auto const& id : ids) r.create_instance(id, "Relay");

    // Each block has at most one upstream block feeding both EI and I.
    std::vector<std::vector<int>> downstream(n);
    for (int i = 0; i < n; ++i) {
      int parent = std::uniform_int_distribution<int>(-1, n - 1)(rng);
      if (parent < 0) continue;
      r.connect(ids[parent] + ".EO", ids[i] + ".EI");
      r.connect(ids[parent] + ".O", ids[i] + ".I");
      downstream[parent].push_back(i);
    }

    int src = std::uniform_int_distribution<int>(0, n - 1)(rng);
    std::int64_t seed_value = std::uniform_int_distribution<int>(1, 5)(rng);

    std::vector<std::pair<std::string, std::int64_t>> expected;
    std::function<void(int, std::int64_t)> immediate = [&](int block, std::int64_t v) {
      expected.emplace_back(ids[block], v);
      if (v <= 0) return;
      for (int d : downstream[block]) immediate(d, v - 1);
    };
    for (int d : downstream[src]) immediate(d, seed_value);

    r.emit_external(ids[src], "EO", {{"O", seed_value}});
    r.set_data_output(ids[src], "O", std::int64_t{-1});
    r.run_until_quiescent();

    std::sort(expected.begin(), expected.end());
    std::sort(log.begin(), log.end());
    CHECK(log == expected);
  }
}

TEST_CASE("dispatch_step is FIFO and a chain of four costs four deliveries") {
  TypeRegistry reg;
  reg.register_type(forward_type());
  Resource r("res", reg);
  r.enable_trace(true);
  CHECK(r.dispatch_step() == 0);
  CHECK(r.run_until_quiescent() == 0);

  for (auto id : {"a", "b", "c", "d"}) r.create_instance(id, "Fwd");
  r.connect("a.EO", "b.EI");
  r.connect("a.EO", "c.EI");
  r.emit("a", "EO");
  CHECK(r.dispatch_step() == 1);
  REQUIRE(r.trace().size() == 1);
  CHECK(r.trace()[0] == Invocation{"b", "EI"});
  r.run_until_quiescent();
  r.clear_trace();

  r.disconnect("a.EO", "c.EI");
  r.connect("b.EO", "c.EI");
  r.connect("c.EO", "d.EI");
  r.inject("a", "EI");
  CHECK(r.run_until_quiescent() == 4);
  std::vector<Invocation> want{{"a", "EI"}, {"b", "EI"}, {"c", "EI"}, {"d", "EI"}};
  CHECK(r.trace() == want);
}

TEST_CASE("event cycle exhausts the step budget") {
  TypeRegistry reg;
  reg.register_type(forward_type());
  Resource r("res", reg);
  r.create_instance("a", "Fwd");
  r.create_instance("b", "Fwd");
  r.connect("a.EO", "b.EI");
  r.connect("b.EO", "a.EI");
  r.inject("a", "EI");
  CHECK(error_of([&] { r.run_until_quiescent(100); }) == Errc::StepBudgetExceeded);
}

TEST_CASE("management from inside a behavior is deferred to the step boundary") {
  TypeRegistry reg;
  bool seen_during = false;
  FBTypeDef t;
  t.name = "Suicide";
  t.event_inputs = {{"EI", {}}};
  t.event_outputs = {{"EO", {}}};
  t.kind = Basic{[&](BlockContext& ctx, std::string_view) {
    ctx.emit("EO");
    auto ack = ctx.resource().mgmt(DeleteInstance{ctx.instance_id()});
    seen_during = ack.deferred && ctx.resource().has_instance(ctx.instance_id());
    ctx.resource().mgmt(DeleteInstance{"ghost"});
  }};
  reg.register_type(t);
  reg.register_type(forward_type());
  Resource r("res", reg);
  r.create_instance("s", "Suicide");
  r.create_instance("f", "Fwd");
  r.connect("s.EO", "f.EI");
  r.inject("s", "EI");
  r.inject("s", "EI");  // becomes stale once s is deleted
  CHECK(r.dispatch_step() == 1);
  CHECK(seen_during);
  CHECK_FALSE(r.has_instance("s"));
  CHECK(r.connections().empty());
  REQUIRE(r.deferred_errors().size() == 1);
  CHECK(r.deferred_errors()[0].find("UnknownInstance") == 0);
  r.run_until_quiescent();
  CHECK(r.dropped_deliveries() == 1);
  CHECK(r.check_integrity());
}

TEST_CASE("composite types flatten into member instances") {
  TypeRegistry reg;
  std::vector<std::pair<std::string, std::int64_t>> log;
  reg.register_type(relay_type(&log));

  FBTypeDef pair;
  pair.name = "Pair";
  pair.event_inputs = {{"IN", {"V"}}};
  pair.event_outputs = {{"OUT", {"R"}}};
  pair.data_inputs = {{"V", ValueKind::Integer, {}}};
  pair.data_outputs = {{"R", ValueKind::Integer, {}}};
  Composite c;
  c.members = {{"first", "Relay", {}}, {"second", "Relay", {}}};
  c.links = {{"first.EO", "second.EI"}, {"first.O", "second.I"}};
  c.inputs = {{"IN", {"first.EI"}}, {"V", {"first.I"}}};
  c.outputs = {{"OUT", "second.EO"}, {"R", "second.O"}};
  pair.kind = c;
  reg.register_type(pair);

  Resource r("res", reg);
  r.create_instance("p", "Pair", {{"V", std::int64_t{3}}});
  r.create_instance("tail", "Relay");
  CHECK(r.has_instance("p"));
  CHECK(r.composite_ids() == std::vector<std::string>{"p"});
  CHECK(r.instance_ids() == std::vector<std::string>{"p.first", "p.second", "tail"});
  CHECK(std::get<std::int64_t>(r.data_input("p", "V")) == 3);

  r.connect("p.OUT", "tail.EI");
  r.connect("p.R", "tail.I");
  r.inject("p.first", "EI");
  r.run_until_quiescent();
  std::vector<std::pair<std::string, std::int64_t>> want{{"p.first", 3}, {"p.second", 2}, {"tail", 1}};
  CHECK(log == want);

  r.delete_instance("p");
  CHECK(r.instance_ids() == std::vector<std::string>{"tail"});
  CHECK(r.connections().empty());
  CHECK(r.composite_ids().empty());
}

TEST_CASE("service interface behaviors see create and delete") {
  struct Counter : Behavior {
    int* created;
    int* deleted;
    int* events;
    Counter(int* c, int* d, int* e) : created(c), deleted(d), events(e) {}
    void on_create(BlockContext&) override { ++*created; }
    void on_delete(BlockContext&) override { ++*deleted; }
    void on_event(BlockContext&, std::string_view) override { ++*events; }
  };
  int created = 0, deleted = 0, events = 0;
  TypeRegistry reg;
  FBTypeDef t;
  t.name = "Svc";
  t.event_inputs = {{"EI", {}}};
  t.kind = ServiceInterface{[&](BlockContext&) { return std::make_unique<Counter>(&created, &deleted, &events); }};
  reg.register_type(t);
  {
    Resource r("res", reg);
    r.create_instance("s1", "Svc");
    r.create_instance("s2", "Svc");
    r.inject("s1", "EI");
    r.run_until_quiescent();
    r.delete_instance("s1");
    CHECK(created == 2);
    CHECK(deleted == 1);
    CHECK(events == 1);
  }
  CHECK(deleted == 2);
}

TEST_CASE("invocation traces are identical across repeated runs") {
  auto run = [] {
    TypeRegistry reg;
    reg.register_type(relay_type());
    Resource r("res", reg);
    r.enable_trace(true);
    for (int i = 0; i < 5; ++i) r.create_instance("b" + std::to_string(i), "Relay");
    for (int i = 0; i < 5; ++i) {
      r.connect("b" + std::to_string(i) + ".EO", "b" + std::to_string((i + 1) % 5) + ".EI");
      r.connect("b" + std::to_string(i) + ".O", "b" + std::to_string((i + 1) % 5) + ".I");
    }
    r.connect("b0.EO", "b2.EI");
    r.emit_external("b0", "EO", {{"O", std::int64_t{6}}});
    r.run_until_quiescent();
    return r.trace();
  };
  auto first = run();
  CHECK(first.size() > 5);
  for (int i = 0; i < 4; ++i) CHECK(run() == first);
}
