#include <doctest.h>

#include <random>

#include "hms/error.hpp"
#include "hms/sched/plan.hpp"

using namespace hms;
using namespace hms::sched;
using hms::msg::ChannelId;
using proto::ProductKind;
using proto::ProductService;
using proto::ProductSpec;
using proto::ServiceDef;

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

ServiceDef svc(std::string id, Seconds exec) {
  ServiceDef d;
  d.serv_id = std::move(id);
  d.base_exec = exec;
  return d;
}

ScheduleSlot slot(std::int64_t s, std::int64_t e, std::string conv = "c") {
  return {"S", std::move(conv), {}, EpochTime{s}, EpochTime{e}};
}

// Linear scan in one-second steps.
EpochTime brute_force_start(std::vector<ScheduleSlot> const& slots, EpochTime min_start, Seconds d) {
  for (auto t = min_start.seconds;; ++t) {
    bool ok = true;
    for (auto const& s : slots)
      if (s.overlaps(EpochTime{t}, EpochTime{t + d})) ok = false;
    if (ok) return EpochTime{t};
  }
}

ProductSpec simple(std::string name, std::string serv) {
  return {std::move(name), ProductKind::Simple, {{1, std::move(serv), {}}}};
}
ProductSpec composite(std::string name, std::string serv, std::vector<std::string> cmps) {
  return {std::move(name), ProductKind::Composite, {{1, std::move(serv), std::move(cmps)}}};
}

ProductCatalog reference_catalog() {
  ProductCatalog c;
  c["P_20"] = simple("P_20", "S_20");
  c["P_21"] = simple("P_21", "S_21");
  c["P_10"] = composite("P_10", "S_10", {"P_20", "P_21"});
  return c;
}

auto const kCell = ChannelId::parse("225.0.0.1:3002");
auto const kOrder = ChannelId::parse("225.0.0.1:2101");

}  // namespace

TEST_CASE("compute_bid examples") {
  Agenda a;
  auto q = compute_bid(a, svc("S_20", 50), EpochTime{1000}, true, 120);
  CHECK(q.start == EpochTime{1000});
  CHECK(q.exec_time == 50);

  a.insert(slot(1000, 1050));
  q = compute_bid(a, svc("S_20", 50), EpochTime{1000}, true, 120);
  CHECK(q.start == EpochTime{1050});
  CHECK(q.exec_time == 50);

  q = compute_bid(a, svc("S_20", 50), EpochTime{900}, false, 120);
  CHECK(q.exec_time == 170);
  CHECK(q.start == EpochTime{1050});

  // A gap exactly the size of the job is usable, half-open intervals.
  a.insert(slot(1100, 1200, "d"));
  CHECK(compute_bid(a, svc("S", 50), EpochTime{1000}, true, 0).start == EpochTime{1050});
  CHECK(compute_bid(a, svc("S", 51), EpochTime{1000}, true, 0).start == EpochTime{1200});

  Agenda fig8;
  q = compute_bid(fig8, svc("Op_30", 50), EpochTime{1308574904}, true, 120);
  proto::BidRequest req{"15", "Op_30", EpochTime{1308574904}, kOrder};
  proto::BidResponse legal{"15", "Op_30", EpochTime{1308574950}, 50, kCell};
  CHECK(legal.answers(req));
  CHECK(q.start >= req.min_start);
}

TEST_CASE("earliest gap equals the brute-force scan") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    Agenda a;
    int n = rng() % 9;
    for (int i = 0; i < n; ++i) {
      auto s = std::uniform_int_distribution<std::int64_t>(0, 10000)(rng);
      auto len = std::uniform_int_distribution<std::int64_t>(1, 1500)(rng);
      if (a.is_free(EpochTime{s}, EpochTime{s + len})) a.insert(slot(s, s + len, "c" + std::to_string(i)));
    }
    REQUIRE(a.well_formed());
    auto min = EpochTime{std::uniform_int_distribution<std::int64_t>(0, 10000)(rng)};
    auto d = std::uniform_int_distribution<std::int64_t>(1, 800)(rng);
    CHECK(a.earliest_start(min, d) == brute_force_start(a.slots(), min, d));
  }
}

TEST_CASE("commit_bid") {
  Agenda a;
  BidBook book;
  book["15"] = Bid{{"15", "Op_30", EpochTime{1308574950}, 50, kCell}, "Op_30", false};
  auto const& s = commit_bid(a, book, "15");
  CHECK(s.start == EpochTime{1308574950});
  CHECK(s.end == EpochTime{1308575000});
  CHECK(book.empty());
  CHECK(error_of([&] { commit_bid(a, book, "15"); }) == Errc::UnknownBid);
}

TEST_CASE("two awards racing for one window: exactly one conflict in either order") {
  for (int order = 0; order < 2; ++order) {
    ResourceScheduler cell(kCell, {svc("S_20", 50)}, 120);
    proto::BidRequest r1{"A.1", "S_20", EpochTime{100}, ChannelId::parse("225.0.0.1:2101")};
    proto::BidRequest r2{"B.1", "S_20", EpochTime{120}, ChannelId::parse("225.0.0.1:2102")};
    auto b1 = *cell.quote(r1);
    auto b2 = *cell.quote(r2);
    CHECK(b1.start == EpochTime{100});
    CHECK(b2.start == EpochTime{120});  // quotes do not reserve
    proto::AwardOp a1{b1.id, "S_20", b1.start, r1.sender};
    proto::AwardOp a2{b2.id, "S_20", b2.start, r2.sender};
    auto first = order == 0 ? cell.award(a1) : cell.award(a2);
    auto second = order == 0 ? cell.award(a2) : cell.award(a1);
    CHECK(first.accepted);
    CHECK_FALSE(second.accepted);
    CHECK(cell.conflicts() == 1);
    CHECK(cell.agenda().slots().size() == 1);
    CHECK(cell.agenda().well_formed());
  }
  ResourceScheduler cell(kCell, {svc("S_20", 50)}, 120);
  CHECK_FALSE(cell.award({"nope", "S_20", EpochTime{0}, kOrder}).accepted);
  CHECK_FALSE(cell.quote({"x", "S_99", EpochTime{0}, kOrder}).has_value());
}

TEST_CASE("bid selection") {
  auto a = ChannelId::parse("225.0.0.1:3002");
  auto b = ChannelId::parse("225.0.0.1:3003");
  std::vector<proto::BidResponse> bids{{"1", "S", EpochTime{100}, 50, a}, {"1", "S", EpochTime{90}, 50, b}};
  CHECK(select_bid(bids)->finish() == EpochTime{140});
  CHECK(select_bid(bids)->sender == b);
  bids[1].start = EpochTime{100};
  CHECK(select_bid(bids)->sender == a);  // tie goes to the smaller address
  CHECK_FALSE(select_bid({}).has_value());
}

TEST_CASE("negotiation against in-process providers") {
  ResourceScheduler cell(kCell, {svc("S_20", 50), svc("S_21", 60), svc("S_10", 40)}, 120);
  auto s = negotiate_local("OH1.1", "S_20", EpochTime{1000}, {&cell}, kOrder);
  CHECK(s.start == EpochTime{1000});
  CHECK(s.end == EpochTime{1050});
  CHECK(cell.agenda().find(s.conversation) != nullptr);

  // The faster of two cells wins.
  ResourceScheduler slow(ChannelId::parse("225.0.0.1:3003"), {svc("X", 50)}, 120);
  ResourceScheduler fast(ChannelId::parse("225.0.0.1:3004"), {svc("X", 40)}, 120);
  slow.cancel("none");
  auto x = negotiate_local("OH2.1", "X", EpochTime{100}, {&slow, &fast}, kOrder);
  CHECK(x.end == EpochTime{140});
  CHECK(fast.agenda().slots().size() == 1);
  CHECK(slow.agenda().empty());

  CHECK(error_of([&] { negotiate_local("OH3.1", "S_99", EpochTime{0}, {&cell}, kOrder); }) == Errc::NoProvider);
}

TEST_CASE("negotiation state machine: timeouts and conflicts") {
  auto p1 = ChannelId::parse("225.0.0.1:3002");
  auto p2 = ChannelId::parse("225.0.0.1:3003");

  SUBCASE("no answers before the timeout") {
    Negotiation n("OH.1", "S", EpochTime{10}, kOrder);
    auto step = n.begin({p1, p2}, EpochTime{10});
    CHECK(step.send.size() == 2);
    CHECK(step.wake_at == EpochTime{12});
    CHECK(n.on_timeout(EpochTime{11}).send.empty());
    CHECK(n.state() == Negotiation::State::Collecting);
    n.on_timeout(EpochTime{12});
    CHECK(n.state() == Negotiation::State::Failed);
    CHECK(n.error() == Errc::NoBids);
  }

  SUBCASE("closes early once all providers answered, ignores stale and illegal bids") {
    Negotiation n("OH.1", "S", EpochTime{10}, kOrder);
    n.begin({p1}, EpochTime{10});
    CHECK(n.on_bid({"OH.0", "S", EpochTime{10}, 5, p1}, EpochTime{10}).send.empty());
    CHECK(n.on_bid({"OH.1.1", "S", EpochTime{9}, 5, p1}, EpochTime{10}).send.empty());
    auto step = n.on_bid({"OH.1.1", "S", EpochTime{10}, 5, p1}, EpochTime{10});
    REQUIRE(step.send.size() == 1);
    CHECK(step.send[0].message.type_name == "AwardOp");
    CHECK(step.send[0].to == p1);
    CHECK(n.state() == Negotiation::State::Awarding);
    n.on_confirm({"OH.1.1", "S", true}, EpochTime{10});
    CHECK(n.state() == Negotiation::State::Done);
    CHECK(n.awarded()->finish() == EpochTime{15});
  }

  SUBCASE("third conflict fails the award") {
    Negotiation n("OH.1", "S", EpochTime{10}, kOrder);
    n.begin({p1}, EpochTime{10});
    for (int round = 1; round <= 3; ++round) {
      CHECK(n.conversation() == "OH.1." + std::to_string(round));
      n.on_bid({n.conversation(), "S", EpochTime{10}, 5, p1}, EpochTime{10});
      REQUIRE(n.state() == Negotiation::State::Awarding);
      auto step = n.on_confirm({n.conversation(), "S", false}, EpochTime{10});
      if (round < 3) {
        CHECK(step.send.size() == 1);
        CHECK(step.send[0].message.type_name == "GetBidForOp");
      }
    }
    CHECK(n.state() == Negotiation::State::Failed);
    CHECK(n.error() == Errc::AwardFailed);
  }

  SUBCASE("an unconfirmed award is cancelled and counts as a conflict") {
    Negotiation n("OH.1", "S", EpochTime{10}, kOrder);
    n.begin({p1}, EpochTime{10});
    n.on_bid({"OH.1.1", "S", EpochTime{10}, 5, p1}, EpochTime{10});
    auto step = n.on_timeout(EpochTime{12});
    REQUIRE(step.send.size() == 2);
    CHECK(step.send[0].message.type_name == "CancelOp");
    CHECK(step.send[1].message.type_name == "GetBidForOp");
    CHECK(n.conflicts() == 1);
    CHECK(proto::BidRequest::from(step.send[1].message).min_start == EpochTime{12});
  }

  SUBCASE("no providers") {
    Negotiation n("OH.1", "S", EpochTime{10}, kOrder);
    n.begin({}, EpochTime{10});
    CHECK(n.error() == Errc::NoProvider);
  }
}

TEST_CASE("decompose_order") {
  auto catalog = reference_catalog();
  StockTable stock;
  auto p10 = decompose_order(catalog["P_10"], stock, catalog);
  CHECK(p10.size() == 3);
  CHECK(p10.children[0].product == "P_20");
  CHECK(p10.children[1].product == "P_21");
  CHECK(p10.services == std::vector<std::string>{"S_10"});

  auto p20 = decompose_order(catalog["P_20"], stock, catalog);
  CHECK(p20.size() == 1);
  CHECK(p20.children.empty());

  // A{B{D, E}, C}, E on stock.
  catalog["D"] = simple("D", "S_D");
  catalog["E"] = simple("E", "S_E");
  catalog["C"] = simple("C", "S_C");
  catalog["B"] = composite("B", "S_B", {"D", "E"});
  catalog["A"] = composite("A", "S_A", {"B", "C"});
  stock["E"] = 1;
  auto a = decompose_order(catalog["A"], stock, catalog);
  CHECK(a.depth() == 3);
  CHECK(a.size() == 4);
  CHECK(a.children[0].stocked == std::vector<std::string>{"E"});
  CHECK(a.children[0].children.size() == 1);
  CHECK(stock["E"] == 0);

  StockTable stocked{{"P_20", 1}};
  auto partial = decompose_order(catalog["P_10"], stocked, catalog);
  CHECK(partial.size() == 2);

  catalog["L"] = composite("L", "S_L", {"M"});
  catalog["M"] = composite("M", "S_M", {"L"});
  CHECK(error_of([&] { decompose_order(catalog["L"], stock, catalog); }) == Errc::CyclicProduct);
  catalog["Q"] = composite("Q", "S_Q", {"Nope"});
  CHECK(error_of([&] { decompose_order(catalog["Q"], stock, catalog); }) == Errc::UnknownProduct);
}

TEST_CASE("schedule_plan precedence on one cell") {
  auto catalog = reference_catalog();
  StockTable stock;
  ResourceScheduler cell(kCell, {svc("S_20", 50), svc("S_21", 60), svc("S_10", 40)}, 120);
  int rounds = 0;
  NegotiateFn neg = [&](std::string const& serv, EpochTime min) {
    ++rounds;
    return negotiate_local("OH." + std::to_string(rounds), serv, min, {&cell}, kOrder);
  };

  auto p10 = decompose_order(catalog["P_10"], stock, catalog);
  schedule_plan(p10, neg, EpochTime{1000});
  CHECK(rounds == 3);
  CHECK(p10.state == PlanState::Scheduled);
  CHECK(p10.consistent());
  CHECK(precedence_holds(p10));
  auto s10 = p10.awarded[0];
  CHECK(s10.start >= std::max(p10.children[0].awarded[0].end, p10.children[1].awarded[0].end));
  CHECK(cell.agenda().well_formed());

  rounds = 0;
  auto leaf = decompose_order(catalog["P_20"], stock, catalog);
  schedule_plan(leaf, neg, EpochTime{0});
  CHECK(rounds == 1);

  // Three levels, one cell.
  catalog["T"] = composite("T", "S_10", {"P_10", "P_20"});
  auto tree = decompose_order(catalog["T"], stock, catalog);
  CHECK(tree.depth() == 3);
  schedule_plan(tree, neg, EpochTime{500});
  CHECK(precedence_holds(tree));
  CHECK(cell.agenda().well_formed());

  // Failure marks the node and its ancestors.
  catalog["Bad"] = simple("Bad", "S_99");
  catalog["Top"] = composite("Top", "S_10", {"Bad"});
  auto top = decompose_order(catalog["Top"], stock, catalog);
  CHECK(error_of([&] { schedule_plan(top, neg, EpochTime{0}); }) == Errc::NoProvider);
  CHECK(top.state == PlanState::Failed);
  CHECK(top.children[0].state == PlanState::Failed);
}
