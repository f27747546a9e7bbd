#include <doctest.h>
#include <httplib.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <thread>

#include "hms/error.hpp"
#include "hms/gateway/server.hpp"
#include "hms/gateway/system.hpp"

using namespace hms;
using namespace hms::gateway;
using nlohmann::json;

namespace {

std::string ref(std::string const& rel) { return std::string(HMS_SOURCE_DIR) + "/config/reference/" + rel; }

// A serving system with boards for two P_10 orders already scheduled.
struct Live {
  System system{load_system_config(ref("system.json")), {}};
  std::unique_ptr<Server> server;
  std::thread executor;
  std::unique_ptr<httplib::Client> http;

  Live() {
    system.boot();
    using K = sim::ScenarioEvent::Kind;
    system.schedule({{0, K::Board}, {60, K::Board}, {120, K::Board}, {180, K::Board}});
    server = std::make_unique<Server>(system, "127.0.0.1:0");
    executor = std::thread([this] { system.serve(); });
    http = std::make_unique<httplib::Client>("127.0.0.1", server->port());
    http->set_read_timeout(5);
  }
  ~Live() {
    system.stop();
    executor.join();
    server->stop();
  }

  json get(std::string const& path, int expect = 200) {
    auto r = http->Get(path);
    REQUIRE(r);
    CHECK_MESSAGE(r->status == expect, path << " -> " << r->status << " " << r->body);
    return json::parse(r->body);
  }

  // Polls until `pred` holds on GET `path` or 5 s pass.
  template <class Pred>
  json wait_for(std::string const& path, Pred pred) {
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    for (;;) {
      auto r = http->Get(path);
      if (r && r->status == 200) {
        auto j = json::parse(r->body);
        if (pred(j)) return j;
        if (std::chrono::steady_clock::now() > deadline) return j;
      } else if (std::chrono::steady_clock::now() > deadline) {
        return json();
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
};

}  // namespace

TEST_CASE("listen address parsing") {
  CHECK(parse_listen_address("127.0.0.1:8080") == std::pair<std::string, std::uint16_t>{"127.0.0.1", 8080});
  CHECK(parse_listen_address("0.0.0.0:0").second == 0);
  CHECK_THROWS_AS(parse_listen_address("nohost"), Error);
  CHECK_THROWS_AS(parse_listen_address("h:99999"), Error);
}

TEST_CASE("port already taken") {
  System sys(load_system_config(ref("system.json")), {});
  Server a(sys, "127.0.0.1:0");
  try {
    Server b(sys, "127.0.0.1:" + std::to_string(a.port()));
    FAIL("second bind accepted");
  } catch (Error const& e) {
    CHECK(e.code() == Errc::BindFailure);
  }
  a.stop();
}

TEST_CASE("http api drives an order to completion") {
  Live live;

  auto census = live.get("/api/holons");
  REQUIRE(census.is_array());
  CHECK(census.size() == 3);

  auto dir = live.get("/api/directory");
  REQUIRE(dir.is_array());
  bool s20 = false;
  for (auto const& row : dir) s20 = s20 || (row["Service"] == "S_20" && row["HolonAddr"] == "225.0.0.1:3002");
  CHECK(s20);

  auto bad = live.http->Post("/api/orders", R"({"product":"P_99"})", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 404);
  auto malformed = live.http->Post("/api/orders", "{", "application/json");
  REQUIRE(malformed);
  CHECK(malformed->status == 400);

  auto ok = live.http->Post("/api/orders", R"({"product":"P_10"})", "application/json");
  REQUIRE(ok);
  CHECK(ok->status == 202);
  auto id = json::parse(ok->body)["order_id"].get<std::string>();
  CHECK(id == "O1");

  auto tree = live.wait_for("/api/orders/O1", [](json const& j) { return j.value("state", "") == "Done"; });
  CHECK(tree["state"] == "Done");
  CHECK(tree["children"].size() == 2);

  auto roots = live.get("/api/orders");
  REQUIRE(roots.is_array());
  CHECK(roots.size() == 1);

  auto gantt = live.get("/api/holons/Cell/gantt");
  REQUIRE(gantt.size() == 3);
  CHECK(gantt[2]["serv_id"] == "S_10");
  CHECK(gantt[2]["start"].get<std::int64_t>() >= gantt[1]["end"].get<std::int64_t>());

  live.get("/api/holons/Nope/gantt", 404);
  live.get("/api/orders/O77", 404);
  live.get("/api/nothing", 404);

  // the order tree collapses back to the boot census
  auto after = live.wait_for("/api/holons", [](json const& j) { return j.size() == 3; });
  CHECK(after.size() == 3);
}

TEST_CASE("catalog additions over http") {
  Live live;
  auto p = live.http->Post("/api/products",
                           R"(<Product Name="P_30" Type="Simple"><Service Index="1" ServID="S_20"/></Product>)",
                           "application/xml");
  REQUIRE(p);
  CHECK(p->status == 201);
  auto o = live.http->Post("/api/orders", R"({"product":"P_30"})", "application/json");
  REQUIRE(o);
  CHECK(o->status == 202);

  auto bad = live.http->Post("/api/products", "<Product", "application/xml");
  REQUIRE(bad);
  CHECK(bad->status == 400);
}

TEST_CASE("websocket streams backlog then live frames in seq order") {
  Live live;
  namespace beast = boost::beast;
  namespace websocket = beast::websocket;
  boost::asio::io_context io;
  boost::asio::ip::tcp::resolver resolver(io);
  websocket::stream<boost::asio::ip::tcp::socket> ws(io);
  boost::asio::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(live.server->port())));
  ws.handshake("127.0.0.1", "/api/events?since=0");

  std::vector<EventFrame> frames;
  auto read_one = [&] {
    beast::flat_buffer buf;
    ws.read(buf);
    frames.push_back(frame_from_json(json::parse(beast::buffers_to_string(buf.data()))));
  };
  // boot frames arrive without any prompting
  while (frames.size() < 6) read_one();
  CHECK(frames.front().seq == 1);

  auto ok = live.http->Post("/api/orders", R"({"product":"P_20"})", "application/json");
  REQUIRE(ok);
  CHECK(ok->status == 202);
  bool done = false;
  while (!done) {
    read_one();
    auto const& f = frames.back();
    done = f.kind == "OrderProgress" && f.get("OrderID") == "O1" && f.get("State") == "Done";
  }
  for (std::size_t i = 1; i < frames.size(); ++i) CHECK(frames[i].seq == frames[i - 1].seq + 1);

  // a late subscriber resuming from a seq sees only what follows it
  websocket::stream<boost::asio::ip::tcp::socket> late(io);
  boost::asio::connect(late.next_layer(), resolver.resolve("127.0.0.1", std::to_string(live.server->port())));
  late.handshake("127.0.0.1", "/api/events?since=" + std::to_string(frames[3].seq));
  beast::flat_buffer buf;
  late.read(buf);
  CHECK(frame_from_json(json::parse(beast::buffers_to_string(buf.data()))).seq == frames[4].seq);

  ws.close(websocket::close_code::normal);
  late.close(websocket::close_code::normal);
}
