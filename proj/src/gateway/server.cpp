#include "hms/gateway/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include <deque>
#include <thread>

#include "hms/error.hpp"
#include "hms/gateway/system.hpp"
#include "hms/proto/xml.hpp"

namespace hms::gateway {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::json;

std::pair<std::string, std::uint16_t> parse_listen_address(std::string const& text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos) throw Error(Errc::BindFailure, "expected host:port, got '" + text + "'");
  auto host = text.substr(0, colon);
  int port = -1;
  try {
    std::size_t used = 0;
    port = std::stoi(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) port = -1;
  } catch (std::exception const&) {
  }
  if (port < 0 || port > 65535) throw Error(Errc::BindFailure, "bad port in '" + text + "'");
  return {host.empty() ? "0.0.0.0" : host, static_cast<std::uint16_t>(port)};
}

namespace {

using Response = http::response<http::string_body>;

std::string_view target_of(http::request<http::string_body> const& req) {
  auto t = req.target();
  return {t.data(), t.size()};
}
using Reply = std::function<void(Response)>;

Response json_response(http::status status, json const& body, unsigned version, bool keep_alive) {
  Response res{status, version};
  res.set(http::field::content_type, "application/json");
  res.set(http::field::access_control_allow_origin, "*");
  res.keep_alive(keep_alive);
  res.body() = body.dump();
  res.prepare_payload();
  return res;
}

json error_body(std::string const& code, std::string const& detail) { return {{"error", code}, {"detail", detail}}; }

http::status status_for(Errc code) {
  switch (code) {
    case Errc::UnknownProduct:
    case Errc::UnknownInstance: return http::status::not_found;
    case Errc::NoProvider: return http::status::conflict;
    default: return http::status::bad_request;
  }
}

std::vector<std::string> split_path(std::string_view target) {
  auto q = target.find('?');
  if (q != std::string_view::npos) target = target.substr(0, q);
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < target.size()) {
    auto j = target.find('/', i);
    if (j == std::string_view::npos) j = target.size();
    if (j > i) parts.emplace_back(target.substr(i, j - i));
    i = j + 1;
  }
  return parts;
}

std::uint64_t query_u64(std::string_view target, std::string_view key) {
  auto q = target.find('?');
  if (q == std::string_view::npos) return 0;
  auto query = target.substr(q + 1);
  std::string needle = std::string(key) + "=";
  auto at = query.find(needle);
  if (at == std::string_view::npos) return 0;
  try {
    return std::stoull(std::string(query.substr(at + needle.size())));
  } catch (std::exception const&) {
    return 0;
  }
}

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, System& system) : ws_(std::move(socket)), system_(system) {}
  ~WsSession() {
    if (token_) system_.events().remove_listener(token_);
  }

  void run(http::request<http::string_body> req) {
    since_ = query_u64(target_of(req), "since");
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    std::weak_ptr<WsSession> weak = shared_from_this();
    auto ex = ws_.get_executor();
    token_ = system_.events().add_listener([weak, ex](EventFrame const& f) {
      net::post(ex, [weak, seq = f.seq, line = to_line(f)]() mutable {
        if (auto self = weak.lock()) self->enqueue(seq, std::move(line));
      });
    });
    for (auto const& f : system_.events().since(since_)) enqueue(f.seq, to_line(f));
    ws_.async_read(inbound_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      closed_ = true;
      return;
    }
    inbound_.consume(inbound_.size());  // clients have nothing to say
    ws_.async_read(inbound_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void enqueue(std::uint64_t seq, std::string line) {
    if (closed_ || seq <= last_seq_) return;
    last_seq_ = seq;
    out_.push_back(std::move(line));
    if (!writing_) write_next();
  }

  void write_next() {
    if (out_.empty() || closed_) {
      writing_ = false;
      return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(out_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->out_.pop_front();
      if (ec) {
        self->closed_ = true;
        return;
      }
      self->write_next();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  System& system_;
  beast::flat_buffer inbound_;
  std::deque<std::string> out_;
  std::uint64_t since_ = 0;
  std::uint64_t last_seq_ = 0;
  std::uint64_t token_ = 0;
  bool writing_ = false;
  bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, System& system) : stream_(std::move(socket)), system_(system) {}

  void run() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    auto parts = split_path(target_of(req_));
    if (websocket::is_upgrade(req_)) {
      if (parts == std::vector<std::string>{"api", "events"}) {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), system_)->run(std::move(req_));
      }
      return;
    }
    auto ex = stream_.get_executor();
    handle([self = shared_from_this(), ex](Response res) {
      net::post(ex, [self, res = std::move(res)]() mutable { self->send(std::move(res)); });
    });
  }

  void send(Response res) {
    auto sp = std::make_shared<Response>(std::move(res));
    http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (sp->keep_alive()) self->read();
      else self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
    });
  }

  Response respond(http::status s, json const& body) { return json_response(s, body, req_.version(), req_.keep_alive()); }

  /// Runs `fn` on the executor thread; `ok` builds the reply from its result.
  template <class Fn, class Ok>
  void command(Reply reply, Fn fn, Ok ok) {
    auto version = req_.version();
    bool keep = req_.keep_alive();
    system_.post([fn = std::move(fn), ok = std::move(ok), reply = std::move(reply), version, keep]() mutable {
      try {
        auto [status, body] = ok(fn());
        reply(json_response(status, body, version, keep));
      } catch (Error const& e) {
        reply(json_response(status_for(e.code()), error_body(std::string(to_string(e.code())), e.what()), version, keep));
      }
    });
  }

  void handle(Reply reply) {
    auto parts = split_path(target_of(req_));
    auto method = req_.method();
    auto const& body = req_.body();
    try {
      if (parts.size() < 2 || parts[0] != "api") return reply(respond(http::status::not_found, error_body("NotFound", "")));
      auto const& what = parts[1];

      if (method == http::verb::options) {
        auto res = respond(http::status::no_content, json::object());
        res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
        res.set(http::field::access_control_allow_headers, "Content-Type");
        return reply(std::move(res));
      }

      if (method == http::verb::post && parts.size() == 2 && what == "orders") {
        json j;
        try {
          j = json::parse(body);
        } catch (json::exception const& e) {
          return reply(respond(http::status::bad_request, error_body("MalformedPayload", e.what())));
        }
        if (!j.is_object() || !j.contains("product") || !j["product"].is_string())
          return reply(respond(http::status::bad_request, error_body("MalformedPayload", "expected {\"product\": name}")));
        auto product = j["product"].get<std::string>();
        return command(
            std::move(reply), [this, product] { return system_.submit_order(product); },
            [product](std::string const& id) {
              return std::pair{http::status::accepted, json{{"order_id", id}, {"product", product}}};
            });
      }
      if (method == http::verb::post && parts.size() == 2 && what == "products") {
        auto spec = proto::parse_product(body);
        auto name = spec.name;
        return command(
            std::move(reply), [this, spec = std::move(spec)]() mutable {
              system_.add_product(std::move(spec));
              return 0;
            },
            [name](int) { return std::pair{http::status::created, json{{"product", name}}}; });
      }
      if (method == http::verb::post && parts.size() == 2 && what == "services") {
        auto m = proto::decode(body);
        auto def = proto::service_from_message(m);
        std::optional<msg::ChannelId> provider;
        if (auto addr = m.get("HolonAddr")) provider = msg::ChannelId::parse(*addr);
        auto name = def.serv_id;
        return command(
            std::move(reply), [this, def = std::move(def), provider]() mutable {
              system_.add_service(std::move(def), provider);
              return 0;
            },
            [name](int) { return std::pair{http::status::accepted, json{{"service", name}}}; });
      }

      if (method != http::verb::get) return reply(respond(http::status::method_not_allowed, error_body("MethodNotAllowed", "")));

      if (what == "orders" && parts.size() == 3) {
        auto tree = system_.events().read([&](ReadModel const& m) { return m.order_json(parts[2]); });
        if (!tree) return reply(respond(http::status::not_found, error_body("UnknownOrder", parts[2])));
        return reply(respond(http::status::ok, *tree));
      }
      if (what == "orders" && parts.size() == 2) {
        auto list = system_.events().read([](ReadModel const& m) {
          json out = json::array();
          for (auto const& [id, o] : m.orders())
            if (o.parent.empty()) out.push_back(*m.order_json(id));
          return out;
        });
        return reply(respond(http::status::ok, list));
      }
      if (what == "holons" && parts.size() == 2)
        return reply(respond(http::status::ok, system_.events().read([](ReadModel const& m) { return m.census_json(); })));
      if (what == "holons" && parts.size() == 4 && parts[3] == "gantt") {
        auto [known, rows] = system_.events().read([&](ReadModel const& m) {
          return std::pair{m.holons().count(parts[2]) > 0 || m.slots().count(parts[2]) > 0, m.gantt_json(parts[2])};
        });
        if (!known) return reply(respond(http::status::not_found, error_body("UnknownInstance", parts[2])));
        return reply(respond(http::status::ok, rows));
      }
      if (what == "directory" && parts.size() == 2)
        return reply(respond(http::status::ok, system_.events().read([](ReadModel const& m) { return m.directory_json(); })));
      return reply(respond(http::status::not_found, error_body("NotFound", std::string(target_of(req_)))));
    } catch (Error const& e) {
      return reply(respond(status_for(e.code()), error_body(std::string(to_string(e.code())), e.what())));
    }
  }

  beast::tcp_stream stream_;
  System& system_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

struct Server::Impl {
  System& system;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::thread thread;

  explicit Impl(System& s) : system(s) {}

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec == net::error::operation_aborted) return;
      } else {
        std::make_shared<HttpSession>(std::move(socket), system)->run();
      }
      accept();
    });
  }
};

Server::Server(System& system, std::string const& listen) : impl_(std::make_unique<Impl>(system)) {
  auto [host, port] = parse_listen_address(listen);
  beast::error_code ec;
  auto address = net::ip::make_address(host, ec);
  if (ec) throw Error(Errc::BindFailure, "bad host '" + host + "'");
  tcp::endpoint ep{address, port};
  impl_->acceptor.open(ep.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(ep, ec);
  if (!ec) impl_->acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw Error(Errc::BindFailure, listen + ": " + ec.message());
  impl_->accept();
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

Server::~Server() { stop(); }

std::uint16_t Server::port() const noexcept { return impl_->acceptor.local_endpoint().port(); }

void Server::stop() {
  if (!impl_->thread.joinable()) return;
  net::post(impl_->ioc, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
  });
  impl_->ioc.stop();
  impl_->thread.join();
}

}  // namespace hms::gateway
