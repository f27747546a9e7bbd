#pragma once

#include <cstdint>
#include <memory>
#include <string>

namespace hms::gateway {

class System;

/// "host:port" with port 0 meaning "any free port". Throws BindFailure.
std::pair<std::string, std::uint16_t> parse_listen_address(std::string const& text);

/// HTTP + WebSocket front of a serving System. Reads come from the event
/// log's read model; writes are queued to the executor as commands.
class Server {
 public:
  Server(System& system, std::string const& listen);  // throws BindFailure
  ~Server();
  Server(Server const&) = delete;
  Server& operator=(Server const&) = delete;

  std::uint16_t port() const noexcept;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hms::gateway
