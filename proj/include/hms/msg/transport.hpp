#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "hms/msg/channel.hpp"

namespace hms::msg {

struct Envelope {
  ChannelId channel;
  std::string payload;  // UTF-8 XML, never empty
};

enum class TransportKind { InProc, Udp };
std::string_view to_string(TransportKind k) noexcept;
TransportKind transport_from(std::string_view name);  // throws ConfigError

/// Moves envelopes between publishers and the bus. Implementations only
/// carry bytes; fan-out to subscribers and per-channel ordering live in Bus.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportKind kind() const noexcept = 0;
  virtual void open(ChannelId const& channel) = 0;  // throws TransportUnavailable
  virtual void close(ChannelId const& channel) = 0;
  virtual void send(Envelope envelope) = 0;
  /// Hands every envelope received so far to `sink`, in arrival order.
  virtual void drain(std::function<void(Envelope&&)> const& sink) = 0;
  /// Sent but not yet drained; best-effort transports may never get these.
  virtual std::size_t in_flight() const noexcept = 0;
  /// Blocks until something arrives or `timeout` passes.
  virtual void wait(std::chrono::milliseconds timeout) { (void)timeout; }
};

/// Lossless, per-channel FIFO.
class InProcTransport final : public Transport {
 public:
  TransportKind kind() const noexcept override { return TransportKind::InProc; }
  void open(ChannelId const&) override {}
  void close(ChannelId const&) override {}
  void send(Envelope envelope) override { wire_.push_back(std::move(envelope)); }
  void drain(std::function<void(Envelope&&)> const& sink) override;
  std::size_t in_flight() const noexcept override { return wire_.size(); }

 private:
  std::deque<Envelope> wire_;
};

/// One UDP socket per channel, datagram = payload. Multicast channels join
/// their group; when the host refuses multicast the channel falls back to
/// 127.0.0.1 on the same port.
class UdpTransport final : public Transport {
 public:
  UdpTransport();
  ~UdpTransport() override;
  UdpTransport(UdpTransport const&) = delete;
  UdpTransport& operator=(UdpTransport const&) = delete;

  TransportKind kind() const noexcept override { return TransportKind::Udp; }
  void open(ChannelId const& channel) override;
  void close(ChannelId const& channel) override;
  void send(Envelope envelope) override;
  void drain(std::function<void(Envelope&&)> const& sink) override;
  std::size_t in_flight() const noexcept override;
  void wait(std::chrono::milliseconds timeout) override;

  bool loopback(ChannelId const& channel) const;

 private:
  struct Socket {
    int fd = -1;
    bool loopback = false;
    std::int64_t in_flight = 0;  // sent and not yet received; dropped on close
  };
  void receive_loop();

  mutable std::mutex mu_;
  std::map<ChannelId, Socket> sockets_;
  std::deque<Envelope> received_;
  std::vector<int> graveyard_;
  std::condition_variable arrived_;
  int send_fd_ = -1;
  std::int64_t in_flight_ = 0;  // sum over sockets_
  std::atomic<bool> stop_{false};
  std::thread receiver_;
};

std::unique_ptr<Transport> make_transport(TransportKind kind);

/// Channel fan-out on top of a transport. Envelopes wait in per-channel FIFO
/// queues until the executor delivers them, one at a time, to every
/// subscriber registered at delivery time.
class Bus {
 public:
  using Callback = std::function<void(std::string const& payload)>;
  using Tap = std::function<void(Envelope const&)>;

  explicit Bus(std::unique_ptr<Transport> transport);

  TransportKind kind() const noexcept { return transport_->kind(); }

  /// Reference-counted; the first acquire opens the transport channel.
  void acquire(ChannelId const& channel);
  void release(ChannelId const& channel);
  bool is_open(ChannelId const& channel) const;

  /// Acquires the channel for the subscriber's lifetime.
  std::uint64_t subscribe(ChannelId const& channel, Callback callback);
  void unsubscribe(std::uint64_t token);
  std::size_t subscribers(ChannelId const& channel) const;

  /// Exclusive ownership of a holon inbox. Throws ChannelInUse.
  void claim(ChannelId const& channel, std::string owner);
  void unclaim(ChannelId const& channel);
  std::map<ChannelId, std::string> const& claims() const noexcept { return claims_; }

  /// Throws ChannelClosed when nobody holds the channel open.
  void publish(ChannelId const& channel, std::string payload);

  /// Channels with queued envelopes, ascending.
  std::vector<ChannelId> ready();
  /// Delivers the oldest envelope of `channel`; false when none is queued.
  bool deliver_one(ChannelId const& channel);
  std::size_t queued() const noexcept;
  std::size_t in_flight() const noexcept { return transport_->in_flight(); }
  void wait(std::chrono::milliseconds timeout) { transport_->wait(timeout); }

  void set_tap(Tap tap) { tap_ = std::move(tap); }
  std::uint64_t published() const noexcept { return published_; }
  std::uint64_t delivered() const noexcept { return delivered_; }
  std::uint64_t dropped() const noexcept { return dropped_; }

 private:
  struct Subscriber {
    std::uint64_t token;
    ChannelId channel;
    Callback callback;
  };
  void pull();

  std::unique_ptr<Transport> transport_;
  std::map<ChannelId, int> open_;
  std::map<ChannelId, std::deque<std::string>> queues_;
  std::vector<Subscriber> subscribers_;
  std::map<ChannelId, std::string> claims_;
  Tap tap_;
  std::uint64_t next_token_ = 1;
  std::uint64_t published_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t dropped_ = 0;
};

}  // namespace hms::msg
