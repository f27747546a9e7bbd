#include "hms/msg/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "hms/error.hpp"

namespace hms::msg {

std::string_view to_string(TransportKind k) noexcept { return k == TransportKind::InProc ? "inproc" : "udp"; }

TransportKind transport_from(std::string_view name) {
  if (name == "inproc") return TransportKind::InProc;
  if (name == "udp") return TransportKind::Udp;
  throw Error(Errc::ConfigError, "unknown transport '" + std::string(name) + "'");
}

void InProcTransport::drain(std::function<void(Envelope&&)> const& sink) {
  while (!wire_.empty()) {
    Envelope e = std::move(wire_.front());
    wire_.pop_front();
    sink(std::move(e));
  }
}

// ---- UDP -------------------------------------------------------------------

namespace {

sockaddr_in to_sockaddr(std::array<std::uint8_t, 4> const& addr, std::uint16_t port) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  std::uint32_t a = (std::uint32_t{addr[0]} << 24) | (std::uint32_t{addr[1]} << 16) | (std::uint32_t{addr[2]} << 8) | addr[3];
  sa.sin_addr.s_addr = htonl(a);
  return sa;
}

constexpr std::array<std::uint8_t, 4> kLoopback{127, 0, 0, 1};

}  // namespace

UdpTransport::UdpTransport() {
  send_fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (send_fd_ < 0) throw Error(Errc::TransportUnavailable, std::string("socket: ") + std::strerror(errno));
  unsigned char loop = 1;
  ::setsockopt(send_fd_, IPPROTO_IP, IP_MULTICAST_LOOP, &loop, sizeof loop);
  receiver_ = std::thread([this] { receive_loop(); });
}

UdpTransport::~UdpTransport() {
  stop_ = true;
  if (receiver_.joinable()) receiver_.join();
  for (auto& [ch, s] : sockets_) ::close(s.fd);
  for (int fd : graveyard_) ::close(fd);
  if (send_fd_ >= 0) ::close(send_fd_);
}

void UdpTransport::open(ChannelId const& channel) {
  std::lock_guard lock(mu_);
  if (sockets_.count(channel)) return;
  int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) throw Error(Errc::TransportUnavailable, std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEPORT, &one, sizeof one);
  auto any = to_sockaddr({0, 0, 0, 0}, channel.port);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&any), sizeof any) < 0) {
    int err = errno;
    ::close(fd);
    throw Error(Errc::TransportUnavailable, "bind " + channel.to_string() + ": " + std::strerror(err));
  }
  ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK);
  Socket s{fd, false};
  if (channel.is_multicast()) {
    ip_mreq mreq{};
    mreq.imr_multiaddr = to_sockaddr(channel.address, 0).sin_addr;
    mreq.imr_interface.s_addr = htonl(INADDR_ANY);
    if (::setsockopt(fd, IPPROTO_IP, IP_ADD_MEMBERSHIP, &mreq, sizeof mreq) < 0) s.loopback = true;
  }
  sockets_.emplace(channel, s);
}

void UdpTransport::close(ChannelId const& channel) {
  std::lock_guard lock(mu_);
  auto it = sockets_.find(channel);
  if (it == sockets_.end()) return;
  graveyard_.push_back(it->second.fd);  // the receiver may be polling it
  in_flight_ -= it->second.in_flight;
  sockets_.erase(it);
}

bool UdpTransport::loopback(ChannelId const& channel) const {
  std::lock_guard lock(mu_);
  auto it = sockets_.find(channel);
  return it != sockets_.end() && it->second.loopback;
}

void UdpTransport::send(Envelope envelope) {
  bool local = false;
  bool loop = !envelope.channel.is_multicast();
  {
    std::lock_guard lock(mu_);
    if (auto it = sockets_.find(envelope.channel); it != sockets_.end()) {
      local = true;
      loop = loop || it->second.loopback;
      ++it->second.in_flight;  // before sendto: the receiver may win the race
      ++in_flight_;
    }
  }
  auto const& p = envelope.payload;
  auto try_send = [&](std::array<std::uint8_t, 4> const& addr) {
    auto sa = to_sockaddr(addr, envelope.channel.port);
    return ::sendto(send_fd_, p.data(), p.size(), 0, reinterpret_cast<sockaddr*>(&sa), sizeof sa) ==
           static_cast<ssize_t>(p.size());
  };
  bool ok = loop ? try_send(envelope.channel.is_multicast() ? kLoopback : envelope.channel.address)
                 : try_send(envelope.channel.address);
  if (!ok && !loop && envelope.channel.is_multicast()) {
    ok = try_send(kLoopback);
    std::lock_guard lock(mu_);
    if (auto it = sockets_.find(envelope.channel); it != sockets_.end()) it->second.loopback = true;
  }
  if (!ok && local) {
    std::lock_guard lock(mu_);
    if (auto it = sockets_.find(envelope.channel); it != sockets_.end() && it->second.in_flight > 0) {
      --it->second.in_flight;
      --in_flight_;
    }
  }
}

void UdpTransport::receive_loop() {
  std::vector<char> buf(65536);
  while (!stop_) {
    std::vector<pollfd> fds;
    std::vector<ChannelId> chans;
    {
      std::lock_guard lock(mu_);
      for (int fd : graveyard_) ::close(fd);
      graveyard_.clear();
      for (auto const& [ch, s] : sockets_) {
        fds.push_back({s.fd, POLLIN, 0});
        chans.push_back(ch);
      }
    }
    if (fds.empty()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      continue;
    }
    if (::poll(fds.data(), fds.size(), 20) <= 0) continue;
    std::vector<Envelope> got;
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (!(fds[i].revents & POLLIN)) continue;
      for (;;) {
        ssize_t n = ::recv(fds[i].fd, buf.data(), buf.size(), 0);
        if (n <= 0) break;
        got.push_back({chans[i], std::string(buf.data(), static_cast<std::size_t>(n))});
      }
    }
    if (got.empty()) continue;
    {
      std::lock_guard lock(mu_);
      for (auto& e : got) {
        auto it = sockets_.find(e.channel);
        if (it == sockets_.end()) continue;
        if (it->second.in_flight > 0) {
          --it->second.in_flight;
          --in_flight_;
        }
        received_.push_back(std::move(e));
      }
    }
    arrived_.notify_all();
  }
}

void UdpTransport::drain(std::function<void(Envelope&&)> const& sink) {
  std::deque<Envelope> batch;
  {
    std::lock_guard lock(mu_);
    batch.swap(received_);
  }
  for (auto& e : batch)
    if (!e.payload.empty()) sink(std::move(e));
}

std::size_t UdpTransport::in_flight() const noexcept {
  std::lock_guard lock(mu_);
  return in_flight_ > 0 ? static_cast<std::size_t>(in_flight_) : 0;
}

void UdpTransport::wait(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  arrived_.wait_for(lock, timeout, [&] { return !received_.empty(); });
}

std::unique_ptr<Transport> make_transport(TransportKind kind) {
  if (kind == TransportKind::Udp) return std::make_unique<UdpTransport>();
  return std::make_unique<InProcTransport>();
}

// ---- Bus -------------------------------------------------------------------

Bus::Bus(std::unique_ptr<Transport> transport) : transport_(std::move(transport)) {}

void Bus::acquire(ChannelId const& channel) {
  int& n = open_[channel];
  if (n == 0) {
    try {
      transport_->open(channel);
    } catch (...) {
      open_.erase(channel);
      throw;
    }
  }
  ++n;
}

void Bus::release(ChannelId const& channel) {
  auto it = open_.find(channel);
  if (it == open_.end()) return;
  if (--it->second > 0) return;
  open_.erase(it);
  transport_->close(channel);
  if (auto q = queues_.find(channel); q != queues_.end()) {
    dropped_ += q->second.size();
    queues_.erase(q);
  }
}

bool Bus::is_open(ChannelId const& channel) const { return open_.count(channel) > 0; }

std::uint64_t Bus::subscribe(ChannelId const& channel, Callback callback) {
  acquire(channel);
  auto token = next_token_++;
  subscribers_.push_back({token, channel, std::move(callback)});
  return token;
}

void Bus::unsubscribe(std::uint64_t token) {
  auto it = std::find_if(subscribers_.begin(), subscribers_.end(), [&](auto const& s) { return s.token == token; });
  if (it == subscribers_.end()) return;
  auto channel = it->channel;
  subscribers_.erase(it);
  release(channel);
}

std::size_t Bus::subscribers(ChannelId const& channel) const {
  return static_cast<std::size_t>(
      std::count_if(subscribers_.begin(), subscribers_.end(), [&](auto const& s) { return s.channel == channel; }));
}

void Bus::claim(ChannelId const& channel, std::string owner) {
  auto [it, fresh] = claims_.emplace(channel, owner);
  if (!fresh && it->second != owner)
    throw Error(Errc::ChannelInUse, channel.to_string() + " already belongs to " + it->second);
}

void Bus::unclaim(ChannelId const& channel) { claims_.erase(channel); }

void Bus::publish(ChannelId const& channel, std::string payload) {
  if (payload.empty()) throw Error(Errc::MalformedPayload, "empty payload");
  if (!is_open(channel)) throw Error(Errc::ChannelClosed, channel.to_string());
  ++published_;
  transport_->send({channel, std::move(payload)});
}

void Bus::pull() {
  transport_->drain([&](Envelope&& e) {
    if (!is_open(e.channel)) {
      ++dropped_;
      return;
    }
    queues_[e.channel].push_back(std::move(e.payload));
  });
}

std::vector<ChannelId> Bus::ready() {
  pull();
  std::vector<ChannelId> out;
  for (auto const& [ch, q] : queues_)
    if (!q.empty()) out.push_back(ch);
  return out;
}

bool Bus::deliver_one(ChannelId const& channel) {
  pull();
  auto it = queues_.find(channel);
  if (it == queues_.end() || it->second.empty()) return false;
  Envelope e{channel, std::move(it->second.front())};
  it->second.pop_front();
  if (it->second.empty()) queues_.erase(it);
  ++delivered_;
  if (tap_) tap_(e);
  std::vector<std::uint64_t> tokens;
  for (auto const& s : subscribers_)
    if (s.channel == channel) tokens.push_back(s.token);
  for (auto token : tokens) {
    // A callback may unsubscribe someone further down the list.
    auto s = std::find_if(subscribers_.begin(), subscribers_.end(), [&](auto const& x) { return x.token == token; });
    if (s == subscribers_.end()) continue;
    auto cb = s->callback;
    cb(e.payload);
  }
  return true;
}

std::size_t Bus::queued() const noexcept {
  std::size_t n = 0;
  for (auto const& [ch, q] : queues_) n += q.size();
  return n;
}

}  // namespace hms::msg
