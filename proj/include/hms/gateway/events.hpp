#pragma once

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "hms/proto/message.hpp"
#include "hms/proto/time.hpp"

namespace hms::gateway {

/// One monitoring event as streamed to the console.
struct EventFrame {
  std::uint64_t seq = 0;
  proto::EpochTime sim_time;
  std::string kind;
  std::vector<std::pair<std::string, std::string>> payload;  // message attributes, in order

  std::optional<std::string_view> get(std::string_view key) const;
  bool operator==(EventFrame const&) const = default;
};

/// Kinds accepted from the monitoring channel; anything else is ignored.
bool is_frame_kind(std::string_view kind);

/// nullopt for message types that are not frame kinds.
std::optional<EventFrame> frame_from_message(proto::Message const& m, std::uint64_t seq, proto::EpochTime t);

nlohmann::json to_json(EventFrame const& f);
EventFrame frame_from_json(nlohmann::json const& j);  // throws MalformedPayload
std::string to_line(EventFrame const& f);              // compact JSON, no newline

/// Everything the gateway shows, rebuilt from frames alone.
class ReadModel {
 public:
  struct Order {
    std::string id;
    std::string holon;
    std::string product;
    std::string parent;  // parent order id
    std::string state = "Pending";
    int percent = 0;
    std::vector<std::string> children;
    proto::EpochTime updated;
  };
  struct Holon {
    std::string id;
    std::string kind;
    std::string inbox;
    std::string parent;
    std::string order_id;
    std::string product;
  };
  struct Slot {
    std::string id;  // conversation
    std::string serv_id;
    std::string order_id;
    proto::EpochTime start;
    proto::EpochTime end;
    std::string state = "Committed";  // Committed | Running | Done | Failed
    std::optional<proto::EpochTime> started;
    std::optional<proto::EpochTime> finished;
    int percent = 0;
    proto::Seconds overrun = 0;
  };
  struct DirectoryRow {
    int id = 0;
    std::string service;
    std::string holon_addr;
  };

  void apply(EventFrame const& f);

  std::uint64_t last_seq() const noexcept { return last_seq_; }
  std::map<std::string, Order> const& orders() const noexcept { return orders_; }
  std::map<std::string, Holon> const& holons() const noexcept { return holons_; }
  std::map<std::string, std::map<std::string, Slot>> const& slots() const noexcept { return slots_; }
  std::vector<DirectoryRow> const& directory() const noexcept { return directory_; }

  /// Plan tree rooted at `order_id`, nullopt when unknown.
  std::optional<nlohmann::json> order_json(std::string const& order_id) const;
  nlohmann::json census_json() const;
  nlohmann::json gantt_json(std::string const& holon) const;  // slots by start
  nlohmann::json directory_json() const;
  /// Full snapshot, for replay comparisons.
  nlohmann::json snapshot() const;

  std::vector<std::string> census() const;

 private:
  nlohmann::json order_tree(Order const& o) const;

  std::uint64_t last_seq_ = 0;
  std::map<std::string, Order> orders_;
  std::map<std::string, Holon> holons_;
  std::map<std::string, std::map<std::string, Slot>> slots_;  // holon -> conversation -> slot
  std::vector<DirectoryRow> directory_;
};

/// Append-only frame log shared between the executor (single writer) and
/// HTTP / WebSocket readers.
class EventLog {
 public:
  using Listener = std::function<void(EventFrame const&)>;

  /// Assigns the next seq, applies the frame to the read model and notifies
  /// listeners (on the caller's thread).
  EventFrame append(proto::Message const& m, proto::EpochTime t);

  std::vector<EventFrame> since(std::uint64_t seq) const;
  std::size_t size() const;

  /// Runs `fn` with the read model under a shared lock.
  template <class F>
  auto read(F&& fn) const {
    std::shared_lock lock(mutex_);
    return fn(model_);
  }

  std::uint64_t add_listener(Listener l);
  void remove_listener(std::uint64_t token);

 private:
  mutable std::shared_mutex mutex_;
  std::vector<EventFrame> frames_;
  ReadModel model_;
  std::mutex listeners_mutex_;
  std::map<std::uint64_t, Listener> listeners_;
  std::uint64_t next_listener_ = 1;
};

}  // namespace hms::gateway
