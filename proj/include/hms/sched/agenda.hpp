#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hms/proto/product.hpp"
#include "hms/proto/schema.hpp"
#include "hms/proto/time.hpp"

namespace hms::sched {

using proto::EpochTime;
using proto::Seconds;

/// One committed booking, [start, end).
struct ScheduleSlot {
  std::string serv_id;
  std::string conversation;
  std::string order_id;
  EpochTime start;
  EpochTime end;
  bool loaded = false;  // priced with a configuration load
  bool hold = false;

  Seconds duration() const { return end - start; }
  bool overlaps(EpochTime s, EpochTime e) const { return s < end && start < e; }
  bool operator==(ScheduleSlot const&) const = default;
};

/// Committed, pairwise non-overlapping slots ordered by start.
class Agenda {
 public:
  /// Earliest t >= min_start with [t, t + duration) free.
  EpochTime earliest_start(EpochTime min_start, Seconds duration) const;
  bool is_free(EpochTime start, EpochTime end) const;
  /// Throws SlotConflict when the window is taken.
  ScheduleSlot const& insert(ScheduleSlot slot);
  bool remove(std::string const& conversation);
  ScheduleSlot const* find(std::string const& conversation) const;

  std::vector<ScheduleSlot> const& slots() const noexcept { return slots_; }
  bool empty() const noexcept { return slots_.empty(); }
  bool well_formed() const;

 private:
  std::vector<ScheduleSlot> slots_;
};

struct Quote {
  EpochTime start;
  Seconds exec_time = 0;
};

/// Prices `service`; a non-resident configuration costs an extra `load_time`.
/// Never reserves anything.
Quote compute_bid(Agenda const& agenda, proto::ServiceDef const& service, EpochTime min_start, bool resident,
                  Seconds load_time);

struct Bid {
  proto::BidResponse response;
  std::string serv_id;
  bool loaded = false;
};

/// Outstanding quotes of one resource holon, by conversation id.
using BidBook = std::map<std::string, Bid, std::less<>>;

/// Books the quoted window. Throws UnknownBid when the conversation was
/// never quoted, SlotConflict when the window has since been taken. The bid
/// is consumed either way.
ScheduleSlot const& commit_bid(Agenda& agenda, BidBook& book, std::string const& conversation,
                               std::string const& order_id = {}, bool hold = false);

/// The bidding side of a resource holon: quotes, awards and cancellations on
/// one agenda.
class ResourceScheduler {
 public:
  using ResidentFn = std::function<bool(std::string const&)>;

  ResourceScheduler(msg::ChannelId self, std::vector<proto::ServiceDef> services, Seconds load_time,
                    ResidentFn resident = {});

  msg::ChannelId const& address() const noexcept { return self_; }
  bool offers(std::string const& serv_id) const;
  proto::ServiceDef const* service(std::string const& serv_id) const;
  void add_service(proto::ServiceDef def);

  /// Empty when the service is not offered.
  std::optional<proto::BidResponse> quote(proto::BidRequest const& request);
  /// Commits a previous quote. Accepted=false on SlotConflict or UnknownBid.
  proto::ConfirmOp award(proto::AwardOp const& award);
  bool cancel(std::string const& conversation) { return agenda_.remove(conversation); }

  Agenda const& agenda() const noexcept { return agenda_; }
  BidBook const& book() const noexcept { return book_; }
  std::size_t conflicts() const noexcept { return conflicts_; }

 private:
  msg::ChannelId self_;
  std::map<std::string, proto::ServiceDef, std::less<>> services_;
  Seconds load_time_;
  ResidentFn resident_;
  Agenda agenda_;
  BidBook book_;
  std::size_t conflicts_ = 0;
};

}  // namespace hms::sched
