#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hms/error.hpp"
#include "hms/msg/channel.hpp"
#include "hms/proto/schema.hpp"

namespace hms::sched {

using proto::EpochTime;
using proto::Seconds;

struct NegotiationConfig {
  Seconds timeout = 2;
  int max_conflicts = 3;
};

/// Earliest finish wins; equal finishes go to the smallest Sender address
/// (compared as rendered text). Empty when `bids` is.
std::optional<proto::BidResponse> select_bid(std::vector<proto::BidResponse> const& bids);

/// Contract-net conversation for one operation, seen from the requester.
///
/// Pure state machine: every input returns the messages to send and, when
/// the machine is waiting, the time at which `on_timeout` must be called.
/// A round broadcasts GetBidForOp, collects RspBidForOp until every
/// provider answered or the timeout expires, then awards the best bid. A
/// rejected or unanswered award starts a new round, up to `max_conflicts`.
class Negotiation {
 public:
  enum class State { Idle, Collecting, Awarding, Done, Failed };

  struct Outbound {
    msg::ChannelId to;
    proto::Message message;
  };
  struct Step {
    std::vector<Outbound> send;
    std::optional<EpochTime> wake_at;
  };

  /// Round ids are "<id_prefix>.<round>".
  Negotiation(std::string id_prefix, std::string serv_id, EpochTime min_start, msg::ChannelId self,
              NegotiationConfig config = {});

  void set_order(std::string order_id, bool hold) {
    order_id_ = std::move(order_id);
    hold_ = hold;
  }

  Step begin(std::vector<msg::ChannelId> providers, EpochTime now);
  Step on_bid(proto::BidResponse const& bid, EpochTime now);
  Step on_confirm(proto::ConfirmOp const& confirm, EpochTime now);
  Step on_timeout(EpochTime now);

  State state() const noexcept { return state_; }
  bool finished() const noexcept { return state_ == State::Done || state_ == State::Failed; }
  std::optional<Errc> error() const noexcept { return error_; }
  std::string const& error_detail() const noexcept { return error_detail_; }
  std::string const& conversation() const noexcept { return conversation_; }
  std::string const& serv_id() const noexcept { return serv_id_; }
  EpochTime min_start() const noexcept { return min_start_; }
  int rounds() const noexcept { return round_; }
  int conflicts() const noexcept { return conflicts_; }
  std::optional<EpochTime> deadline() const noexcept { return deadline_; }
  /// The accepted bid once Done.
  std::optional<proto::BidResponse> const& awarded() const noexcept { return awarded_; }
  std::vector<proto::BidResponse> const& bids() const noexcept { return bids_; }

 private:
  Step start_round(EpochTime now);
  Step close_round(EpochTime now);
  Step conflict(EpochTime now);
  Step fail(Errc code, std::string detail);

  std::string id_prefix_;
  std::string serv_id_;
  EpochTime min_start_;
  msg::ChannelId self_;
  NegotiationConfig config_;
  std::string order_id_;
  bool hold_ = false;

  State state_ = State::Idle;
  std::vector<msg::ChannelId> providers_;
  std::vector<proto::BidResponse> bids_;
  std::optional<proto::BidResponse> pending_;
  std::optional<proto::BidResponse> awarded_;
  std::string conversation_;
  std::optional<EpochTime> deadline_;
  std::optional<Errc> error_;
  std::string error_detail_;
  int round_ = 0;
  int conflicts_ = 0;
};

std::string_view to_string(Negotiation::State s) noexcept;

}  // namespace hms::sched
