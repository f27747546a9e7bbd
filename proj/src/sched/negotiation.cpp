#include "hms/sched/negotiation.hpp"

#include <algorithm>

namespace hms::sched {

std::optional<proto::BidResponse> select_bid(std::vector<proto::BidResponse> const& bids) {
  if (bids.empty()) return std::nullopt;
  auto best = std::min_element(bids.begin(), bids.end(), [](auto const& a, auto const& b) {
    if (a.finish() != b.finish()) return a.finish() < b.finish();
    return a.sender.to_string() < b.sender.to_string();
  });
  return *best;
}

std::string_view to_string(Negotiation::State s) noexcept {
  switch (s) {
    case Negotiation::State::Idle: return "Idle";
    case Negotiation::State::Collecting: return "Collecting";
    case Negotiation::State::Awarding: return "Awarding";
    case Negotiation::State::Done: return "Done";
    case Negotiation::State::Failed: return "Failed";
  }
  return "?";
}

Negotiation::Negotiation(std::string id_prefix, std::string serv_id, EpochTime min_start, msg::ChannelId self,
                         NegotiationConfig config)
    : id_prefix_(std::move(id_prefix)),
      serv_id_(std::move(serv_id)),
      min_start_(min_start),
      self_(self),
      config_(config) {}

Negotiation::Step Negotiation::begin(std::vector<msg::ChannelId> providers, EpochTime now) {
  if (state_ != State::Idle) return {};
  std::sort(providers.begin(), providers.end());
  providers.erase(std::unique(providers.begin(), providers.end()), providers.end());
  providers_ = std::move(providers);
  if (providers_.empty()) return fail(Errc::NoProvider, serv_id_);
  return start_round(now);
}

Negotiation::Step Negotiation::start_round(EpochTime now) {
  ++round_;
  conversation_ = id_prefix_ + "." + std::to_string(round_);
  bids_.clear();
  pending_.reset();
  state_ = State::Collecting;
  if (round_ > 1) min_start_ = std::max(min_start_, now);
  deadline_ = now + config_.timeout;

  Step step;
  proto::BidRequest req{conversation_, serv_id_, min_start_, self_};
  for (auto const& p : providers_) step.send.push_back({p, req.to_message()});
  step.wake_at = deadline_;
  return step;
}

Negotiation::Step Negotiation::on_bid(proto::BidResponse const& bid, EpochTime now) {
  Step idle{{}, finished() ? std::nullopt : deadline_};
  if (state_ != State::Collecting || bid.id != conversation_) return idle;
  proto::BidRequest req{conversation_, serv_id_, min_start_, self_};
  if (!bid.answers(req)) return idle;
  if (std::find(providers_.begin(), providers_.end(), bid.sender) == providers_.end()) return idle;
  if (std::any_of(bids_.begin(), bids_.end(), [&](auto const& b) { return b.sender == bid.sender; })) return idle;
  bids_.push_back(bid);
  if (bids_.size() == providers_.size()) return close_round(now);
  return idle;
}

Negotiation::Step Negotiation::close_round(EpochTime now) {
  auto best = select_bid(bids_);
  if (!best) return fail(Errc::NoBids, serv_id_ + " in " + conversation_);
  pending_ = best;
  state_ = State::Awarding;
  deadline_ = now + config_.timeout;
  proto::AwardOp award{conversation_, serv_id_, best->start, self_, order_id_, hold_};
  return {{{best->sender, award.to_message()}}, deadline_};
}

Negotiation::Step Negotiation::on_confirm(proto::ConfirmOp const& confirm, EpochTime now) {
  Step idle{{}, finished() ? std::nullopt : deadline_};
  if (state_ != State::Awarding || confirm.id != conversation_) return idle;
  if (confirm.accepted) {
    state_ = State::Done;
    awarded_ = pending_;
    deadline_.reset();
    return {};
  }
  return conflict(now);
}

Negotiation::Step Negotiation::on_timeout(EpochTime now) {
  if (finished() || !deadline_ || now < *deadline_) return {{}, finished() ? std::nullopt : deadline_};
  if (state_ == State::Collecting) return close_round(now);
  // An award that is never confirmed counts as lost; free whatever the
  // provider may have booked before starting over.
  Step cancel;
  proto::Message c{"CancelOp"};
  c.set("ID", conversation_).set("OpID", serv_id_);
  cancel.send.push_back({pending_->sender, c});
  auto next = conflict(now);
  cancel.send.insert(cancel.send.end(), next.send.begin(), next.send.end());
  cancel.wake_at = next.wake_at;
  return cancel;
}

Negotiation::Step Negotiation::conflict(EpochTime now) {
  ++conflicts_;
  if (conflicts_ >= config_.max_conflicts)
    return fail(Errc::AwardFailed, serv_id_ + " after " + std::to_string(conflicts_) + " conflicts");
  return start_round(now);
}

Negotiation::Step Negotiation::fail(Errc code, std::string detail) {
  state_ = State::Failed;
  error_ = code;
  error_detail_ = std::move(detail);
  deadline_.reset();
  return {};
}

}  // namespace hms::sched
