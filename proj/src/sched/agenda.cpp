#include "hms/sched/agenda.hpp"

#include <algorithm>

#include "hms/error.hpp"

namespace hms::sched {

EpochTime Agenda::earliest_start(EpochTime min_start, Seconds duration) const {
  EpochTime t = min_start;
  for (auto const& s : slots_) {
    if (s.end <= t) continue;
    if (t + duration <= s.start) break;
    t = s.end;
  }
  return t;
}

bool Agenda::is_free(EpochTime start, EpochTime end) const {
  return std::none_of(slots_.begin(), slots_.end(), [&](ScheduleSlot const& s) { return s.overlaps(start, end); });
}

ScheduleSlot const& Agenda::insert(ScheduleSlot slot) {
  if (!(slot.start < slot.end))
    throw Error(Errc::SlotConflict, "empty window for " + slot.conversation);
  if (!is_free(slot.start, slot.end))
    throw Error(Errc::SlotConflict,
                slot.conversation + " [" + slot.start.to_string() + ", " + slot.end.to_string() + ") is taken");
  auto pos = std::upper_bound(slots_.begin(), slots_.end(), slot.start,
                              [](EpochTime t, ScheduleSlot const& s) { return t < s.start; });
  return *slots_.insert(pos, std::move(slot));
}

bool Agenda::remove(std::string const& conversation) {
  auto it = std::find_if(slots_.begin(), slots_.end(),
                         [&](ScheduleSlot const& s) { return s.conversation == conversation; });
  if (it == slots_.end()) return false;
  slots_.erase(it);
  return true;
}

ScheduleSlot const* Agenda::find(std::string const& conversation) const {
  auto it = std::find_if(slots_.begin(), slots_.end(),
                         [&](ScheduleSlot const& s) { return s.conversation == conversation; });
  return it == slots_.end() ? nullptr : &*it;
}

bool Agenda::well_formed() const {
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (!(slots_[i].start < slots_[i].end)) return false;
    if (i > 0 && slots_[i - 1].end > slots_[i].start) return false;
  }
  return true;
}

Quote compute_bid(Agenda const& agenda, proto::ServiceDef const& service, EpochTime min_start, bool resident,
                  Seconds load_time) {
  Seconds exec = service.base_exec + (resident ? 0 : load_time);
  return {agenda.earliest_start(min_start, exec), exec};
}

ScheduleSlot const& commit_bid(Agenda& agenda, BidBook& book, std::string const& conversation,
                               std::string const& order_id, bool hold) {
  auto it = book.find(conversation);
  if (it == book.end()) throw Error(Errc::UnknownBid, conversation);
  Bid bid = std::move(it->second);
  book.erase(it);
  ScheduleSlot slot{bid.serv_id, conversation, order_id, bid.response.start, bid.response.finish(), bid.loaded, hold};
  return agenda.insert(std::move(slot));
}

ResourceScheduler::ResourceScheduler(msg::ChannelId self, std::vector<proto::ServiceDef> services, Seconds load_time,
                                     ResidentFn resident)
    : self_(self), load_time_(load_time), resident_(std::move(resident)) {
  for (auto& s : services) add_service(std::move(s));
}

bool ResourceScheduler::offers(std::string const& serv_id) const { return services_.count(serv_id) > 0; }

proto::ServiceDef const* ResourceScheduler::service(std::string const& serv_id) const {
  auto it = services_.find(serv_id);
  return it == services_.end() ? nullptr : &it->second;
}

void ResourceScheduler::add_service(proto::ServiceDef def) {
  auto id = def.serv_id;
  services_.insert_or_assign(std::move(id), std::move(def));
}

std::optional<proto::BidResponse> ResourceScheduler::quote(proto::BidRequest const& request) {
  auto const* def = service(request.op_id);
  if (!def) return std::nullopt;
  bool resident = !def->resident_required || !resident_ || resident_(def->serv_id);
  auto q = compute_bid(agenda_, *def, request.min_start, resident, load_time_);
  proto::BidResponse rsp{request.id, request.op_id, q.start, q.exec_time, self_};
  book_.insert_or_assign(request.id, Bid{rsp, def->serv_id, !resident});
  return rsp;
}

proto::ConfirmOp ResourceScheduler::award(proto::AwardOp const& award) {
  try {
    auto it = book_.find(award.id);
    if (it != book_.end() && it->second.response.start != award.start)
      throw Error(Errc::SlotConflict, "award does not match the quote");
    commit_bid(agenda_, book_, award.id, award.order_id, award.hold);
    return {award.id, award.op_id, true};
  } catch (Error const& e) {
    if (e.code() != Errc::SlotConflict && e.code() != Errc::UnknownBid) throw;
    book_.erase(award.id);
    ++conflicts_;
    return {award.id, award.op_id, false};
  }
}

}  // namespace hms::sched
