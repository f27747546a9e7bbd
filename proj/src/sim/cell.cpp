#include "hms/sim/cell.hpp"

#include <algorithm>
#include <stdexcept>

#include "hms/error.hpp"

namespace hms::sim {

bool RobotMemory::contains(std::string const& serv) const {
  return std::find(order_.begin(), order_.end(), serv) != order_.end();
}

std::optional<std::string> RobotMemory::use(std::string const& serv) {
  auto it = std::find(order_.begin(), order_.end(), serv);
  if (it != order_.end()) {
    order_.splice(order_.begin(), order_, it);
    return std::nullopt;
  }
  std::optional<std::string> evicted;
  if (static_cast<int>(order_.size()) >= capacity_ && !order_.empty()) {
    evicted = order_.back();
    order_.pop_back();
  }
  if (capacity_ > 0) order_.push_front(serv);
  return evicted;
}

std::string_view to_string(BlockReason r) noexcept {
  switch (r) {
    case BlockReason::NoBoard: return "NoBoard";
    case BlockReason::NoComponents: return "NoComponents";
    case BlockReason::RobotBusy: return "RobotBusy";
  }
  return "?";
}

std::string_view to_string(CellEventKind k) noexcept {
  switch (k) {
    case CellEventKind::Started: return "Started";
    case CellEventKind::Progress: return "Progress";
    case CellEventKind::Done: return "Done";
    case CellEventKind::Overrun: return "Overrun";
    case CellEventKind::Blocked: return "Blocked";
    case CellEventKind::Evicted: return "Evicted";
  }
  return "?";
}

CellSim::CellSim(CellParams params, std::vector<proto::ServiceDef> services, EpochTime start)
    : params_(std::move(params)),
      now_(start),
      magazine_(params_.magazine_initial),
      blank_(params_.initial_boards),
      memory_(params_.robot_memory) {
  if (magazine_ < 0 || magazine_ > params_.magazine_capacity)
    throw Error(Errc::OverCapacity, "initial magazine level");
  if (blank_ < 0 || blank_ > params_.post_capacity) throw Error(Errc::OverCapacity, "initial boards");
  for (auto& s : services) {
    auto id = s.serv_id;
    services_.insert_or_assign(std::move(id), std::move(s));
  }
  // Listed last is least recently used.
  for (auto it = params_.initial_resident.rbegin(); it != params_.initial_resident.rend(); ++it) memory_.use(*it);
}

void CellSim::add_service(proto::ServiceDef def) {
  auto id = def.serv_id;
  services_.insert_or_assign(std::move(id), std::move(def));
}

void CellSim::enqueue(Job job) {
  if (!services_.count(job.serv_id)) throw Error(Errc::NoProvider, "cell does not run " + job.serv_id);
  auto pos = std::upper_bound(queue_.begin(), queue_.end(), job.start,
                              [](EpochTime t, Job const& j) { return t < j.start; });
  queue_.insert(pos, std::move(job));
}

bool CellSim::cancel(std::string const& conversation) {
  auto it = std::find_if(queue_.begin(), queue_.end(), [&](Job const& j) { return j.conversation == conversation; });
  if (it == queue_.end()) return false;
  if (it == queue_.begin()) blocked_.reset();
  queue_.erase(it);
  return true;
}

void CellSim::board_arrived() {
  if (blank_ + held_ >= params_.post_capacity)
    throw Error(Errc::OverCapacity, "work post already holds " + std::to_string(blank_ + held_) + " pallets");
  ++blank_;
  ++counters_.boards_arrived;
}

void CellSim::magazine_refill(int n) {
  if (n < 0 || magazine_ + n > params_.magazine_capacity)
    throw Error(Errc::OverCapacity, "magazine refill of " + std::to_string(n) + " exceeds capacity");
  magazine_ += n;
  counters_.components_refilled += n;
}

std::optional<std::string> CellSim::running() const {
  if (!running_) return std::nullopt;
  return running_->job.conversation;
}

std::vector<CellEvent> CellSim::tick(Seconds dt) {
  if (dt <= 0) throw std::invalid_argument("tick needs dt > 0");
  return advance_to(now_ + dt);
}

std::vector<CellEvent> CellSim::advance_to(EpochTime t) {
  if (t < now_) throw std::invalid_argument("simulation time cannot go back");
  std::vector<CellEvent> out;
  for (;;) {
    try_start(out);
    if (running_ && running_->next <= t) {
      now_ = running_->next;
      finish_phase(out);
      continue;
    }
    if (!running_ && !queue_.empty() && queue_.front().start > now_ && queue_.front().start <= t) {
      now_ = queue_.front().start;
      continue;
    }
    break;
  }
  now_ = t;
  try_start(out);
  return out;
}

std::optional<EpochTime> CellSim::next_event_time() const {
  if (running_) return running_->next;
  if (!queue_.empty() && queue_.front().start > now_) return queue_.front().start;
  return std::nullopt;
}

EpochTime CellSim::step_end(Running const& r, int k) const {
  return r.exec_start + (k * r.def.base_exec) / r.def.phases();
}

void CellSim::try_start(std::vector<CellEvent>& out) {
  if (queue_.empty() || queue_.front().start > now_) return;
  Job const& head = queue_.front();
  auto const& def = services_.at(head.serv_id);

  std::optional<BlockReason> reason;
  if (running_) reason = BlockReason::RobotBusy;
  else if (def.kind == proto::ServiceKind::Place && blank_ < 1) reason = BlockReason::NoBoard;
  else if (def.kind == proto::ServiceKind::Place && magazine_ < def.pick_place) reason = BlockReason::NoComponents;
  else if (def.kind == proto::ServiceKind::Join && held_ < 2) reason = BlockReason::NoBoard;
  if (reason) {
    if (blocked_ != reason) {
      CellEvent e{CellEventKind::Blocked, now_, head.conversation, head.serv_id, head.order_id};
      e.reason = *reason;
      out.push_back(std::move(e));
      blocked_ = reason;
    }
    return;
  }
  blocked_.reset();

  Running r{queue_.front(), def};
  queue_.pop_front();
  if (def.kind == proto::ServiceKind::Place) {
    --blank_;
    ++counters_.boards_consumed;
    magazine_ -= def.pick_place;
    counters_.components_consumed += def.pick_place;
  } else {
    held_ -= 2;
  }

  bool nonresident = def.resident_required && !memory_.contains(def.serv_id);
  r.loading = def.resident_required && (nonresident || r.job.loaded);
  if (def.resident_required) {
    if (auto evicted = memory_.use(def.serv_id)) {
      CellEvent e{CellEventKind::Evicted, now_, r.job.conversation, r.job.serv_id, r.job.order_id};
      e.evicted = *evicted;
      out.push_back(std::move(e));
    }
  }
  executions_.push_back({def.serv_id, now_, nonresident});
  r.exec_start = r.loading ? now_ + params_.load_time : now_;
  r.next = r.loading ? r.exec_start : step_end(r, 1);

  CellEvent e{CellEventKind::Started, now_, r.job.conversation, r.job.serv_id, r.job.order_id};
  e.loaded = r.loading;
  out.push_back(std::move(e));
  running_ = std::move(r);
}

void CellSim::finish_phase(std::vector<CellEvent>& out) {
  auto& r = *running_;
  if (r.loading) {
    r.loading = false;
    r.next = step_end(r, 1);
    return;
  }
  ++r.step;
  int steps = r.def.phases();
  CellEvent progress{CellEventKind::Progress, now_, r.job.conversation, r.job.serv_id, r.job.order_id};
  progress.percent = r.step * 100 / steps;
  out.push_back(std::move(progress));
  if (r.step < steps) {
    r.next = step_end(r, r.step + 1);
    return;
  }

  if (r.def.kind == proto::ServiceKind::Place) {
    if (r.job.hold) ++held_;
    else ++counters_.intermediates_shipped;
  } else {
    ++counters_.finals_shipped;
  }
  if (now_ > r.job.end) {
    CellEvent late{CellEventKind::Overrun, now_, r.job.conversation, r.job.serv_id, r.job.order_id};
    late.delay = now_ - r.job.end;
    out.push_back(std::move(late));
    ++counters_.overruns;
  }
  out.push_back(CellEvent{CellEventKind::Done, now_, r.job.conversation, r.job.serv_id, r.job.order_id});
  running_.reset();
}

bool CellSim::conserved() const {
  int placed = 0;
  for (auto const& e : executions_) {
    auto const& def = services_.at(e.serv_id);
    if (def.kind == proto::ServiceKind::Place) placed += def.pick_place;
  }
  return counters_.components_consumed == params_.magazine_initial + counters_.components_refilled - magazine_ &&
         counters_.components_consumed == placed && magazine_ >= 0 &&
         magazine_ <= params_.magazine_capacity && static_cast<int>(memory_.size()) <= memory_.capacity();
}

ReconfigurationReport reconfiguration_report(std::vector<ExecutionRecord> const& run, Seconds load_time) {
  ReconfigurationReport r;
  for (std::size_t i = 0; i < run.size(); ++i) {
    if (run[i].nonresident_load) r.holonic += load_time;
    bool switched = i > 0 && run[i].serv_id != run[i - 1].serv_id;
    if (switched || run[i].nonresident_load) r.classical += load_time;
  }
  return r;
}

}  // namespace hms::sim
