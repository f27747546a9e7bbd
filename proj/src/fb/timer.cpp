#include "hms/fb/timer.hpp"

#include "hms/fb/resource.hpp"

namespace hms::fb {

TimerService::Id TimerService::schedule(proto::EpochTime at, std::function<void()> fire) {
  Id id = next_id_++;
  timers_.emplace(std::make_pair(at, id), std::move(fire));
  index_.emplace(id, at);
  return id;
}

bool TimerService::cancel(Id id) {
  auto it = index_.find(id);
  if (it == index_.end()) return false;
  timers_.erase({it->second, id});
  index_.erase(it);
  return true;
}

std::optional<proto::EpochTime> TimerService::next() const {
  if (timers_.empty()) return std::nullopt;
  return timers_.begin()->first.first;
}

std::size_t TimerService::fire_due(proto::EpochTime now) {
  std::size_t n = 0;
  while (!timers_.empty() && timers_.begin()->first.first <= now) {
    auto node = timers_.extract(timers_.begin());
    index_.erase(node.key().second);
    node.mapped()();
    ++n;
  }
  return n;
}

namespace {

class Delay final : public Behavior {
 public:
  Delay(TimerService& timers, std::function<proto::EpochTime()> const& clock) : timers_(timers), clock_(clock) {}

  void on_event(BlockContext& ctx, std::string_view event) override {
    disarm();
    if (event != "START") return;
    auto* res = &ctx.resource();
    auto id = ctx.instance_id();
    armed_ = timers_.schedule(clock_() + ctx.integer("DT"), [this, res, id] {
      armed_ = 0;
      res->emit_external(id, "EO");
    });
  }
  void on_delete(BlockContext&) override { disarm(); }

 private:
  void disarm() {
    if (armed_) timers_.cancel(armed_);
    armed_ = 0;
  }

  TimerService& timers_;
  std::function<proto::EpochTime()> const& clock_;
  TimerService::Id armed_ = 0;
};

}  // namespace

void register_timer_types(TypeRegistry& types, TimerService& timers, std::function<proto::EpochTime()> clock) {
  FBTypeDef def;
  def.name = "E_DELAY";
  def.event_inputs = {{"START", {"DT"}}, {"STOP", {}}};
  def.event_outputs = {{"EO", {}}};
  def.data_inputs = {{"DT", ValueKind::Integer}};
  auto shared = std::make_shared<std::function<proto::EpochTime()>>(std::move(clock));
  def.kind = ServiceInterface{[&timers, shared](BlockContext&) { return std::make_unique<Delay>(timers, *shared); }};
  types.register_type(std::move(def));
}

}  // namespace hms::fb
