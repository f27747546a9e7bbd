#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <utility>

#include "hms/fb/type.hpp"
#include "hms/proto/time.hpp"

namespace hms::fb {

/// Simulated-time alarms, fired by the executor in (time, id) order.
class TimerService {
 public:
  using Id = std::uint64_t;

  Id schedule(proto::EpochTime at, std::function<void()> fire);
  bool cancel(Id id);
  std::optional<proto::EpochTime> next() const;
  std::size_t fire_due(proto::EpochTime now);
  std::size_t pending() const noexcept { return timers_.size(); }

 private:
  std::map<std::pair<proto::EpochTime, Id>, std::function<void()>> timers_;
  std::map<Id, proto::EpochTime> index_;
  Id next_id_ = 1;
};

/// E_DELAY: START{DT} arms (re-arms) a one-shot alarm DT seconds from now,
/// STOP disarms it, EO fires when it expires.
void register_timer_types(TypeRegistry& types, TimerService& timers, std::function<proto::EpochTime()> clock);

}  // namespace hms::fb
