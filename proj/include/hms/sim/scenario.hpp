#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hms/proto/time.hpp"

namespace hms::sim {

/// One scenario line: `<offset> board | refill <n> | order <product> | fault <n>`.
/// Offsets are simulated seconds from boot; `#` starts a comment.
struct ScenarioEvent {
  enum class Kind { Board, Refill, Order, Fault };

  proto::Seconds offset = 0;
  Kind kind = Kind::Board;
  int count = 1;
  std::string product;

  bool operator==(ScenarioEvent const&) const = default;
};

/// Sorted by offset, stable for equal offsets. Throws ConfigError with the
/// offending line number.
std::vector<ScenarioEvent> parse_scenario(std::string_view text);
std::vector<ScenarioEvent> load_scenario(std::string const& path);
std::string format_scenario_event(ScenarioEvent const& e);

}  // namespace hms::sim
