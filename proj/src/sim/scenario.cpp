#include "hms/sim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "hms/error.hpp"

namespace hms::sim {

namespace {

template <class Int>
bool parse_int(std::string const& s, Int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

std::vector<ScenarioEvent> parse_scenario(std::string_view text) {
  std::vector<ScenarioEvent> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::vector<std::string> w;
    for (std::string s; words >> s;) w.push_back(s);
    if (w.empty()) continue;

    auto bad = [&](std::string const& why) {
      throw Error(Errc::ConfigError, "scenario line " + std::to_string(lineno) + ": " + why);
    };
    ScenarioEvent e;
    if (!parse_int(w[0], e.offset) || e.offset < 0) bad("bad offset '" + w[0] + "'");
    if (w.size() < 2) bad("missing action");
    auto const& action = w[1];
    if (action == "board") {
      e.kind = ScenarioEvent::Kind::Board;
      if (w.size() == 3 && (!parse_int(w[2], e.count) || e.count < 1)) bad("bad board count");
      if (w.size() > 3) bad("trailing words");
    } else if (action == "refill" || action == "fault") {
      e.kind = action == "refill" ? ScenarioEvent::Kind::Refill : ScenarioEvent::Kind::Fault;
      if (w.size() != 3 || !parse_int(w[2], e.count) || e.count < 1) bad(action + " needs a positive count");
    } else if (action == "order") {
      e.kind = ScenarioEvent::Kind::Order;
      if (w.size() != 3) bad("order needs one product name");
      e.product = w[2];
    } else {
      bad("unknown action '" + action + "'");
    }
    out.push_back(std::move(e));
  }
  std::stable_sort(out.begin(), out.end(), [](auto const& a, auto const& b) { return a.offset < b.offset; });
  return out;
}

std::vector<ScenarioEvent> load_scenario(std::string const& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::ConfigError, "cannot read scenario " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_scenario(ss.str());
}

std::string format_scenario_event(ScenarioEvent const& e) {
  auto head = std::to_string(e.offset) + " ";
  switch (e.kind) {
    case ScenarioEvent::Kind::Board: return head + "board" + (e.count > 1 ? " " + std::to_string(e.count) : "");
    case ScenarioEvent::Kind::Refill: return head + "refill " + std::to_string(e.count);
    case ScenarioEvent::Kind::Order: return head + "order " + e.product;
    case ScenarioEvent::Kind::Fault: return head + "fault " + std::to_string(e.count);
  }
  return head;
}

}  // namespace hms::sim
