#include "hms/gateway/events.hpp"

#include <algorithm>

#include "hms/error.hpp"

namespace hms::gateway {

using nlohmann::json;

namespace {

constexpr std::string_view kKinds[] = {
    "HolonCreated", "HolonRemoved", "SlotCommitted", "SlotReleased", "OpStarted",        "OpProgress",
    "OpDone",       "OpFailed",     "OrderProgress", "Overrun",      "ServiceRegistered",
};

std::string str(EventFrame const& f, std::string_view key) { return std::string(f.get(key).value_or("")); }

std::int64_t num(EventFrame const& f, std::string_view key, std::int64_t fallback = 0) {
  auto v = f.get(key);
  if (!v) return fallback;
  try {
    return std::stoll(std::string(*v));
  } catch (std::exception const&) {
    return fallback;
  }
}

proto::EpochTime time_of(EventFrame const& f, std::string_view key) {
  return proto::EpochTime::try_parse(f.get(key).value_or("")).value_or(f.sim_time);
}


}  // namespace

std::optional<std::string_view> EventFrame::get(std::string_view key) const {
  for (auto const& [k, v] : payload)
    if (k == key) return v;
  return std::nullopt;
}

bool is_frame_kind(std::string_view kind) { return std::find(std::begin(kKinds), std::end(kKinds), kind) != std::end(kKinds); }

std::optional<EventFrame> frame_from_message(proto::Message const& m, std::uint64_t seq, proto::EpochTime t) {
  if (!is_frame_kind(m.type_name)) return std::nullopt;
  return EventFrame{seq, t, m.type_name, m.attributes};
}

json to_json(EventFrame const& f) {
  json payload = json::object();
  for (auto const& [k, v] : f.payload) payload[k] = v;
  return {{"seq", f.seq}, {"sim_time", f.sim_time.seconds}, {"kind", f.kind}, {"payload", payload}};
}

EventFrame frame_from_json(json const& j) {
  try {
    EventFrame f;
    f.seq = j.at("seq").get<std::uint64_t>();
    f.sim_time = proto::EpochTime{j.at("sim_time").get<std::int64_t>()};
    f.kind = j.at("kind").get<std::string>();
    // nlohmann objects are key-sorted, so replayed payload order is by key.
    for (auto const& [k, v] : j.at("payload").items()) f.payload.emplace_back(k, v.get<std::string>());
    if (!is_frame_kind(f.kind)) throw Error(Errc::MalformedPayload, "unknown frame kind " + f.kind);
    return f;
  } catch (json::exception const& e) {
    throw Error(Errc::MalformedPayload, e.what());
  }
}

std::string to_line(EventFrame const& f) { return to_json(f).dump(); }

// ---- ReadModel -------------------------------------------------------------------

void ReadModel::apply(EventFrame const& f) {
  last_seq_ = std::max(last_seq_, f.seq);
  auto const& k = f.kind;
  if (k == "HolonCreated") {
    Holon h{str(f, "Holon"), str(f, "Kind"), str(f, "Inbox"), str(f, "Parent"), str(f, "OrderID"), str(f, "Product")};
    if (!h.order_id.empty()) {
      auto& o = orders_[h.order_id];
      o.id = h.order_id;
      o.holon = h.id;
      if (o.product.empty()) o.product = h.product;
      if (auto p = holons_.find(h.parent); p != holons_.end() && !p->second.order_id.empty()) {
        o.parent = p->second.order_id;
        auto& siblings = orders_[o.parent].children;
        if (std::find(siblings.begin(), siblings.end(), o.id) == siblings.end()) siblings.push_back(o.id);
      }
      o.updated = f.sim_time;
    }
    holons_[h.id] = std::move(h);
  } else if (k == "HolonRemoved") {
    holons_.erase(str(f, "Holon"));
  } else if (k == "OrderProgress") {
    auto id = str(f, "OrderID");
    auto& o = orders_[id];
    o.id = id;
    if (f.get("Holon")) o.holon = str(f, "Holon");
    if (f.get("Product")) o.product = str(f, "Product");
    if (f.get("Parent") && o.parent.empty()) {
      o.parent = str(f, "Parent");
      auto& siblings = orders_[o.parent].children;
      if (std::find(siblings.begin(), siblings.end(), id) == siblings.end()) siblings.push_back(id);
    }
    o.state = str(f, "State");
    o.percent = static_cast<int>(num(f, "Percent"));
    o.updated = f.sim_time;
  } else if (k == "SlotCommitted") {
    Slot s;
    s.id = str(f, "ID");
    s.serv_id = str(f, "ServID");
    s.order_id = str(f, "OrderID");
    s.start = time_of(f, "Start");
    s.end = time_of(f, "End");
    slots_[str(f, "Holon")][s.id] = std::move(s);
  } else if (k == "SlotReleased") {
    slots_[str(f, "Holon")].erase(str(f, "ID"));
  } else if (k == "OpStarted" || k == "OpProgress" || k == "OpDone" || k == "OpFailed" || k == "Overrun") {
    auto h = slots_.find(str(f, "Holon"));
    if (h == slots_.end()) return;
    auto s = h->second.find(str(f, "ID"));
    if (s == h->second.end()) return;
    auto& slot = s->second;
    if (k == "OpStarted") {
      slot.state = "Running";
      slot.started = time_of(f, "Time");
    } else if (k == "OpProgress") {
      slot.percent = static_cast<int>(num(f, "Percent"));
    } else if (k == "OpDone") {
      slot.state = "Done";
      slot.percent = 100;
      slot.finished = time_of(f, "Time");
    } else if (k == "OpFailed") {
      slot.state = "Failed";
    } else {
      slot.overrun += num(f, "Delay");
    }
  } else if (k == "ServiceRegistered") {
    DirectoryRow row{static_cast<int>(num(f, "ID")), str(f, "Service"), str(f, "HolonAddr")};
    auto same = [&](DirectoryRow const& r) { return r.id == row.id; };
    if (std::none_of(directory_.begin(), directory_.end(), same)) directory_.push_back(std::move(row));
    std::sort(directory_.begin(), directory_.end(), [](auto const& a, auto const& b) { return a.id < b.id; });
  }
}

json ReadModel::order_tree(Order const& o) const {
  json children = json::array();
  for (auto const& c : o.children)
    if (auto it = orders_.find(c); it != orders_.end()) children.push_back(order_tree(it->second));
  json j{{"order_id", o.id},   {"holon", o.holon},     {"product", o.product},
         {"state", o.state},   {"percent", o.percent}, {"children", children}};
  if (!o.parent.empty()) j["parent"] = o.parent;
  j["live"] = !o.holon.empty() && holons_.count(o.holon) > 0;
  return j;
}

std::optional<json> ReadModel::order_json(std::string const& order_id) const {
  auto it = orders_.find(order_id);
  if (it == orders_.end()) return std::nullopt;
  return order_tree(it->second);
}

std::vector<std::string> ReadModel::census() const {
  std::vector<std::string> out;
  for (auto const& [id, h] : holons_) out.push_back(id);
  return out;
}

json ReadModel::census_json() const {
  json out = json::array();
  for (auto const& [id, h] : holons_) {
    json j{{"id", id}, {"kind", h.kind}, {"inbox", h.inbox}};
    if (!h.parent.empty()) j["parent"] = h.parent;
    if (!h.order_id.empty()) j["order_id"] = h.order_id;
    if (!h.product.empty()) j["product"] = h.product;
    out.push_back(std::move(j));
  }
  return out;
}

json ReadModel::gantt_json(std::string const& holon) const {
  json out = json::array();
  auto h = slots_.find(holon);
  if (h == slots_.end()) return out;
  std::vector<Slot const*> sorted;
  for (auto const& [id, s] : h->second) sorted.push_back(&s);
  std::stable_sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) {
    return std::tie(a->start, a->id) < std::tie(b->start, b->id);
  });
  for (auto const* s : sorted) {
    auto label = s->serv_id.substr(s->serv_id.find('_') == std::string::npos ? 0 : s->serv_id.find('_') + 1);
    json j{{"id", s->id},   {"serv_id", s->serv_id},         {"label", label},
           {"order_id", s->order_id}, {"start", s->start.seconds}, {"end", s->end.seconds},
           {"state", s->state}, {"percent", s->percent},        {"overrun", s->overrun}};
    if (s->started) j["started"] = s->started->seconds;
    if (s->finished) j["finished"] = s->finished->seconds;
    out.push_back(std::move(j));
  }
  return out;
}

json ReadModel::directory_json() const {
  json out = json::array();
  for (auto const& r : directory_) out.push_back({{"ID", r.id}, {"Service", r.service}, {"HolonAddr", r.holon_addr}});
  return out;
}

json ReadModel::snapshot() const {
  json orders = json::object();
  for (auto const& [id, o] : orders_)
    if (o.parent.empty()) orders[id] = order_tree(o);
  json gantt = json::object();
  for (auto const& [h, s] : slots_) gantt[h] = gantt_json(h);
  return {{"last_seq", last_seq_}, {"orders", orders}, {"holons", census_json()}, {"gantt", gantt},
          {"directory", directory_json()}};
}

// ---- EventLog ------------------------------------------------------------------

EventFrame EventLog::append(proto::Message const& m, proto::EpochTime t) {
  EventFrame f;
  {
    std::unique_lock lock(mutex_);
    auto made = frame_from_message(m, frames_.size() + 1, t);
    if (!made) throw Error(Errc::MalformedPayload, "not a monitoring frame: " + m.type_name);
    f = std::move(*made);
    model_.apply(f);
    frames_.push_back(f);
  }
  std::lock_guard lock(listeners_mutex_);
  for (auto const& [token, l] : listeners_) l(f);
  return f;
}

std::vector<EventFrame> EventLog::since(std::uint64_t seq) const {
  std::shared_lock lock(mutex_);
  if (seq >= frames_.size()) return {};
  return {frames_.begin() + static_cast<std::ptrdiff_t>(seq), frames_.end()};
}

std::size_t EventLog::size() const {
  std::shared_lock lock(mutex_);
  return frames_.size();
}

std::uint64_t EventLog::add_listener(Listener l) {
  std::lock_guard lock(listeners_mutex_);
  listeners_[next_listener_] = std::move(l);
  return next_listener_++;
}

void EventLog::remove_listener(std::uint64_t token) {
  std::lock_guard lock(listeners_mutex_);
  listeners_.erase(token);
}

}  // namespace hms::gateway
