#include "hms/holon/world.hpp"

#include "hms/error.hpp"
#include "hms/proto/schema.hpp"

namespace hms::holon {

std::string_view to_string(HolonKind k) noexcept {
  switch (k) {
    case HolonKind::Resource: return "Resource";
    case HolonKind::Order: return "Order";
    case HolonKind::Manager: return "Manager";
    case HolonKind::Coordinator: return "Coordinator";
  }
  return "?";
}

void HolonRegistry::add(HolonInfo info) {
  auto id = info.id;
  holons_.insert_or_assign(std::move(id), std::move(info));
}

bool HolonRegistry::remove(std::string const& id) { return holons_.erase(id) > 0; }

HolonInfo const* HolonRegistry::find(std::string_view id) const {
  auto it = holons_.find(id);
  return it == holons_.end() ? nullptr : &it->second;
}

std::vector<std::string> HolonRegistry::census() const {
  std::vector<std::string> out;
  for (auto const& [id, h] : holons_) out.push_back(id);
  return out;
}

std::size_t HolonRegistry::count(HolonKind k) const {
  std::size_t n = 0;
  for (auto const& [id, h] : holons_) n += h.kind == k;
  return n;
}

CellBinding& World::cell(std::string_view name) {
  auto it = cells.find(name);
  if (it == cells.end()) throw Error(Errc::ConfigError, "no simulated cell '" + std::string(name) + "'");
  return it->second;
}

std::optional<proto::Message> controller_report(sim::CellEvent const& e, sim::CellSim const& cell) {
  using K = sim::CellEventKind;
  proto::Message m;
  switch (e.kind) {
    case K::Started: {
      m = proto::Message("OpStarted");
      m.set("ID", e.conversation).set("OpID", e.serv_id).set("Time", e.time.to_string());
      m.set("Loaded", proto::bool_text(e.loaded));
      std::string resident;
      for (auto const& s : cell.memory().resident()) resident += (resident.empty() ? "" : ",") + s;
      m.set("Resident", resident);
      return m;
    }
    case K::Progress:
      m = proto::Message("OpProgress");
      m.set("ID", e.conversation).set("OpID", e.serv_id).set("Percent", std::int64_t{e.percent});
      return m;
    case K::Done:
      m = proto::Message("OpDone");
      m.set("ID", e.conversation).set("OpID", e.serv_id).set("Time", e.time.to_string());
      return m;
    case K::Overrun:
      m = proto::Message("Overrun");
      m.set("ID", e.conversation).set("OpID", e.serv_id).set("Delay", e.delay);
      return m;
    case K::Blocked:
    case K::Evicted: return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace hms::holon
