#include "hms/gateway/config.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "hms/error.hpp"

namespace hms::gateway {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void bad(std::string const& where, std::string const& what) {
  throw Error(Errc::ConfigError, where + ": " + what);
}

std::string read_file(fs::path const& p) {
  std::ifstream in(p);
  if (!in) throw Error(Errc::ConfigError, "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

msg::ChannelId channel(json const& j, std::string const& where) {
  if (!j.is_string()) bad(where, "expected \"address:port\"");
  auto c = msg::ChannelId::try_parse(j.get<std::string>());
  if (!c) bad(where, "bad channel '" + j.get<std::string>() + "'");
  return *c;
}

std::optional<msg::ChannelId> opt_channel(json const& j, char const* key, std::string const& where) {
  if (!j.contains(key)) return std::nullopt;
  return channel(j.at(key), where + "." + key);
}

fs::path resolve(fs::path const& base, std::string const& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

HolonRole role_from(std::string const& s, std::string const& where) {
  if (s == "manager") return HolonRole::Manager;
  if (s == "coordinator") return HolonRole::Coordinator;
  if (s == "cell") return HolonRole::Cell;
  bad(where, "unknown holon role '" + s + "'");
}

sim::CellParams cell_params(json const& j, std::string const& where) {
  sim::CellParams p;
  auto num = [&](char const* key, auto& field) {
    if (j.contains(key)) {
      if (!j.at(key).is_number_integer()) bad(where + "." + key, "expected an integer");
      field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    }
  };
  num("magazine_capacity", p.magazine_capacity);
  num("magazine_initial", p.magazine_initial);
  num("post_capacity", p.post_capacity);
  num("initial_boards", p.initial_boards);
  num("robot_memory", p.robot_memory);
  num("load_time", p.load_time);
  if (j.contains("initial_resident")) p.initial_resident = j.at("initial_resident").get<std::vector<std::string>>();
  if (j.contains("layout")) p.layout = j.at("layout").get<std::string>();
  if (p.robot_memory < 1 || p.load_time < 0 || p.magazine_initial > p.magazine_capacity)
    bad(where, "inconsistent cell parameters");
  return p;
}

}  // namespace

HolonConfig const* SystemConfig::holon(HolonRole role) const {
  for (auto const& d : devices)
    for (auto const& r : d.resources)
      for (auto const& h : r.holons)
        if (h.role == role) return &h;
  return nullptr;
}

SystemConfig parse_system_config(std::string const& json_text, fs::path const& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (json::exception const& e) {
    bad("system config", e.what());
  }
  SystemConfig cfg;
  try {
    if (root.contains("start_time")) cfg.start = proto::EpochTime{root.at("start_time").get<std::int64_t>()};
    if (root.contains("idle_timeout")) cfg.idle_timeout = root.at("idle_timeout").get<proto::Seconds>();

    auto const& cat = root.at("catalog");
    if (cat.contains("services")) cfg.services = proto::parse_services(read_file(resolve(base_dir, cat.at("services"))));
    if (cat.contains("products")) {
      auto dir = resolve(base_dir, cat.at("products"));
      std::vector<fs::path> files;
      for (auto const& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".xml") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (auto const& f : files) {
        auto spec = proto::parse_product(read_file(f));
        if (cfg.products.count(spec.name)) bad(f.string(), "duplicate product " + spec.name);
        cfg.products.emplace(spec.name, std::move(spec));
      }
    }
    if (cat.contains("directory")) {
      cfg.directory_file = resolve(base_dir, cat.at("directory"));
      cfg.directory = holon::Directory::load(*cfg.directory_file);
    }
    if (root.contains("stock"))
      for (auto const& [k, v] : root.at("stock").items()) cfg.stock[k] = v.get<int>();
    if (root.contains("negotiation")) {
      auto const& n = root.at("negotiation");
      if (n.contains("timeout")) cfg.negotiation.timeout = n.at("timeout").get<proto::Seconds>();
      if (n.contains("max_conflicts")) cfg.negotiation.max_conflicts = n.at("max_conflicts").get<int>();
    }

    auto const& ch = root.at("channels");
    cfg.hmi = channel(ch.at("hmi"), "channels.hmi");
    cfg.order_inbox_base = channel(ch.at("order_inbox_base"), "channels.order_inbox_base");
    auto const& orders = root.at("orders");
    cfg.order_device = orders.at("device").get<std::string>();
    if (orders.contains("resource")) cfg.order_resource = orders.at("resource").get<std::string>();

    for (auto const& c : root.value("cells", json::array())) {
      auto name = c.at("name").get<std::string>();
      cfg.cells.push_back({name, cell_params(c.value("params", json::object()), "cells." + name)});
    }

    for (auto const& d : root.at("devices")) {
      DeviceConfig dev;
      dev.name = d.at("name").get<std::string>();
      auto where = "devices." + dev.name;
      dev.management = opt_channel(d, "management", where);
      for (auto const& r : d.value("resources", json::array())) {
        ResourceConfig res;
        res.name = r.at("name").get<std::string>();
        auto rwhere = where + "." + res.name;
        for (auto const& h : r.value("holons", json::array())) {
          HolonConfig hc;
          hc.id = h.at("id").get<std::string>();
          auto hwhere = rwhere + "." + hc.id;
          hc.role = role_from(h.at("role").get<std::string>(), hwhere);
          hc.inbox = channel(h.at("inbox"), hwhere + ".inbox");
          hc.cell = h.value("cell", "");
          hc.services = h.value("services", std::vector<std::string>{});
          hc.ctrl_out = opt_channel(h, "ctrl_out", hwhere);
          hc.ctrl_in = opt_channel(h, "ctrl_in", hwhere);
          res.holons.push_back(std::move(hc));
        }
        for (auto const& i : r.value("interfaces", json::array())) {
          InterfaceConfig ic;
          ic.id = i.at("id").get<std::string>();
          ic.cell = i.at("cell").get<std::string>();
          ic.commands = channel(i.at("commands"), rwhere + "." + ic.id + ".commands");
          ic.status = channel(i.at("status"), rwhere + "." + ic.id + ".status");
          res.interfaces.push_back(std::move(ic));
        }
        dev.resources.push_back(std::move(res));
      }
      cfg.devices.push_back(std::move(dev));
    }
  } catch (json::exception const& e) {
    bad("system config", e.what());
  } catch (fs::filesystem_error const& e) {
    bad("system config", e.what());
  } catch (Error const& e) {
    if (e.code() == Errc::ConfigError) throw;
    bad("system config", e.what());
  }

  if (!cfg.holon(HolonRole::Manager)) bad("devices", "no manager holon");
  if (!cfg.holon(HolonRole::Coordinator)) bad("devices", "no coordinator holon");
  auto od = std::find_if(cfg.devices.begin(), cfg.devices.end(), [&](auto const& d) { return d.name == cfg.order_device; });
  if (od == cfg.devices.end()) bad("orders.device", "no device '" + cfg.order_device + "'");
  if (!od->management) bad("orders.device", "device '" + cfg.order_device + "' has no management channel");
  for (auto const& d : cfg.devices)
    for (auto const& r : d.resources) {
      for (auto const& h : r.holons)
        if (h.role == HolonRole::Cell &&
            std::none_of(cfg.cells.begin(), cfg.cells.end(), [&](auto const& c) { return c.name == h.cell; }))
          bad(h.id, "unknown cell '" + h.cell + "'");
      for (auto const& i : r.interfaces)
        if (std::none_of(cfg.cells.begin(), cfg.cells.end(), [&](auto const& c) { return c.name == i.cell; }))
          bad(i.id, "unknown cell '" + i.cell + "'");
    }
  return cfg;
}

SystemConfig load_system_config(fs::path const& file) {
  return parse_system_config(read_file(file), file.parent_path());
}

}  // namespace hms::gateway
