#include "hms/holon/directory.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "hms/error.hpp"

namespace hms::holon {

namespace {

nlohmann::json row_json(DirectoryEntry const& e) {
  return {{"ID", e.id}, {"Service", e.service}, {"HolonAddr", e.holon_addr.to_string()}};
}

}  // namespace

Directory Directory::parse(std::string_view jsonl) {
  Directory d;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      DirectoryEntry e{j.at("ID").get<int>(), j.at("Service").get<std::string>(),
                       msg::ChannelId::parse(j.at("HolonAddr").get<std::string>())};
      for (auto const& r : d.rows_) {
        if (r.id == e.id) throw Error(Errc::ConfigError, "duplicate ID " + std::to_string(e.id));
        if (r.service == e.service && r.holon_addr == e.holon_addr) throw Error(Errc::ConfigError, "duplicate row");
      }
      d.rows_.push_back(std::move(e));
    } catch (Error const& e) {
      throw Error(Errc::ConfigError, "directory line " + std::to_string(lineno) + ": " + e.what());
    } catch (std::exception const& e) {
      throw Error(Errc::ConfigError, "directory line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return d;
}

Directory Directory::load(std::filesystem::path const& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::ConfigError, "cannot read " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::pair<DirectoryEntry, bool> Directory::register_service(std::string const& service, msg::ChannelId addr) {
  for (auto const& r : rows_)
    if (r.service == service && r.holon_addr == addr) return {r, false};
  int id = 1;
  for (auto const& r : rows_) id = std::max(id, r.id + 1);
  rows_.push_back({id, service, addr});
  if (file_) {
    std::ofstream out(*file_, std::ios::app);
    out << row_json(rows_.back()).dump() << '\n';
  }
  return {rows_.back(), true};
}

std::vector<msg::ChannelId> Directory::lookup(std::string_view service) const {
  std::vector<msg::ChannelId> out;
  for (auto const& r : rows_)
    if (r.service == service) out.push_back(r.holon_addr);
  return out;
}

std::string Directory::to_jsonl() const {
  std::string out;
  for (auto const& r : rows_) out += row_json(r).dump() + '\n';
  return out;
}

}  // namespace hms::holon
