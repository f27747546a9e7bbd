#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hms/msg/channel.hpp"

namespace hms::holon {

struct DirectoryEntry {
  int id = 0;
  std::string service;
  msg::ChannelId holon_addr;

  bool operator==(DirectoryEntry const&) const = default;
};

/// Service -> provider table, one JSON object per line:
///   {"ID":1,"Service":"S_20","HolonAddr":"225.0.0.1:3002"}
class Directory {
 public:
  Directory() = default;

  /// Throws ConfigError on unreadable files or malformed lines.
  static Directory load(std::filesystem::path const& file);
  static Directory parse(std::string_view jsonl);

  /// Idempotent on (service, addr); new rows get the next ID. Returns the row
  /// and whether it was added.
  std::pair<DirectoryEntry, bool> register_service(std::string const& service, msg::ChannelId addr);
  /// Providers in row order; empty for unknown services.
  std::vector<msg::ChannelId> lookup(std::string_view service) const;
  std::vector<DirectoryEntry> const& rows() const noexcept { return rows_; }

  std::string to_jsonl() const;
  /// Rows registered from now on are appended to `file` as well.
  void persist_to(std::filesystem::path file) { file_ = std::move(file); }

 private:
  std::vector<DirectoryEntry> rows_;
  std::optional<std::filesystem::path> file_;
};

}  // namespace hms::holon
