#include "hms/proto/time.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

#include "hms/error.hpp"

namespace hms::proto {

std::optional<EpochTime> EpochTime::try_parse(std::string_view text) noexcept {
  if (text.empty() || text.size() > 18) return std::nullopt;
  for (char c : text)
    if (c < '0' || c > '9') return std::nullopt;
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return EpochTime{value};
}

EpochTime EpochTime::parse(std::string_view text) {
  if (auto t = try_parse(text)) return *t;
  throw Error(Errc::BadTime, std::string(text));
}

std::string EpochTime::iso8601() const {
  using namespace std::chrono;
  sys_seconds tp{std::chrono::seconds{seconds}};
  auto day = floor<days>(tp);
  year_month_day ymd{day};
  hh_mm_ss hms{tp - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

}  // namespace hms::proto
