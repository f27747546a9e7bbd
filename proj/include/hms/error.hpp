#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hms {

enum class Errc {
  // function-block runtime
  DuplicateType,
  InvalidType,
  UnknownType,
  UnknownInstance,
  DuplicateInstance,
  IllegalConnection,
  UnknownConnection,
  UnknownPort,
  StepBudgetExceeded,
  // messaging
  BadChannel,
  TransportUnavailable,
  ChannelClosed,
  MalformedPayload,
  // protocol
  MalformedXml,
  SchemaViolation,
  MissingAttribute,
  BadTime,
  // holons
  ChannelInUse,
  UnknownProduct,
  HolonBusy,
  // scheduling
  SlotConflict,
  UnknownBid,
  NoProvider,
  NoBids,
  AwardFailed,
  CyclicProduct,
  // cell simulation
  OverCapacity,
  // gateway
  BindFailure,
  ConfigError,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string const& detail)
      : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
        code_(code) {}
  explicit Error(Errc code) : Error(code, {}) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace hms
