#include "hms/error.hpp"

namespace hms {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::DuplicateType: return "DuplicateType";
    case Errc::InvalidType: return "InvalidType";
    case Errc::UnknownType: return "UnknownType";
    case Errc::UnknownInstance: return "UnknownInstance";
    case Errc::DuplicateInstance: return "DuplicateInstance";
    case Errc::IllegalConnection: return "IllegalConnection";
    case Errc::UnknownConnection: return "UnknownConnection";
    case Errc::UnknownPort: return "UnknownPort";
    case Errc::StepBudgetExceeded: return "StepBudgetExceeded";
    case Errc::BadChannel: return "BadChannel";
    case Errc::TransportUnavailable: return "TransportUnavailable";
    case Errc::ChannelClosed: return "ChannelClosed";
    case Errc::MalformedPayload: return "MalformedPayload";
    case Errc::MalformedXml: return "MalformedXml";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::MissingAttribute: return "MissingAttribute";
    case Errc::BadTime: return "BadTime";
    case Errc::ChannelInUse: return "ChannelInUse";
    case Errc::UnknownProduct: return "UnknownProduct";
    case Errc::HolonBusy: return "HolonBusy";
    case Errc::SlotConflict: return "SlotConflict";
    case Errc::UnknownBid: return "UnknownBid";
    case Errc::NoProvider: return "NoProvider";
    case Errc::NoBids: return "NoBids";
    case Errc::AwardFailed: return "AwardFailed";
    case Errc::CyclicProduct: return "CyclicProduct";
    case Errc::OverCapacity: return "OverCapacity";
    case Errc::BindFailure: return "BindFailure";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace hms
