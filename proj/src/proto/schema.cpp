#include "hms/proto/schema.hpp"

#include <algorithm>
#include <array>
#include <charconv>

#include "hms/error.hpp"
#include "hms/proto/xml.hpp"

namespace hms::proto {

namespace {

using K = AttrKind;
constexpr bool req = true;
constexpr bool opt = false;

constexpr AttrSpec kGetBid[] = {
    {"ID", K::Text, req}, {"OpID", K::Text, req}, {"MinStartTime", K::Epoch, req}, {"Sender", K::Channel, req}};
constexpr AttrSpec kRspBid[] = {{"ID", K::Text, req},
                                {"OpID", K::Text, req},
                                {"StartTime", K::Epoch, req},
                                {"ExecTime", K::Positive, req},
                                {"Sender", K::Channel, req}};
constexpr AttrSpec kAward[] = {{"ID", K::Text, req},         {"OpID", K::Text, req},
                               {"StartTime", K::Epoch, req}, {"Sender", K::Channel, req},
                               {"OrderID", K::Text, opt},    {"Hold", K::Bool, opt}};
constexpr AttrSpec kConfirm[] = {{"ID", K::Text, req}, {"OpID", K::Text, req}, {"Accepted", K::Bool, req}};
constexpr AttrSpec kCancel[] = {{"ID", K::Text, req}, {"OpID", K::Text, req}};
constexpr AttrSpec kRegister[] = {{"ServID", K::Text, req}, {"HolonAddr", K::Channel, req}};
constexpr AttrSpec kLookup[] = {{"ID", K::Text, opt}, {"ServID", K::Text, req}, {"Sender", K::Channel, opt}};
constexpr AttrSpec kRspLookup[] = {{"ID", K::Text, opt}, {"ServID", K::Text, req}};
constexpr AttrSpec kProvider[] = {{"HolonAddr", K::Channel, req}};
constexpr AttrSpec kExecOp[] = {{"ID", K::Text, opt},         {"OpID", K::Text, req},
                                {"StartTime", K::Epoch, opt}, {"EndTime", K::Epoch, opt},
                                {"OrderAddr", K::Channel, opt}, {"OrderID", K::Text, opt},
                                {"Hold", K::Bool, opt},         {"Loaded", K::Bool, opt}};
constexpr AttrSpec kOpStarted[] = {{"ID", K::Text, opt},    {"OpID", K::Text, req},     {"Time", K::Epoch, opt},
                                   {"Loaded", K::Bool, opt}, {"Resident", K::Text, opt}, {"Holon", K::Text, opt}};
constexpr AttrSpec kOpProgress[] = {
    {"ID", K::Text, opt}, {"OpID", K::Text, req}, {"Percent", K::Percent, req}, {"Holon", K::Text, opt}};
constexpr AttrSpec kOpDone[] = {
    {"ID", K::Text, opt}, {"OpID", K::Text, req}, {"Time", K::Epoch, opt}, {"Holon", K::Text, opt}};
constexpr AttrSpec kOverrun[] = {
    {"ID", K::Text, opt}, {"OpID", K::Text, req}, {"Delay", K::Integer, req}, {"Holon", K::Text, opt}};
constexpr AttrSpec kOpFailed[] = {
    {"ID", K::Text, opt}, {"OpID", K::Text, req}, {"Reason", K::Text, opt}, {"Holon", K::Text, opt}};
constexpr AttrSpec kCommand[] = {{"Seq", K::Integer, req},    {"Name", K::Text, req},     {"ID", K::Text, opt},
                                 {"OpID", K::Text, opt},      {"StartTime", K::Epoch, opt}, {"EndTime", K::Epoch, opt},
                                 {"Hold", K::Bool, opt},      {"Loaded", K::Bool, opt},     {"OrderID", K::Text, opt}};
constexpr AttrSpec kCommandResult[] = {{"Seq", K::Integer, req}, {"Status", K::Text, req}};
constexpr AttrSpec kCreateOrder[] = {
    {"Product", K::Text, req}, {"OrderID", K::Text, opt}, {"Parent", K::Channel, opt}, {"Path", K::Text, opt}};
constexpr AttrSpec kOrderStatus[] = {{"OrderID", K::Text, req}, {"Percent", K::Percent, req},
                                     {"Holon", K::Text, opt},   {"State", K::Text, opt},
                                     {"EndTime", K::Epoch, opt}};
constexpr AttrSpec kHolonCreated[] = {{"Holon", K::Text, req},  {"Kind", K::Text, req},    {"Inbox", K::Channel, opt},
                                      {"Parent", K::Text, opt}, {"OrderID", K::Text, opt}, {"Product", K::Text, opt}};
constexpr AttrSpec kHolonRemoved[] = {{"Holon", K::Text, req}};
constexpr AttrSpec kSlotCommitted[] = {{"Holon", K::Text, req},  {"ID", K::Text, req},     {"ServID", K::Text, req},
                                       {"OrderID", K::Text, opt}, {"Start", K::Epoch, req}, {"End", K::Epoch, req}};
constexpr AttrSpec kOrderProgress[] = {{"OrderID", K::Text, req}, {"Holon", K::Text, opt},   {"Product", K::Text, opt},
                                       {"Parent", K::Text, opt},  {"State", K::Text, req},    {"Percent", K::Percent, req}};
constexpr AttrSpec kServiceRegistered[] = {
    {"ID", K::Integer, req}, {"Service", K::Text, req}, {"HolonAddr", K::Channel, req}};
constexpr AttrSpec kRequest[] = {
    {"ID", K::Text, req}, {"Action", K::Text, req}, {"Resource", K::Text, opt}, {"Reply", K::Channel, opt}};
constexpr AttrSpec kFB[] = {{"Name", K::Text, req}, {"Type", K::Text, opt}};
constexpr AttrSpec kParam[] = {{"Name", K::Text, req}, {"Value", K::Text, req}};
constexpr AttrSpec kConnection[] = {{"Source", K::Text, req}, {"Destination", K::Text, req}};
constexpr AttrSpec kResponse[] = {{"ID", K::Text, req}, {"Reason", K::Text, opt}};

constexpr Schema kSchemas[] = {
    {"GetBidForOp", kGetBid},
    {"RspBidForOp", kRspBid},
    {"AwardOp", kAward},
    {"ConfirmOp", kConfirm},
    {"CancelOp", kCancel},
    {"RegisterService", kRegister},
    {"LookupService", kLookup},
    {"RspLookup", kRspLookup, true},
    {"Provider", kProvider},
    {"ExecOp", kExecOp},
    {"OpStarted", kOpStarted},
    {"OpProgress", kOpProgress},
    {"OpDone", kOpDone},
    {"Overrun", kOverrun},
    {"OpFailed", kOpFailed},
    {"Command", kCommand},
    {"CommandResult", kCommandResult},
    {"CreateOrder", kCreateOrder},
    {"OrderStatus", kOrderStatus},
    {"HolonCreated", kHolonCreated},
    {"HolonRemoved", kHolonRemoved},
    {"SlotCommitted", kSlotCommitted},
    {"OrderProgress", kOrderProgress},
    {"ServiceRegistered", kServiceRegistered},
    {"Request", kRequest, true},
    {"FB", kFB, true},
    {"Param", kParam},
    {"Connection", kConnection},
    {"Response", kResponse},
    {"Ping", {}},
};

bool valid_integer(std::string_view s, std::int64_t* out = nullptr) {
  if (s.empty()) return false;
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return false;
  if (s.front() == '+' || (s.size() > 1 && s.front() == '0') || (s.size() > 2 && s[0] == '-' && s[1] == '0'))
    return false;
  if (out) *out = v;
  return true;
}

void check_value(Schema const& schema, AttrSpec const& spec, std::string_view value) {
  auto bad = [&](char const* what) {
    throw Error(Errc::SchemaViolation, std::string(schema.type_name) + "." + std::string(spec.name) + " is not " +
                                           what + ": '" + std::string(value) + "'");
  };
  std::int64_t n = 0;
  switch (spec.kind) {
    case K::Text: break;
    case K::Integer:
      if (!valid_integer(value)) bad("an integer");
      break;
    case K::Positive:
      if (!valid_integer(value, &n) || n <= 0) bad("a positive integer");
      break;
    case K::Percent:
      if (!valid_integer(value, &n) || n < 0 || n > 100) bad("a percentage");
      break;
    case K::Epoch:
      if (!EpochTime::try_parse(value)) throw Error(Errc::BadTime, std::string(schema.type_name) + "." +
                                                                       std::string(spec.name) + "='" +
                                                                       std::string(value) + "'");
      break;
    case K::Channel:
      if (!msg::ChannelId::try_parse(value)) bad("a channel address");
      break;
    case K::Bool:
      if (value != "true" && value != "false") bad("a boolean");
      break;
  }
}

}  // namespace

Schema const* find_schema(std::string_view type_name) noexcept {
  for (auto const& s : kSchemas)
    if (s.type_name == type_name) return &s;
  return nullptr;
}

void validate(Message const& m) {
  if (!is_valid_name(m.type_name)) throw Error(Errc::SchemaViolation, "invalid element name '" + m.type_name + "'");
  for (auto const& [name, value] : m.attributes)
    if (!is_valid_name(name)) throw Error(Errc::SchemaViolation, "invalid attribute name '" + name + "'");

  auto const* schema = find_schema(m.type_name);
  if (!schema) return;
  for (auto const& spec : schema->attributes) {
    auto value = m.get(spec.name);
    if (!value) {
      if (spec.required) throw Error(Errc::MissingAttribute, std::string(spec.name));
      continue;
    }
    check_value(*schema, spec, *value);
  }
  for (auto const& [name, value] : m.attributes) {
    bool known = std::any_of(schema->attributes.begin(), schema->attributes.end(),
                             [&](AttrSpec const& s) { return s.name == name; });
    if (!known) throw Error(Errc::SchemaViolation, m.type_name + " has no attribute '" + name + "'");
  }
  if (!schema->children_allowed && !m.children.empty())
    throw Error(Errc::SchemaViolation, m.type_name + " takes no child elements");
  for (auto const& child : m.children) validate(child);
}

Message canonicalize(Message const& m) {
  validate(m);
  auto const* schema = find_schema(m.type_name);
  Message out(m.type_name);
  out.text = m.text;
  if (schema) {
    for (auto const& spec : schema->attributes)
      if (auto v = m.get(spec.name)) out.attributes.emplace_back(std::string(spec.name), std::string(*v));
  } else {
    out.attributes = m.attributes;
  }
  out.children.reserve(m.children.size());
  for (auto const& c : m.children) out.children.push_back(canonicalize(c));
  return out;
}

EpochTime epoch_attr(Message const& m, std::string_view name) { return EpochTime::parse(m.at(name)); }

std::int64_t int_attr(Message const& m, std::string_view name) {
  std::int64_t v = 0;
  auto const& s = m.at(name);
  if (!valid_integer(s, &v)) throw Error(Errc::SchemaViolation, std::string(name) + " is not an integer");
  return v;
}

msg::ChannelId channel_attr(Message const& m, std::string_view name) {
  auto const& s = m.at(name);
  if (auto id = msg::ChannelId::try_parse(s)) return *id;
  throw Error(Errc::SchemaViolation, std::string(name) + " is not a channel address");
}

bool bool_attr(Message const& m, std::string_view name) {
  auto const& s = m.at(name);
  if (s == "true") return true;
  if (s == "false") return false;
  throw Error(Errc::SchemaViolation, std::string(name) + " is not a boolean");
}

// ---- typed messages ---------------------------------------------------------

Message BidRequest::to_message() const {
  Message m("GetBidForOp");
  m.set("ID", id).set("OpID", op_id).set("MinStartTime", min_start.seconds).set("Sender", sender.to_string());
  return m;
}

BidRequest BidRequest::from(Message const& m) {
  if (m.type_name != "GetBidForOp") throw Error(Errc::SchemaViolation, "expected GetBidForOp");
  validate(m);
  return {m.at("ID"), m.at("OpID"), epoch_attr(m, "MinStartTime"), channel_attr(m, "Sender")};
}

bool BidResponse::answers(BidRequest const& request) const {
  return id == request.id && op_id == request.op_id && start >= request.min_start && exec_time > 0;
}

Message BidResponse::to_message() const {
  Message m("RspBidForOp");
  m.set("ID", id)
      .set("OpID", op_id)
      .set("StartTime", start.seconds)
      .set("ExecTime", exec_time)
      .set("Sender", sender.to_string());
  return m;
}

BidResponse BidResponse::from(Message const& m) {
  if (m.type_name != "RspBidForOp") throw Error(Errc::SchemaViolation, "expected RspBidForOp");
  validate(m);
  return {m.at("ID"), m.at("OpID"), epoch_attr(m, "StartTime"), int_attr(m, "ExecTime"), channel_attr(m, "Sender")};
}

Message AwardOp::to_message() const {
  Message m("AwardOp");
  m.set("ID", id).set("OpID", op_id).set("StartTime", start.seconds).set("Sender", sender.to_string());
  if (!order_id.empty()) m.set("OrderID", order_id);
  if (hold) m.set("Hold", "true");
  return m;
}

AwardOp AwardOp::from(Message const& m) {
  if (m.type_name != "AwardOp") throw Error(Errc::SchemaViolation, "expected AwardOp");
  validate(m);
  AwardOp a;
  a.id = m.at("ID");
  a.op_id = m.at("OpID");
  a.start = epoch_attr(m, "StartTime");
  a.sender = channel_attr(m, "Sender");
  if (auto o = m.get("OrderID")) a.order_id = std::string(*o);
  if (m.has("Hold")) a.hold = bool_attr(m, "Hold");
  return a;
}

Message ConfirmOp::to_message() const {
  Message m("ConfirmOp");
  m.set("ID", id).set("OpID", op_id).set("Accepted", bool_text(accepted));
  return m;
}

ConfirmOp ConfirmOp::from(Message const& m) {
  if (m.type_name != "ConfirmOp") throw Error(Errc::SchemaViolation, "expected ConfirmOp");
  validate(m);
  return {m.at("ID"), m.at("OpID"), bool_attr(m, "Accepted")};
}

}  // namespace hms::proto
