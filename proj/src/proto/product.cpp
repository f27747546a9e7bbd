#include "hms/proto/product.hpp"

#include "hms/error.hpp"
#include "hms/proto/schema.hpp"
#include "hms/proto/xml.hpp"

namespace hms::proto {

namespace {

[[noreturn]] void violation(std::string const& what) { throw Error(Errc::SchemaViolation, what); }

std::int64_t int_or_violation(Message const& m, std::string_view name) {
  auto v = m.get(name);
  if (!v) violation(m.type_name + " lacks " + std::string(name));
  try {
    return int_attr(m, name);
  } catch (Error const&) {
    violation(m.type_name + "." + std::string(name) + " is not an integer");
  }
}

}  // namespace

ProductSpec product_from_message(Message const& m) {
  if (m.type_name != "Product") violation("expected <Product>, got <" + m.type_name + ">");
  ProductSpec spec;
  auto name = m.get("Name");
  auto type = m.get("Type");
  if (!name || name->empty()) violation("Product lacks Name");
  if (!type) violation("Product lacks Type");
  spec.name = std::string(*name);
  if (*type == "Simple") spec.kind = ProductKind::Simple;
  else if (*type == "Composite") spec.kind = ProductKind::Composite;
  else violation("unknown product Type '" + std::string(*type) + "'");

  int expected_index = 1;
  for (auto const& child : m.children) {
    if (child.type_name != "Service") violation("unexpected <" + child.type_name + "> in Product");
    ProductService svc;
    svc.index = static_cast<int>(int_or_violation(child, "Index"));
    if (svc.index != expected_index++) violation("Service Index values must be 1..n in order");
    auto serv = child.get("ServID");
    if (!serv || serv->empty()) violation("Service lacks ServID");
    svc.serv_id = std::string(*serv);

    if (child.has("NrCmp")) {
      auto n = int_or_violation(child, "NrCmp");
      if (n < 1 || n > 64) violation("NrCmp out of range");
      for (int i = 1; i <= n; ++i) {
        auto cmp = child.get("Cmp" + std::to_string(i));
        if (!cmp || cmp->empty()) violation("NrCmp=" + std::to_string(n) + " but Cmp" + std::to_string(i) + " missing");
        svc.components.emplace_back(*cmp);
      }
      if (child.has("Cmp" + std::to_string(n + 1))) violation("more Cmp attributes than NrCmp");
    } else if (child.has("Cmp1")) {
      violation("Cmp attributes without NrCmp");
    }
    spec.services.push_back(std::move(svc));
  }
  if (spec.services.empty()) violation("Product declares no services");

  bool any_components = false;
  for (auto const& s : spec.services) any_components |= !s.components.empty();
  if (spec.kind == ProductKind::Simple && any_components) violation("simple product declares components");
  if (spec.kind == ProductKind::Composite && !any_components) violation("composite product declares no components");
  return spec;
}

ProductSpec parse_product(std::string_view text) { return product_from_message(decode(text)); }

Message ProductSpec::to_message() const {
  Message m("Product");
  m.set("Name", name).set("Type", kind == ProductKind::Simple ? "Simple" : "Composite");
  for (auto const& s : services) {
    Message child("Service");
    child.set("Index", s.index).set("ServID", s.serv_id);
    if (!s.components.empty()) {
      child.set("NrCmp", static_cast<std::int64_t>(s.components.size()));
      for (std::size_t i = 0; i < s.components.size(); ++i) child.set("Cmp" + std::to_string(i + 1), s.components[i]);
    }
    m.add(std::move(child));
  }
  return m;
}

ServiceDef service_from_message(Message const& m) {
  if (m.type_name != "ServiceDef") violation("expected <ServiceDef>, got <" + m.type_name + ">");
  ServiceDef def;
  auto id = m.get("ServID");
  if (!id || id->empty()) violation("ServiceDef lacks ServID");
  def.serv_id = std::string(*id);
  def.base_exec = int_or_violation(m, "ExecTime");
  if (def.base_exec <= 0) violation("ExecTime must be positive");
  def.pick_place = static_cast<int>(m.has("PickPlace") ? int_or_violation(m, "PickPlace") : 0);
  if (def.pick_place < 0) violation("PickPlace must be non-negative");
  auto kind = m.get("Kind").value_or("Place");
  if (kind == "Place") def.kind = ServiceKind::Place;
  else if (kind == "Join") def.kind = ServiceKind::Join;
  else violation("unknown service Kind '" + std::string(kind) + "'");
  if (m.has("Resident")) {
    auto r = *m.get("Resident");
    if (r != "true" && r != "false") violation("Resident must be true or false");
    def.resident_required = r == "true";
  }
  return def;
}

ServiceDef parse_service(std::string_view text) { return service_from_message(decode(text)); }

std::vector<ServiceDef> parse_services(std::string_view text) {
  auto doc = decode(text);
  if (doc.type_name == "ServiceDef") return {service_from_message(doc)};
  if (doc.type_name != "Services") violation("expected <Services> or <ServiceDef>");
  std::vector<ServiceDef> out;
  for (auto const& child : doc.children) out.push_back(service_from_message(child));
  return out;
}

Message ServiceDef::to_message() const {
  Message m("ServiceDef");
  m.set("ServID", serv_id).set("ExecTime", base_exec).set("PickPlace", static_cast<std::int64_t>(pick_place));
  m.set("Kind", kind == ServiceKind::Place ? "Place" : "Join");
  m.set("Resident", bool_text(resident_required));
  return m;
}

}  // namespace hms::proto
