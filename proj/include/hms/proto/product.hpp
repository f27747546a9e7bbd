#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hms/proto/message.hpp"
#include "hms/proto/time.hpp"

namespace hms::proto {

enum class ProductKind { Simple, Composite };

struct ProductService {
  int index = 0;
  std::string serv_id;
  std::vector<std::string> components;  // Cmp1..CmpN, empty for simple products

  bool operator==(ProductService const&) const = default;
};

/// A product processing document: `<Product Name=".." Type="Simple|Composite">`
/// with one `<Service Index=".." ServID=".." [NrCmp=".." Cmp1=".." ...]/>`
/// per processing step.
struct ProductSpec {
  std::string name;
  ProductKind kind = ProductKind::Simple;
  std::vector<ProductService> services;

  Message to_message() const;
  bool operator==(ProductSpec const&) const = default;
};

/// Throws MalformedXml or SchemaViolation (bad Index sequence, NrCmp
/// mismatch, components on a simple product).
ProductSpec parse_product(std::string_view text);
ProductSpec product_from_message(Message const& m);

enum class ServiceKind {
  Place,  // intermediate product: components onto one semifinished board
  Join,   // final product: two intermediates joined by connector pairs
};

/// What a resource holon needs to know to price and run a service.
struct ServiceDef {
  std::string serv_id;
  Seconds base_exec = 0;
  int pick_place = 0;  // components placed, i.e. magazine consumption
  ServiceKind kind = ServiceKind::Place;
  bool resident_required = true;  // runs from a robot-memory configuration slot

  /// Number of equal-duration execution phases: take board / place / return
  /// for Place, one per connector pair for Join.
  int phases() const { return kind == ServiceKind::Place ? 3 : 2; }

  Message to_message() const;
  bool operator==(ServiceDef const&) const = default;
};

/// Parses `<ServiceDef ServID=".." ExecTime=".." PickPlace=".." [Kind="Place|Join"] [Resident="true|false"]/>`.
ServiceDef service_from_message(Message const& m);
ServiceDef parse_service(std::string_view text);
/// A `<Services>` document with ServiceDef children, or a single ServiceDef.
std::vector<ServiceDef> parse_services(std::string_view text);

}  // namespace hms::proto
