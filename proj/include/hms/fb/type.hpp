#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hms/fb/value.hpp"

namespace hms::fb {

class BlockContext;

struct EventPort {
  std::string name;
  std::vector<std::string> with;  // associated data ports on the same side
};

struct DataPort {
  std::string name;
  ValueKind kind = ValueKind::Text;
  std::optional<Value> initial;  // falls back to default_value(kind)
};

/// Per-instance behavior of service-interface blocks. Invoked only from the
/// owning resource's dispatch (on_event) or management commands (create/delete).
class Behavior {
 public:
  virtual ~Behavior() = default;
  virtual void on_event(BlockContext& ctx, std::string_view event_input) = 0;
  virtual void on_create(BlockContext&) {}
  virtual void on_delete(BlockContext&) {}
};

using ParamMap = std::map<std::string, Value, std::less<>>;

/// Stateless behavior keyed by the triggering event-input name.
struct Basic {
  std::function<void(BlockContext&, std::string_view)> callback;
};

/// Binding to something outside the network; one Behavior per instance.
struct ServiceInterface {
  std::function<std::unique_ptr<Behavior>(BlockContext&)> factory;
};

/// Internal network, flattened into the hosting resource on creation:
/// members become instances "<id>.<member>", interface ports resolve to the
/// member ports they are mapped to.
struct Composite {
  struct Member {
    std::string id;
    std::string type;
    ParamMap params;
  };
  struct Link {
    std::string source;  // "member.port"
    std::string target;  // "member.port"
  };
  struct InputMap {
    std::string port;                  // composite event or data input
    std::vector<std::string> targets;  // "member.port", fan-out allowed
  };
  struct OutputMap {
    std::string port;    // composite event or data output
    std::string source;  // "member.port"
  };

  std::vector<Member> members;
  std::vector<Link> links;
  std::vector<InputMap> inputs;
  std::vector<OutputMap> outputs;
};

struct FBTypeDef {
  std::string name;
  std::vector<EventPort> event_inputs;
  std::vector<EventPort> event_outputs;
  std::vector<DataPort> data_inputs;
  std::vector<DataPort> data_outputs;
  std::variant<Basic, Composite, ServiceInterface> kind;

  EventPort const* event_input(std::string_view n) const noexcept;
  EventPort const* event_output(std::string_view n) const noexcept;
  DataPort const* data_input(std::string_view n) const noexcept;
  DataPort const* data_output(std::string_view n) const noexcept;

  bool is_composite() const noexcept { return std::holds_alternative<Composite>(kind); }
};

using TypeId = std::size_t;

/// Immutable-after-registration type library shared by all devices of a system.
class TypeRegistry {
 public:
  /// Throws DuplicateType, or InvalidType when port names clash, an
  /// association names an undeclared data port, or a composite refers to
  /// unknown member types or ports.
  TypeId register_type(FBTypeDef def);

  std::shared_ptr<FBTypeDef const> find(std::string_view name) const noexcept;
  std::shared_ptr<FBTypeDef const> get(std::string_view name) const;  // throws UnknownType
  std::shared_ptr<FBTypeDef const> get(TypeId id) const;
  std::optional<TypeId> id_of(std::string_view name) const noexcept;
  std::size_t size() const noexcept { return types_.size(); }

 private:
  std::vector<std::shared_ptr<FBTypeDef const>> types_;
  std::map<std::string, TypeId, std::less<>> by_name_;
};

/// Splits "instance.port" at the last dot.
std::pair<std::string, std::string> split_endpoint(std::string_view endpoint);

}  // namespace hms::fb
