#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "hms/fb/type.hpp"
#include "hms/fb/value.hpp"

namespace hms::fb {

class Resource;

inline constexpr std::size_t kDefaultMaxSteps = 100000;

enum class ConnectionKind { Event, Data };

struct Endpoint {
  std::string instance;
  std::string port;

  std::string to_string() const { return instance + "." + port; }
  bool operator==(Endpoint const&) const = default;
};

/// A flattened connection between two concrete (non-composite) instances.
struct Connection {
  ConnectionKind kind;
  Endpoint source;
  Endpoint target;

  bool operator==(Connection const&) const = default;
};

/// One record of the per-resource invocation trace.
struct Invocation {
  std::string instance;
  std::string event;
  bool operator==(Invocation const&) const = default;
};

/// Management commands, IEC 61499 style. Each takes effect between dispatch
/// steps: commands issued from inside a behavior are deferred until the
/// current delivery finishes.
struct CreateInstance {
  std::string id;
  std::string type;
  ParamMap params;
};
struct DeleteInstance {
  std::string id;
};
struct CreateConnection {
  std::string source;  // "instance.port"
  std::string target;
};
struct DeleteConnection {
  std::string source;
  std::string target;
};
using MgmtCommand = std::variant<CreateInstance, DeleteInstance, CreateConnection, DeleteConnection>;

struct MgmtAck {
  bool deferred = false;
};

/// The view a behavior gets of its own instance while it runs.
class BlockContext {
 public:
  BlockContext(Resource& resource, std::string instance) : resource_(&resource), instance_(std::move(instance)) {}

  std::string const& instance_id() const noexcept { return instance_; }
  Resource& resource() const noexcept { return *resource_; }

  Value const& input(std::string_view port) const;
  std::string const& text(std::string_view port) const;
  std::int64_t integer(std::string_view port) const;
  void set_output(std::string_view port, Value v);
  void emit(std::string_view event_output);

 private:
  Resource* resource_;
  std::string instance_;
};

/// Container of a function-block network with a single FIFO of pending
/// event deliveries.
class Resource {
 public:
  Resource(std::string name, TypeRegistry const& types);
  ~Resource();
  Resource(Resource const&) = delete;
  Resource& operator=(Resource const&) = delete;

  std::string const& name() const noexcept { return name_; }

  // ---- management -----------------------------------------------------------

  MgmtAck mgmt(MgmtCommand const& command);
  void create_instance(std::string const& id, std::string_view type, ParamMap const& params = {});
  void delete_instance(std::string const& id);
  void connect(std::string_view source, std::string_view target);
  void disconnect(std::string_view source, std::string_view target);

  /// Errors raised by deferred management commands, oldest first.
  std::vector<std::string> const& deferred_errors() const noexcept { return deferred_errors_; }
  /// Exceptions escaping behaviors during dispatch; the delivery is consumed.
  std::vector<std::string> const& behavior_errors() const noexcept { return behavior_errors_; }

  // ---- execution ------------------------------------------------------------

  /// Enqueues one delivery per event connection leaving `event_output`, each
  /// carrying the values the associated data outputs have right now.
  void emit(std::string_view instance, std::string_view event_output);
  /// External stimulus: writes data outputs, then emits.
  void emit_external(std::string_view instance, std::string_view event_output,
                     std::vector<std::pair<std::string, Value>> const& outputs = {});
  /// Enqueues a delivery straight to an event input (timers, tests).
  void inject(std::string_view instance, std::string_view event_input,
              std::vector<std::pair<std::string, Value>> const& inputs = {});

  std::size_t dispatch_step();
  /// Throws StepBudgetExceeded when the queue is still non-empty after `max_steps`.
  std::size_t run_until_quiescent(std::size_t max_steps = kDefaultMaxSteps);
  std::size_t pending() const noexcept { return queue_.size(); }
  bool dispatching() const noexcept { return dispatching_; }
  std::uint64_t dropped_deliveries() const noexcept { return dropped_; }

  // ---- inspection -----------------------------------------------------------

  bool has_instance(std::string_view id) const noexcept;
  std::vector<std::string> instance_ids() const;  // concrete instances only, sorted
  std::vector<std::string> composite_ids() const;
  std::shared_ptr<FBTypeDef const> type_of(std::string_view id) const;
  Value const& data_input(std::string_view instance, std::string_view port) const;
  Value const& data_output(std::string_view instance, std::string_view port) const;
  void set_data_output(std::string_view instance, std::string_view port, Value v);
  Behavior* behavior(std::string_view instance) const;
  std::vector<Connection> const& connections() const noexcept { return connections_; }
  /// Every connection endpoint refers to a live concrete instance and no data
  /// input has more than one source.
  bool check_integrity() const;

  void enable_trace(bool on) { tracing_ = on; }
  std::vector<Invocation> const& trace() const noexcept { return trace_; }
  void clear_trace() { trace_.clear(); }

 private:
  struct Instance {
    std::uint64_t serial = 0;
    std::shared_ptr<FBTypeDef const> type;
    std::map<std::string, Value, std::less<>> inputs;
    std::map<std::string, Value, std::less<>> outputs;
    std::unique_ptr<Behavior> behavior;
  };
  struct CompositeRecord {
    std::shared_ptr<FBTypeDef const> type;
    std::vector<std::string> members;  // full instance ids, creation order
  };
  struct Delivery {
    std::string target;
    std::uint64_t serial;
    std::string event_input;
    std::vector<std::pair<std::string, Value>> samples;
  };

  friend class BlockContext;

  Instance& instance(std::string_view id);
  Instance const& instance(std::string_view id) const;
  void apply(MgmtCommand const& command);
  void create_concrete(std::string const& id, std::shared_ptr<FBTypeDef const> type, ParamMap const& params);
  void create_composite(std::string const& id, std::shared_ptr<FBTypeDef const> type, ParamMap const& params);
  void delete_concrete(std::string const& id);
  Endpoint resolve_source(std::string_view instance, std::string_view port, ConnectionKind& kind) const;
  std::vector<Endpoint> resolve_targets(std::string_view instance, std::string_view port, ConnectionKind& kind) const;
  std::vector<Connection> resolve_connection(std::string_view source, std::string_view target) const;
  void add_connections(std::vector<Connection> const& edges);

  std::string name_;
  TypeRegistry const& types_;
  std::map<std::string, Instance, std::less<>> instances_;
  std::map<std::string, CompositeRecord, std::less<>> composites_;
  std::vector<Connection> connections_;
  std::deque<Delivery> queue_;
  std::vector<MgmtCommand> deferred_;
  std::vector<std::string> deferred_errors_;
  std::vector<std::string> behavior_errors_;
  std::vector<Invocation> trace_;
  std::uint64_t next_serial_ = 1;
  std::uint64_t dropped_ = 0;
  bool dispatching_ = false;
  bool tracing_ = false;
};

}  // namespace hms::fb
