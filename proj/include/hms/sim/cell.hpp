#pragma once

#include <deque>
#include <list>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hms/proto/product.hpp"
#include "hms/proto/time.hpp"

namespace hms::sim {

using proto::EpochTime;
using proto::Seconds;

struct CellParams {
  int magazine_capacity = 200;
  int magazine_initial = 200;
  int post_capacity = 2;  // pallets at the secondary-conveyor work post
  int initial_boards = 0;
  int robot_memory = 4;   // N
  Seconds load_time = 120;  // T_a
  std::vector<std::string> initial_resident;
  std::string layout = "L1";
};

/// Wall-clock pacing of simulated time. Speed is simulated seconds per wall
/// second, 0 meaning as fast as possible.
struct SimClock {
  EpochTime now;
  double speed = 0;

  double wall_seconds(Seconds sim) const { return speed > 0 ? static_cast<double>(sim) / speed : 0.0; }
};

/// Robot configuration memory, least recently used first out.
class RobotMemory {
 public:
  explicit RobotMemory(int capacity) : capacity_(capacity) {}

  bool contains(std::string const& serv) const;
  /// Marks as most recently used; loads (and returns the evicted service,
  /// if any) when absent.
  std::optional<std::string> use(std::string const& serv);
  std::vector<std::string> resident() const { return {order_.begin(), order_.end()}; }  // MRU first
  int capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return order_.size(); }

 private:
  int capacity_;
  std::list<std::string> order_;
};

enum class BlockReason { NoBoard, NoComponents, RobotBusy };
std::string_view to_string(BlockReason r) noexcept;

/// An awarded slot handed to the cell for execution.
struct Job {
  std::string conversation;
  std::string serv_id;
  std::string order_id;
  EpochTime start;
  EpochTime end;
  bool loaded = false;  // the slot was priced with a configuration load
  bool hold = false;    // keep the output on the post for a later join
};

enum class CellEventKind { Started, Progress, Done, Overrun, Blocked, Evicted };
std::string_view to_string(CellEventKind k) noexcept;

struct CellEvent {
  CellEventKind kind;
  EpochTime time;
  std::string conversation;
  std::string serv_id;
  std::string order_id;
  int percent = 0;
  Seconds delay = 0;
  bool loaded = false;  // Started: a loading phase precedes execution
  BlockReason reason = BlockReason::NoBoard;
  std::string evicted;
};

struct ExecutionRecord {
  std::string serv_id;
  EpochTime start;
  bool nonresident_load = false;
};

struct Counters {
  int boards_arrived = 0;
  int boards_consumed = 0;
  int components_refilled = 0;
  int components_consumed = 0;
  int intermediates_shipped = 0;
  int finals_shipped = 0;
  int overruns = 0;
};

/// Discrete-event model of the assembly cell. Jobs run one at a time in
/// queue order (by slot start); the head waits while its prerequisites are
/// missing and the lateness is reported as an overrun when it completes.
class CellSim {
 public:
  CellSim(CellParams params, std::vector<proto::ServiceDef> services, EpochTime start = EpochTime{});

  EpochTime now() const noexcept { return now_; }
  CellParams const& params() const noexcept { return params_; }

  bool knows(std::string_view serv_id) const { return services_.find(serv_id) != services_.end(); }
  void add_service(proto::ServiceDef def);
  /// Throws NoProvider for services the cell does not know.
  void enqueue(Job job);
  /// Drops a queued job; a running one is not interrupted.
  bool cancel(std::string const& conversation);

  void board_arrived();          // throws OverCapacity
  void magazine_refill(int n);   // throws OverCapacity

  /// Processes everything due up to `t` (>= now) and returns what happened.
  std::vector<CellEvent> advance_to(EpochTime t);
  std::vector<CellEvent> tick(Seconds dt);  // dt > 0
  /// Time of the next internal transition, if any is scheduled.
  std::optional<EpochTime> next_event_time() const;

  bool idle() const noexcept { return !running_ && queue_.empty(); }
  std::size_t queued() const noexcept { return queue_.size(); }
  std::optional<std::string> running() const;
  int magazine() const noexcept { return magazine_; }
  int blank_boards() const noexcept { return blank_; }
  int held_intermediates() const noexcept { return held_; }
  RobotMemory const& memory() const noexcept { return memory_; }
  Counters const& counters() const noexcept { return counters_; }
  std::vector<ExecutionRecord> const& executions() const noexcept { return executions_; }
  /// Components consumed equals magazine decrements equals the placements of
  /// every started Place service.
  bool conserved() const;

 private:
  struct Running {
    Job job;
    proto::ServiceDef def;
    bool loading = false;
    EpochTime exec_start;
    int step = 0;  // completed execution phases
    EpochTime next;
  };

  void try_start(std::vector<CellEvent>& out);
  void finish_phase(std::vector<CellEvent>& out);
  EpochTime step_end(Running const& r, int k) const;

  CellParams params_;
  std::map<std::string, proto::ServiceDef, std::less<>> services_;
  EpochTime now_;
  int magazine_;
  int blank_;
  int held_ = 0;
  RobotMemory memory_;
  std::deque<Job> queue_;
  std::optional<Running> running_;
  std::optional<BlockReason> blocked_;
  Counters counters_;
  std::vector<ExecutionRecord> executions_;
};

struct ReconfigurationReport {
  Seconds holonic = 0;
  Seconds classical = 0;
};

/// Holonic mode pays T_a only when a configuration had to be loaded.
/// Classical mode pays T_a for every execution that follows a product-type
/// switch or needs a load (once, not twice, when both apply).
ReconfigurationReport reconfiguration_report(std::vector<ExecutionRecord> const& run, Seconds load_time);

}  // namespace hms::sim
