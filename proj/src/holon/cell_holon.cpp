#include <algorithm>
#include <sstream>

#include "hms/error.hpp"
#include "hms/holon/holons.hpp"
#include "hms/proto/schema.hpp"
#include "hms/proto/xml.hpp"

namespace hms::holon {

namespace {

std::vector<std::string> split_list(std::string const& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

// ---- CellB1 -----------------------------------------------------------------

void CellB1::on_event(fb::BlockContext& ctx, std::string_view event) {
  if (event == "INIT") {
    announce(ctx);
    return;
  }
  auto m = incoming(ctx, event);
  if (!m) return;
  if (event == "RecGroupMsg" || event == "RecMsgHMI") {
    on_group(ctx, *m);
  } else if (event == "RecB2Msg") {
    if (m->type_name == "OpStarted" && m->has("Resident")) resident_ = split_list(m->at("Resident"));
    if (m->type_name == "OpFailed") cancel(ctx, m->at("ID"));
  }
}

void CellB1::on_create(fb::BlockContext& ctx) {
  inbox_ = msg::ChannelId::parse(ctx.text("INBOX"));
  std::vector<std::string> names = split_list(ctx.text("SERVICES"));
  if (names.empty())
    for (auto const& row : world_.directory.rows())
      if (row.holon_addr == inbox_) names.push_back(row.service);
  std::vector<proto::ServiceDef> defs;
  for (auto const& n : names) {
    auto it = world_.services.find(n);
    if (it == world_.services.end()) throw Error(Errc::ConfigError, "cell offers unknown service " + n);
    defs.push_back(it->second);
  }
  offered_ = names;
  proto::Seconds load_time = 120;
  if (auto const& cell = ctx.text("CELL"); !cell.empty()) {
    auto const& p = world_.cell(cell).sim->params();
    load_time = p.load_time;
    resident_ = p.initial_resident;
  }
  sched_ = std::make_unique<sched::ResourceScheduler>(inbox_, defs, load_time, [this](std::string const& s) {
    return std::find(resident_.begin(), resident_.end(), s) != resident_.end();
  });
}

void CellB1::announce(fb::BlockContext& ctx) {
  proto::Message hello("HolonCreated");
  hello.set("Holon", ctx.text("ID")).set("Kind", "Resource").set("Inbox", inbox_.to_string());
  send_hmi(ctx, hello);
  for (auto const& d : offered_) {
    proto::Message reg("RegisterService");
    reg.set("ServID", d).set("HolonAddr", inbox_.to_string());
    send_group(ctx, world_.coordinator, reg);
  }
}

void CellB1::on_group(fb::BlockContext& ctx, proto::Message const& m) {
  try {
    if (m.type_name == "GetBidForOp") {
      auto req = proto::BidRequest::from(m);
      // Services uploaded after boot are offered once the directory lists us.
      if (!sched_->offers(req.op_id)) {
        auto def = world_.services.find(req.op_id);
        auto providers = world_.directory.lookup(req.op_id);
        if (def != world_.services.end() && std::find(providers.begin(), providers.end(), inbox_) != providers.end())
          sched_->add_service(def->second);
      }
      if (auto rsp = sched_->quote(req)) send_group(ctx, req.sender, rsp->to_message());
    } else if (m.type_name == "AwardOp") {
      auto award = proto::AwardOp::from(m);
      auto confirm = sched_->award(award);
      send_group(ctx, award.sender, confirm.to_message());
      if (!confirm.accepted) return;
      auto const* slot = sched_->agenda().find(award.id);
      proto::Message exec("ExecOp");
      exec.set("ID", award.id).set("OpID", slot->serv_id);
      exec.set("StartTime", slot->start.to_string()).set("EndTime", slot->end.to_string());
      exec.set("OrderAddr", award.sender.to_string());
      if (!award.order_id.empty()) exec.set("OrderID", award.order_id);
      exec.set("Hold", proto::bool_text(slot->hold)).set("Loaded", proto::bool_text(slot->loaded));
      send_peer(ctx, exec);

      proto::Message committed("SlotCommitted");
      committed.set("Holon", ctx.text("ID")).set("ID", award.id).set("ServID", slot->serv_id);
      if (!award.order_id.empty()) committed.set("OrderID", award.order_id);
      committed.set("Start", slot->start.to_string()).set("End", slot->end.to_string());
      send_hmi(ctx, committed);
    } else if (m.type_name == "CancelOp") {
      cancel(ctx, m.at("ID"));
    }
  } catch (Error const&) {
    // Ill-formed requests get no answer; the requester times out.
  }
}

void CellB1::cancel(fb::BlockContext& ctx, std::string const& conversation) {
  auto const* slot = sched_->agenda().find(conversation);
  if (!slot) return;
  auto serv = slot->serv_id;
  sched_->cancel(conversation);
  proto::Message c("CancelOp");
  c.set("ID", conversation).set("OpID", serv);
  send_peer(ctx, c);
  proto::Message released("SlotReleased");
  released.set("Holon", ctx.text("ID")).set("ID", conversation);
  send_hmi(ctx, released);
}

// ---- CellB2 -----------------------------------------------------------------

std::vector<std::string> const& CellB2::command_sequence() {
  static std::vector<std::string> const seq{"CheckConfiguration", "ScheduleJob"};
  return seq;
}

void CellB2::on_event(fb::BlockContext& ctx, std::string_view event) {
  auto m = incoming(ctx, event);
  if (!m) return;
  if (event == "RecB1Msg") {
    if (m->type_name == "ExecOp") {
      auto conv = m->get("ID").value_or("");
      Job job{*m, std::nullopt};
      if (m->has("OrderAddr")) job.order_addr = proto::channel_attr(*m, "OrderAddr");
      jobs_[std::string(conv)] = std::move(job);
      send_command(ctx, std::string(conv));
    } else if (m->type_name == "CancelOp") {
      auto conv = m->at("ID");
      if (!jobs_.erase(conv)) return;
      proto::Message cmd("Command");
      cmd.set("Seq", ++seq_).set("Name", "CancelJob").set("ID", conv).set("OpID", m->at("OpID"));
      send_ctrl(ctx, cmd);
    }
  } else if (event == "RecCtrlMsg") {
    on_ctrl(ctx, std::move(*m));
  } else if (event == "RecGroupMsg") {
    send_hmi(ctx, *m);  // reports addressed to the cell are only monitored
  }
}

void CellB2::send_command(fb::BlockContext& ctx, std::string const& conv) {
  auto& job = jobs_.at(conv);
  auto const& e = job.exec;
  proto::Message cmd("Command");
  cmd.set("Seq", ++seq_).set("Name", command_sequence()[job.next_command]).set("ID", conv);
  for (auto attr : {"OpID", "StartTime", "EndTime", "Hold", "Loaded", "OrderID"})
    if (auto v = e.get(attr)) cmd.set(attr, std::string(*v));
  outstanding_[seq_] = conv;
  send_ctrl(ctx, cmd);
}

void CellB2::on_ctrl(fb::BlockContext& ctx, proto::Message m) {
  if (m.type_name == "CommandResult") {
    auto it = outstanding_.find(proto::int_attr(m, "Seq"));
    if (it == outstanding_.end()) return;
    auto conv = it->second;
    outstanding_.erase(it);
    auto job = jobs_.find(conv);
    if (job == jobs_.end()) return;
    auto& j = job->second;
    if (m.at("Status") == "Ok") {
      j.retried = false;
      if (++j.next_command < command_sequence().size()) send_command(ctx, conv);
      else j.queued = true;
      return;
    }
    if (!j.retried) {
      j.retried = true;
      send_command(ctx, conv);
      return;
    }
    ++failures_;
    proto::Message failed("OpFailed");
    failed.set("ID", conv).set("OpID", j.exec.at("OpID"));
    failed.set("Reason", "controller fault on " + command_sequence()[j.next_command]).set("Holon", ctx.text("ID"));
    if (j.order_addr) send_group(ctx, *j.order_addr, failed);
    send_peer(ctx, failed);
    send_hmi(ctx, failed);
    jobs_.erase(job);
    return;
  }

  static constexpr std::string_view kReports[] = {"OpStarted", "OpProgress", "OpDone", "Overrun"};
  if (std::find(std::begin(kReports), std::end(kReports), m.type_name) == std::end(kReports)) return;
  auto conv = std::string(m.get("ID").value_or(""));
  m.set("Holon", ctx.text("ID"));
  auto job = jobs_.find(conv);
  if (job != jobs_.end() && job->second.order_addr) send_group(ctx, *job->second.order_addr, m);
  if (m.type_name == "OpStarted" || m.type_name == "OpDone") send_peer(ctx, m);
  send_hmi(ctx, m);
  if (m.type_name == "OpDone" && job != jobs_.end()) jobs_.erase(job);
}

// ---- hardware-independent interface ------------------------------------------

namespace {

class ControllerInterface final : public fb::Behavior {
 public:
  explicit ControllerInterface(World& world) : world_(world) {}

  void on_create(fb::BlockContext& ctx) override {
    cell_ = ctx.text("CELL");
    auto& binding = world_.cell(cell_);
    auto* res = &ctx.resource();
    auto id = ctx.instance_id();
    binding.report = [res, id](proto::Message const& m) { res->emit_external(id, "IND", {{"RD", proto::encode(m)}}); };
  }
  void on_delete(fb::BlockContext&) override {
    if (auto it = world_.cells.find(cell_); it != world_.cells.end()) it->second.report = nullptr;
  }

  void on_event(fb::BlockContext& ctx, std::string_view event) override {
    if (event != "REQ") return;
    proto::Message cmd;
    try {
      cmd = proto::decode(ctx.text("SD"));
      proto::validate(cmd);
    } catch (Error const&) {
      return;
    }
    if (cmd.type_name != "Command") return;
    proto::Message result("CommandResult");
    result.set("Seq", cmd.at("Seq")).set("Status", execute(cmd) ? "Ok" : "Fault");
    ctx.set_output("RD", proto::encode(result));
    ctx.emit("IND");
  }

 private:
  bool execute(proto::Message const& cmd) {
    auto& binding = world_.cell(cell_);
    if (binding.pending_faults > 0) {
      --binding.pending_faults;
      return false;
    }
    auto& sim = *binding.sim;
    auto const& name = cmd.at("Name");
    auto serv = std::string(cmd.get("OpID").value_or(""));
    try {
      if (name == "CheckConfiguration") {
        if (sim.knows(serv)) return true;
        auto def = world_.services.find(serv);
        if (def == world_.services.end()) return false;
        sim.add_service(def->second);
        return true;
      }
      if (name == "ScheduleJob") {
        sim::Job job{cmd.at("ID"), serv, std::string(cmd.get("OrderID").value_or("")),
                     proto::epoch_attr(cmd, "StartTime"), proto::epoch_attr(cmd, "EndTime")};
        job.loaded = cmd.has("Loaded") && proto::bool_attr(cmd, "Loaded");
        job.hold = cmd.has("Hold") && proto::bool_attr(cmd, "Hold");
        sim.enqueue(std::move(job));
        return true;
      }
      if (name == "CancelJob") {
        sim.cancel(cmd.at("ID"));
        return true;
      }
    } catch (Error const&) {
    }
    return false;
  }

  World& world_;
  std::string cell_;
};

}  // namespace

std::unique_ptr<fb::Behavior> make_controller_interface(World& world) {
  return std::make_unique<ControllerInterface>(world);
}

}  // namespace hms::holon
