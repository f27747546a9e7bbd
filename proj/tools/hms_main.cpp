#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <thread>

#include "hms/error.hpp"
#include "hms/gateway/server.hpp"
#include "hms/gateway/system.hpp"

using namespace hms;

namespace {

struct Args {
  std::string config;
  std::string scenario;
  bool headless = false;
  double speed = 0;
  std::uint64_t seed = 1;
  std::string http = "127.0.0.1:8080";
  std::string transport = "inproc";
  std::string trace;
};

int serve(gateway::System& system, std::string const& listen) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  gateway::Server server(system, listen);
  std::cout << "listening on http://" << listen.substr(0, listen.rfind(':')) << ":" << server.port() << std::endl;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    system.stop();
  });
  system.serve();
  server.stop();
  waiter.join();
  return 0;
}

int run(Args const& a) {
  gateway::RunOptions opts;
  opts.transport = msg::transport_from(a.transport);
  opts.seed = a.seed;
  opts.speed = a.speed;
  if (a.headless) {
    if (a.scenario.empty()) throw Error(Errc::ConfigError, "--headless needs --scenario");
    opts.trace = a.trace.empty() ? std::filesystem::path("trace.jsonl") : std::filesystem::path(a.trace);
  } else if (!a.trace.empty()) {
    opts.trace = a.trace;
  }

  gateway::System system(gateway::load_system_config(a.config), opts);
  std::vector<sim::ScenarioEvent> scenario;
  if (!a.scenario.empty()) scenario = sim::load_scenario(a.scenario);
  system.boot();
  system.schedule(scenario);

  if (!a.headless) return serve(system, a.http);
  auto report = system.run();
  std::cout << report.summary() << std::endl;
  return report.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Holonic manufacturing execution system"};
  app.require_subcommand(1);
  Args a;
  auto* cmd = app.add_subcommand("run", "Boot a system from its config");
  cmd->add_option("--config", a.config, "System config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--scenario", a.scenario, "Scenario file")->check(CLI::ExistingFile);
  cmd->add_flag("--headless", a.headless, "Run the scenario to quiescence and exit");
  cmd->add_option("--speed", a.speed, "Simulated seconds per wall second, 0 = unpaced")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", a.seed, "Executor seed");
  cmd->add_option("--http", a.http, "Listen address host:port");
  cmd->add_option("--transport", a.transport, "inproc | udp")->check(CLI::IsMember({"inproc", "udp"}));
  cmd->add_option("--trace", a.trace, "Trace file (JSON lines); headless default trace.jsonl");

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const& e) {
    auto code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    return run(a);
  } catch (Error const& e) {
    std::cerr << "hms: " << e.what() << std::endl;
    return e.code() == Errc::ConfigError || e.code() == Errc::BindFailure ? 2 : 1;
  } catch (std::exception const& e) {
    std::cerr << "hms: " << e.what() << std::endl;
    return 2;
  }
}
