#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include <CLI11.hpp>

#include "mrnav/mission.hpp"
#include "mrnav/server.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

mrnav::Scenario load(const std::string& scenario, const std::string& config) {
  mrnav::Scenario s = mrnav::load_scenario(scenario);
  if (!config.empty()) mrnav::apply_config_file(s.config, config);
  return s;
}

int run(const std::string& scenario, const std::string& config, const std::string& policy_name, double budget,
        std::uint64_t seed, const std::string& out) {
  const auto policy = mrnav::policy_from_string(policy_name);
  if (!policy) {
    std::cerr << "unknown policy '" << policy_name << "'\n";
    return 2;
  }
  const mrnav::MissionLog log = mrnav::run_policy(load(scenario, config), *policy, budget, seed);
  std::ofstream file(out, std::ios::binary);
  if (!file) {
    std::cerr << "cannot write " << out << "\n";
    return 1;
  }
  log.write(file);
  const auto series = mrnav::explored_series(log);
  std::cout << "run " << log.run_id() << ": " << log.records().size() << " records, explored "
            << (series.empty() ? 0.0 : series.back().second) << " m^2\n";
  return 0;
}

int serve(const std::string& scenario, const std::string& config, const std::string& address, int port, int tcp_port,
          const std::string& web_root) {
  mrnav::MissionRunner runner(load(scenario, config));
  mrnav::ServerOptions opts;
  opts.address = address;
  opts.port = static_cast<unsigned short>(port);
  opts.tcp_port = tcp_port;
  opts.web_root = web_root;
  mrnav::GatewayServer server(runner, opts);
  runner.start();
  server.start();
  std::cout << "serving http://" << address << ":" << server.port() << "/ (socket /ws)";
  if (server.tcp_port() >= 0) std::cout << ", raw tcp " << server.tcp_port();
  std::cout << std::endl;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  runner.stop();
  return 0;
}

int replay(const std::string& path, bool series) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot read " << path << "\n";
    return 1;
  }
  const mrnav::MissionLog log = mrnav::MissionLog::read(in);
  std::map<std::string, std::size_t> kinds;
  for (const auto& r : log.records()) ++kinds[r.kind];
  std::cout << "runs:";
  for (const auto& id : log.run_ids()) std::cout << ' ' << id;
  std::cout << "\nduration: " << (log.empty() ? 0.0 : log.records().back().t) << " s\n";
  for (const auto& [k, n] : kinds) std::cout << "  " << k << ": " << n << "\n";
  const auto s = mrnav::explored_series(log);
  if (!s.empty()) std::cout << "explored: " << s.back().second << " m^2\n";
  if (series) {
    std::cout << "t,explored_m2\n";
    for (const auto& [t, a] : s) std::cout << t << ',' << a << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mrnav: minimap-driven drone navigation simulator"};
  app.require_subcommand(1);

  std::string scenario, config, policy = "AutonomousFrontier", out = "mission.jsonl", log_path, web_root;
  std::string address = "127.0.0.1";
  double budget = 360.0;
  std::uint64_t seed = 0;
  int port = 8080, tcp_port = -1;
  bool series = false;

  auto* run_cmd = app.add_subcommand("run", "fly a scripted mission and write its log");
  run_cmd->add_option("--scenario", scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--policy", policy, "AutonomousFrontier or TeleopRandomWalk");
  run_cmd->add_option("--budget", budget, "mission length in seconds")->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed", seed, "random seed");
  run_cmd->add_option("--out", out, "mission log path (JSON lines)");
  run_cmd->add_option("--config", config, "config overrides")->check(CLI::ExistingFile);

  auto* serve_cmd = app.add_subcommand("serve", "run the interactive mission behind the gateway");
  serve_cmd->add_option("--scenario", scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--port", port, "HTTP + browser socket port")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--tcp-port", tcp_port, "raw TCP port, -1 disables")->check(CLI::Range(-1, 65535));
  serve_cmd->add_option("--address", address, "bind address");
  serve_cmd->add_option("--web-root", web_root, "directory served over HTTP")->check(CLI::ExistingDirectory);
  serve_cmd->add_option("--config", config, "config overrides")->check(CLI::ExistingFile);

  auto* replay_cmd = app.add_subcommand("replay", "summarize a mission log");
  replay_cmd->add_option("--log", log_path, "mission log")->required()->check(CLI::ExistingFile);
  replay_cmd->add_flag("--series", series, "print the explored-area series as CSV");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return run(scenario, config, policy, budget, seed, out);
    if (*serve_cmd) return serve(scenario, config, address, port, tcp_port, web_root);
    if (*replay_cmd) return replay(log_path, series);
  } catch (const mrnav::Error& e) {
    std::cerr << e.code() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
