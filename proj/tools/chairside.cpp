#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "chairside/evaluation.hpp"
#include "chairside/remote_server.hpp"
#include "chairside/runner.hpp"
#include "chairside/scenario.hpp"

namespace fs = std::filesystem;
using namespace chairside;
using nlohmann::json;

namespace {

std::atomic<bool> g_stop{false};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

harness::ScenarioConfig load(const std::string& path, std::optional<std::uint64_t> seed) {
  auto config = path.empty() ? harness::ScenarioConfig{} : harness::load_scenario(path);
  if (seed) config.seed = *seed;
  return config;
}

void write_outputs(const fs::path& out, const harness::RunResult& result) {
  fs::create_directories(out);
  write_file(out / "metrics.json", harness::to_json(result.metrics).dump(2) + "\n");
  write_file(out / "metrics.csv", harness::to_csv(result.metrics));
  std::ostringstream log;
  for (const auto& line : result.log) log << line << '\n';
  write_file(out / "run.log", log.str());
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

std::set<std::string> read_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read token file " + path);
  std::set<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty() && line.front() != '#') tokens.insert(line);
  }
  if (tokens.empty()) throw std::runtime_error("token file " + path + " has no tokens");
  return tokens;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chairside: shared-autonomy companion robot simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  bool trace = false;

  auto* run = app.add_subcommand("run", "Run one scenario and write metrics");
  run->add_option("--config", config_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--trace", trace, "Also write trace.jsonl for replay");

  harness::SweepOptions sweep_opts;
  std::string modes_text = "behind,right,left";
  auto* sweep = app.add_subcommand("sweep", "Follow-success table over speeds, modes and seeds");
  sweep->add_option("--config", config_path, "Template scenario JSON")->check(CLI::ExistingFile);
  sweep->add_option("--speeds", sweep_opts.speeds, "Wheelchair speeds (m/s)")->delimiter(',');
  sweep->add_option("--modes", modes_text, "Comma-separated follow modes");
  sweep->add_option("--seeds", sweep_opts.seeds, "Episodes per cell")->check(CLI::PositiveNumber);
  sweep->add_option("--base-seed", sweep_opts.base_seed, "Seed family");
  sweep->add_option("--threads", sweep_opts.threads, "Worker threads (0 = all cores)");
  sweep->add_flag("--turn", sweep_opts.turn, "Path with one 45 degree turn");
  sweep->add_option("--out", out_dir, "Output directory");

  std::string trace_path;
  auto* case_study = app.add_subcommand("case-study", "Run a chair-moving scenario and score its phases");
  case_study->add_option("--config", config_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  case_study->add_option("--seed", seed, "Override the scenario seed");
  case_study->add_option("--out", out_dir, "Output directory");

  auto* replay = app.add_subcommand("replay", "Re-run a recorded trace and check it reproduces");
  replay->add_option("trace", trace_path, "trace.jsonl")->required()->check(CLI::ExistingFile);
  replay->add_option("--out", out_dir, "Write replayed metrics.json here");

  std::string bind = env_or("CHAIRSIDE_BIND", "127.0.0.1");
  int port = std::atoi(env_or("CHAIRSIDE_PORT", "8765").c_str());
  std::string token_file = env_or("CHAIRSIDE_TOKEN_FILE", "");
  double rate = 1.0;
  double broadcast_hz = 0.0;
  bool request_remote = false;
  auto* serve = app.add_subcommand("serve", "Run a scenario in real time with the remote-assist service");
  serve->add_option("--config", config_path, "Scenario JSON")->check(CLI::ExistingFile);
  serve->add_option("--bind", bind, "Bind address (env CHAIRSIDE_BIND)");
  serve->add_option("--port", port, "TCP port, 0 for any (env CHAIRSIDE_PORT)")->check(CLI::Range(0, 65535));
  serve->add_option("--token-file", token_file, "One accepted token per line (env CHAIRSIDE_TOKEN_FILE)");
  serve->add_option("--rate", rate, "Simulated seconds per wall second")->check(CLI::PositiveNumber);
  serve->add_option("--broadcast-hz", broadcast_hz, "State update rate, overrides the scenario")
      ->check(CLI::PositiveNumber);
  serve->add_flag("--request-remote", request_remote, "Enter remote assistance at start");
  serve->add_option("--out", out_dir, "Write metrics here when the run ends");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto config = load(config_path, seed);
      const auto result = harness::run_scenario(config, trace);
      write_outputs(out_dir, result);
      if (trace) {
        std::ofstream t(fs::path(out_dir) / "trace.jsonl");
        harness::write_trace(t, config, result.trace);
      }
      std::cout << "follow_success=" << (result.metrics.follow_success() ? "true" : "false")
                << " final_state=" << result.metrics.final_state << " steps=" << result.metrics.steps << '\n';
      return 0;
    }

    if (*sweep) {
      sweep_opts.modes.clear();
      std::stringstream ss(modes_text);
      for (std::string m; std::getline(ss, m, ',');) {
        const auto mode = switching::parse_follow_mode(m);
        if (!mode) throw harness::ConfigError("--modes", "unknown mode '" + m + "'");
        sweep_opts.modes.push_back(*mode);
      }
      const auto base = load(config_path, std::nullopt);
      const auto result = harness::sweep_following(base, sweep_opts);
      fs::create_directories(out_dir);
      const std::string table = harness::sweep_table_csv(result, sweep_opts);
      write_file(fs::path(out_dir) / "table.csv", table);
      write_file(fs::path(out_dir) / "episodes.csv", harness::sweep_episodes_csv(result));
      std::cout << table;
      return 0;
    }

    if (*case_study) {
      const auto config = load(config_path, seed);
      const auto result = harness::run_scenario(config, true);
      write_outputs(out_dir, result);
      std::ofstream t(fs::path(out_dir) / "trace.jsonl");
      harness::write_trace(t, config, result.trace);
      const auto report = harness::evaluate_case_study(result.metrics);
      write_file(fs::path(out_dir) / "case_study.json", harness::to_json(report).dump(2) + "\n");
      for (const auto& p : report.phases) {
        std::cout << p.name << ": " << (p.passed ? "ok" : "FAILED") << (p.detail.empty() ? "" : " (" + p.detail + ")")
                  << '\n';
      }
      if (report.completion_time) std::cout << "completion_time=" << *report.completion_time << '\n';
      return report.passed ? 0 : 1;
    }

    if (*replay) {
      std::ifstream in(trace_path);
      const auto trace_data = harness::read_trace(in);
      const auto metrics = harness::replay(trace_data);
      if (replay->count("--out")) {
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / "metrics.json", harness::to_json(metrics).dump(2) + "\n");
      }
      std::cout << "replay ok: " << metrics.steps << " steps, final_state=" << metrics.final_state << '\n';
      return 0;
    }

    if (*serve) {
      auto config = load(config_path, std::nullopt);
      if (broadcast_hz > 0.0) config.broadcast_period = 1.0 / broadcast_hz;
      remote::GatewayConfig gc;
      if (!token_file.empty()) {
        gc.tokens = read_tokens(token_file);
      } else {
        gc.tokens.insert(config.remote.tokens.begin(), config.remote.tokens.end());
      }
      remote::RemoteGateway gateway(gc);
      harness::Simulation sim(config, &gateway);
      remote::RemoteServer server(gateway, bind, static_cast<std::uint16_t>(port));
      server.start();
      std::signal(SIGINT, [](int) { g_stop = true; });
      std::signal(SIGTERM, [](int) { g_stop = true; });
      std::cout << "listening on " << bind << ':' << server.port() << std::endl;
      if (request_remote) sim.enqueue(fsm::Event::spoken(fsm::Keyword::Help));

      using clock = std::chrono::steady_clock;
      const auto period = std::chrono::duration<double>(config.dt / rate);
      auto next = clock::now();
      while (!sim.finished() && !g_stop) {
        sim.step();
        next += std::chrono::duration_cast<clock::duration>(period);
        std::this_thread::sleep_until(next);
      }
      server.stop();
      const auto result = sim.finish();
      if (serve->count("--out")) write_outputs(out_dir, result);
      std::cout << "final_state=" << result.metrics.final_state << '\n';
      return 0;
    }
  } catch (const harness::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
