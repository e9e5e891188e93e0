// cascade_cli: generate | ablate | bench | serve
#include <cstdio>
#include <csignal>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "cascade/core/errors.h"
#include "cascade/executor/bench.h"
#include "cascade/gateway/server.h"
#include "cascade/interactive/session.h"
#include "cascade/metrics/fps.h"

namespace {

using namespace cascade;

constexpr int kExitOk = 0;
constexpr int kExitUser = 1;
constexpr int kExitInternal = 2;

struct Common {
  std::string config_path;
  std::map<std::string, std::string> fields;
  std::uint64_t seed = 0;
  std::uint64_t weights_seed = 0;
  std::string prompt = "a red fox running through snow";
};

void add_common(CLI::App& cmd, Common& c) {
  cmd.add_option("--config", c.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd.add_option("--seed", c.seed, "noise seed");
  cmd.add_option("--weights-seed", c.weights_seed, "model weight seed");
  cmd.add_option("--prompt", c.prompt, "initial prompt");
  for (const auto& key : core::config_keys()) {
    cmd.add_option_function<std::string>(
        "--" + key, [&c, key](const std::string& v) { c.fields[key] = v; }, "config field " + key);
  }
}

// defaults < config file < CASCADE_* environment < flags
core::CascadeConfig resolve(const Common& c) {
  core::CascadeConfig config = c.config_path.empty() ? core::CascadeConfig{} : core::load_config(c.config_path);
  core::apply_env_overrides(config);
  for (const auto& [k, v] : c.fields) core::set_config_field(config, k, v);
  config.validate();
  return config;
}

std::uint64_t output_hash(const std::vector<core::Matrix>& blocks) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& m : blocks) {
    for (double v : m.data()) {
      unsigned char bytes[sizeof v];
      std::memcpy(bytes, &v, sizeof v);
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

// "<block>:<mode>:<prompt>"
interactive::ScheduledSwitch parse_switch(const std::string& text) {
  const auto a = text.find(':');
  const auto b = a == std::string::npos ? a : text.find(':', a + 1);
  if (b == std::string::npos) throw core::InvalidInput("--switch expects <block>:<mode>:<prompt>, got '" + text + "'");
  interactive::ScheduledSwitch s;
  try {
    s.at_block = std::stoi(text.substr(0, a));
  } catch (const std::exception&) {
    throw core::InvalidInput("--switch block must be an integer, got '" + text.substr(0, a) + "'");
  }
  s.mode = core::parse_switch_mode(text.substr(a + 1, b - a - 1));
  s.prompt = text.substr(b + 1);
  return s;
}

std::vector<int> parse_workers(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw core::InvalidInput("bad worker count '" + item + "'");
    }
  }
  if (out.empty()) throw core::InvalidInput("worker list is empty");
  return out;
}

gateway::Server* g_server = nullptr;
void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block cascading rollout engine"};
  app.require_subcommand(1);

  Common gen_opts, abl_opts, bench_opts, serve_opts;

  auto* gen = app.add_subcommand("generate", "run one session");
  add_common(*gen, gen_opts);
  std::vector<std::string> switches;
  std::string trace_path, fps_csv;
  gen->add_option("--switch", switches, "prompt switch <block>:<cascade|recache>:<prompt>");
  gen->add_option("--trace", trace_path, "json-lines trace output");
  gen->add_option("--fps-csv", fps_csv, "instantaneous FPS CSV output");

  auto* abl = app.add_subcommand("ablate", "offset x attention mode x worker grid");
  add_common(*abl, abl_opts);
  std::string abl_workers = "1,5";
  std::string abl_out;
  abl->add_option("--worker-list", abl_workers, "comma-separated worker counts");
  abl->add_option("--out-dir", abl_out, "directory for per-run FPS curve CSVs");

  auto* bench = app.add_subcommand("bench", "modeled and wall-clock speedup report");
  add_common(*bench, bench_opts);
  int bench_blocks = 40;
  std::string bench_workers = "1,2,5";
  bench->add_option("--blocks", bench_blocks, "blocks per run");
  bench->add_option("--worker-list", bench_workers, "comma-separated worker counts");

  auto* serve = app.add_subcommand("serve", "HTTP session service");
  add_common(*serve, serve_opts);
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--host", host);
  serve->add_option("--port", port);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUser;
  }

  try {
    if (*gen) {
      const auto config = resolve(gen_opts);
      std::vector<interactive::ScheduledSwitch> plan;
      for (const auto& s : switches) plan.push_back(parse_switch(s));
      const auto run = interactive::run_interactive(config, gen_opts.prompt, {gen_opts.seed, gen_opts.weights_seed}, plan);
      const auto fps = metrics::instantaneous_fps(run.trace);
      if (!trace_path.empty()) metrics::export_trace(run.trace, trace_path, metrics::TraceFormat::json_lines);
      if (!fps_csv.empty()) metrics::write_fps_csv(fps, fps_csv);
      std::printf("blocks: %zu\niterations: %zu\n", run.outputs.size(), run.trace.iterations());
      if (static_cast<int>(fps.size()) >= metrics::kStreamingFpsMinBlocks) {
        std::printf("streaming_fps: %.6f\n", metrics::streaming_fps(fps));
      }
      for (const auto& s : run.switches) {
        std::printf("switch: block %d mode %s extra_passes %d stall %.6f\n", s.effective_block, core::to_string(s.mode),
                    s.extra_passes, s.stall_time);
      }
      std::printf("output_hash: %016llx\n", static_cast<unsigned long long>(output_hash(run.outputs)));
    } else if (*abl) {
      const auto config = resolve(abl_opts);
      const auto rows = executor::ablation_grid(config, parse_workers(abl_workers), {abl_opts.seed, abl_opts.weights_seed});
      std::cout << executor::ablation_csv(rows);
      if (!abl_out.empty()) {
        std::filesystem::create_directories(abl_out);
        for (const auto& r : rows) {
          const auto name = "fps_o" + std::to_string(r.offset) + "_" + core::to_string(r.mode) + "_g" +
                            std::to_string(r.workers) + ".csv";
          metrics::write_fps_csv(r.fps, std::filesystem::path(abl_out) / name);
        }
      }
    } else if (*bench) {
      const auto config = resolve(bench_opts);
      const auto report = executor::speedup_report(config, bench_blocks, parse_workers(bench_workers),
                                                   {bench_opts.seed, bench_opts.weights_seed});
      std::cout << executor::speedup_csv(report);
      for (const auto& r : report.rows) std::printf("G=%d modeled speedup %.2fx\n", r.workers, r.modeled_speedup);
    } else if (*serve) {
      const auto config = resolve(serve_opts);
      gateway::Server server(config);
      const int bound = server.bind(host, port);
      if (bound < 0) {
        std::fprintf(stderr, "cannot bind %s:%d\n", host.c_str(), port);
        return kExitUser;
      }
      std::printf("listening on %s:%d\n", host.c_str(), bound);
      std::fflush(stdout);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.listen();
      g_server = nullptr;
    }
  } catch (const core::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUser;
  } catch (const core::InvalidInput& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUser;
  } catch (const core::InvalidSchedule& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUser;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
  return kExitOk;
}
