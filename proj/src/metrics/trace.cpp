#include "cascade/metrics/trace.h"

#include <fstream>
#include <iomanip>

#include "cascade/core/errors.h"
#include "cascade/metrics/fps.h"

namespace cascade::metrics {

using nlohmann::json;

namespace {

json matrix_json(const core::Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

core::Matrix matrix_from_json(const json& j) {
  return core::Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                      j.at("data").get<std::vector<double>>());
}

}  // namespace

json to_json(const core::SwitchEvent& e) {
  return json{{"request_iteration", e.request_iteration},
              {"effective_block", e.effective_block},
              {"mode", core::to_string(e.mode)},
              {"extra_passes", e.extra_passes},
              {"stall_time", e.stall_time},
              {"prompt", e.prompt},
              {"conditioning_id", e.conditioning_id}};
}

core::SwitchEvent switch_event_from_json(const json& j) {
  core::SwitchEvent e;
  e.request_iteration = j.at("request_iteration").get<int>();
  e.effective_block = j.at("effective_block").get<int>();
  e.mode = core::parse_switch_mode(j.at("mode").get<std::string>());
  e.extra_passes = j.at("extra_passes").get<int>();
  e.stall_time = j.at("stall_time").get<double>();
  e.prompt = j.at("prompt").get<std::string>();
  e.conditioning_id = j.at("conditioning_id").get<std::string>();
  return e;
}

json to_json(const TraceEvent& e) {
  json entries = json::array();
  for (const auto& x : e.entries) {
    entries.push_back(json{{"block", x.block},
                           {"pass", x.pass},
                           {"noise_level", x.noise_level},
                           {"worker", x.worker},
                           {"conditioning_id", x.conditioning_id},
                           {"visible_frames", x.visible_frames},
                           {"modeled_cost", x.modeled_cost}});
  }
  json pool = json::array();
  for (const auto& t : e.pool) {
    pool.push_back(json{{"block", t.block_index}, {"noise_tag", t.noise_tag}, {"conditioning_id", t.conditioning_id}, {"sink", t.sink}});
  }
  json switches = json::array();
  for (const auto& s : e.switch_events) switches.push_back(to_json(s));
  json emitted = nullptr;
  if (e.emitted) {
    emitted = json{{"block", e.emitted->block},
                   {"video_frames", e.emitted->video_frames},
                   {"emit_time", e.emitted->emit_time},
                   {"wall_emit_time", e.emitted->wall_emit_time},
                   {"latents", matrix_json(e.emitted->latents)}};
  }
  return json{{"iteration", e.iteration},     {"entries", entries},         {"wall_time", e.wall_time},
              {"modeled_time", e.modeled_time}, {"modeled_end", e.modeled_end}, {"stall_time", e.stall_time},
              {"comm_time", e.comm_time},     {"pool_blocks", e.pool_blocks}, {"pool_frames", e.pool_frames},
              {"pool", pool},                 {"emitted", emitted},         {"switch_events", switches}};
}

TraceEvent trace_event_from_json(const json& j) {
  TraceEvent e;
  e.iteration = j.at("iteration").get<int>();
  for (const auto& x : j.at("entries")) {
    e.entries.push_back(TraceEntry{x.at("block").get<int>(), x.at("pass").get<int>(), x.at("noise_level").get<double>(),
                                   x.at("worker").get<int>(), x.at("conditioning_id").get<std::string>(),
                                   x.at("visible_frames").get<int>(), x.at("modeled_cost").get<double>()});
  }
  e.wall_time = j.at("wall_time").get<double>();
  e.modeled_time = j.at("modeled_time").get<double>();
  e.modeled_end = j.at("modeled_end").get<double>();
  e.stall_time = j.at("stall_time").get<double>();
  e.comm_time = j.at("comm_time").get<double>();
  e.pool_blocks = j.at("pool_blocks").get<int>();
  e.pool_frames = j.at("pool_frames").get<int>();
  for (const auto& t : j.at("pool")) {
    e.pool.push_back(kvpool::PoolTag{t.at("block").get<int>(), t.at("noise_tag").get<double>(),
                                     t.at("conditioning_id").get<std::string>(), t.at("sink").get<bool>()});
  }
  if (const auto& em = j.at("emitted"); !em.is_null()) {
    e.emitted = Emission{em.at("block").get<int>(), em.at("video_frames").get<int>(), em.at("emit_time").get<double>(),
                         em.at("wall_emit_time").get<double>(), matrix_from_json(em.at("latents"))};
  }
  for (const auto& s : j.at("switch_events")) e.switch_events.push_back(switch_event_from_json(s));
  return e;
}

void export_trace(const Trace& trace, const std::filesystem::path& path, TraceFormat format) {
  if (format == TraceFormat::csv) return write_fps_csv(instantaneous_fps(trace), path);
  std::ofstream out(path);
  if (!out) throw core::InvalidInput("cannot write " + path.string());
  for (const auto& e : trace.events) out << to_json(e).dump() << '\n';
  if (!out) throw core::InvalidInput("failed writing " + path.string());
}

Trace import_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw core::InvalidInput("cannot read " + path.string());
  Trace trace;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    trace.events.push_back(trace_event_from_json(json::parse(line)));
  }
  return trace;
}

}  // namespace cascade::metrics
