#include "cascade/scheduler/engine.h"

#include <chrono>

#include "cascade/core/errors.h"

namespace cascade::scheduler {

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

CascadeEngine::CascadeEngine(core::CascadeConfig config, std::string_view prompt, Seeds seeds)
    : config_((config.validate(), std::move(config))),
      seeds_(seeds),
      schedule_(config_.schedule()),
      noise_(seeds.noise, config_.D),
      weights_(denoiser::init_model(seeds.weights, config_.D, config_.Dc, config_.model)),
      executor_(config_.workers, executor::CostModel(config_.cost)),
      conditioning_(core::embed_prompt(prompt, config_.Dc)),
      pool_(config_.W, config_.sink_blocks, config_.model.layers),
      state_(initial_state(config_, noise_, conditioning_.id)) {}

const metrics::TraceEvent& CascadeEngine::step() {
  const auto plan = plan_iteration(state_, config_);
  const auto snapshot = pool_.visible_set(state_.lead());

  std::vector<denoiser::BatchInput> inputs;
  inputs.reserve(state_.in_flight.size());
  for (const auto& b : state_.in_flight) {
    inputs.push_back(denoiser::BatchInput{b.block_index, b.latents, b.noise_level, &conditioning_});
  }

  const auto wall_start = std::chrono::steady_clock::now();
  auto result = executor_.execute(plan, inputs, snapshot, weights_, config_.attention_mode);
  auto outcome = apply_results(state_, plan, result.outputs, noise_, pool_, schedule_);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();

  metrics::TraceEvent ev;
  ev.iteration = plan.iteration;
  for (std::size_t i = 0; i < plan.entries.size(); ++i) {
    const auto& e = plan.entries[i];
    ev.entries.push_back(metrics::TraceEntry{e.block_index, e.pass_index, e.noise_level, result.timing[i].worker,
                                             e.conditioning_id, result.timing[i].visible_frames,
                                             result.timing[i].modeled_cost});
  }
  ev.stall_time = pending_stall_;
  ev.comm_time = result.modeled_comm;
  double duration = pending_stall_ + result.modeled_compute + result.modeled_comm;

  const double decode = executor_.cost().decode_cost();
  if (!outcome.emitted.empty() && !config_.decode_overlap) duration += decode * static_cast<double>(outcome.emitted.size());
  const double end = clock_ + duration;
  wall_clock_ += wall;

  for (auto& [block, latents] : outcome.emitted) {
    double emit_time = end;
    if (config_.decode_overlap) {
      decode_free_ = std::max(end, decode_free_) + decode;
      emit_time = decode_free_;
    }
    ev.emitted = metrics::Emission{block, config_.S * config_.video_frames_per_latent, emit_time, wall_clock_, latents};
    outputs_.emplace(block, std::move(latents));
  }

  ev.wall_time = wall;
  ev.modeled_time = duration;
  ev.modeled_end = end;
  ev.pool_blocks = pool_.block_count();
  ev.pool_frames = pool_.pool_frame_count();
  ev.pool = pool_.dump();
  ev.switch_events = std::move(pending_switches_);
  pending_switches_.clear();
  pending_stall_ = 0.0;
  clock_ = end;

  trace_.events.push_back(std::move(ev));
  return trace_.events.back();
}

std::vector<core::Matrix> CascadeEngine::output_blocks() const {
  std::vector<core::Matrix> out;
  for (const auto& [_, m] : outputs_) out.push_back(m);
  return out;
}

void CascadeEngine::set_conditioning(core::Conditioning conditioning) {
  conditioning_ = std::move(conditioning);
  state_.conditioning_id = conditioning_.id;
  for (auto& b : state_.in_flight) b.conditioning_id = conditioning_.id;
}

void CascadeEngine::add_boundary_stall(double modeled_seconds, core::SwitchEvent event) {
  pending_stall_ += modeled_seconds;
  pending_switches_.push_back(std::move(event));
}

json CascadeEngine::snapshot() const {
  json in_flight = json::array();
  for (const auto& b : state_.in_flight) {
    in_flight.push_back(json{{"block", b.block_index},
                             {"pass", b.pass_index},
                             {"noise_level", b.noise_level},
                             {"conditioning_id", b.conditioning_id},
                             {"latents", matrix_json(b.latents)}});
  }
  json pool = json::array();
  for (const auto& kv : pool_.entries()) {
    json layers = json::array();
    for (const auto& l : kv->layers) layers.push_back(json{{"keys", matrix_json(l.keys)}, {"values", matrix_json(l.values)}});
    pool.push_back(json{{"block", kv->block_index}, {"noise_tag", kv->noise_tag}, {"conditioning_id", kv->conditioning_id},
                        {"layers", layers}});
  }
  json outputs = json::array();
  for (const auto& [b, m] : outputs_) outputs.push_back(json{{"block", b}, {"latents", matrix_json(m)}});

  return json{{"version", 1},
              {"config", core::config_to_json(config_)},
              {"seeds", {{"noise", seeds_.noise}, {"weights", seeds_.weights}}},
              {"prompt", conditioning_.prompt},
              {"state",
               {{"next_block", state_.next_block},
                {"youngest_passes", state_.youngest_passes},
                {"retired", state_.retired},
                {"iteration", state_.iteration},
                {"in_flight", in_flight}}},
              {"pool", pool},
              {"outputs", outputs},
              {"clock", {{"modeled", clock_}, {"wall", wall_clock_}, {"decode_free", decode_free_}}}};
}

CascadeEngine CascadeEngine::restore(const json& doc) {
  if (doc.at("version").get<int>() != 1) throw core::InvalidInput("unsupported snapshot version");
  const auto config = core::config_from_json(doc.at("config"));
  const Seeds seeds{doc.at("seeds").at("noise").get<std::uint64_t>(), doc.at("seeds").at("weights").get<std::uint64_t>()};
  CascadeEngine engine(config, doc.at("prompt").get<std::string>(), seeds);

  const auto& st = doc.at("state");
  engine.state_.next_block = st.at("next_block").get<int>();
  engine.state_.youngest_passes = st.at("youngest_passes").get<int>();
  engine.state_.retired = st.at("retired").get<int>();
  engine.state_.iteration = st.at("iteration").get<int>();
  engine.state_.in_flight.clear();
  for (const auto& b : st.at("in_flight")) {
    core::Block block;
    block.block_index = b.at("block").get<int>();
    block.pass_index = b.at("pass").get<int>();
    block.noise_level = b.at("noise_level").get<double>();
    block.conditioning_id = b.at("conditioning_id").get<std::string>();
    block.latents = matrix_from_json(b.at("latents"));
    engine.state_.in_flight.push_back(std::move(block));
  }
  for (const auto& e : doc.at("pool")) {
    denoiser::BlockKV kv;
    kv.block_index = e.at("block").get<int>();
    kv.noise_tag = e.at("noise_tag").get<double>();
    kv.conditioning_id = e.at("conditioning_id").get<std::string>();
    for (const auto& l : e.at("layers")) kv.layers.push_back({matrix_from_json(l.at("keys")), matrix_from_json(l.at("values"))});
    engine.pool_.insert(std::make_shared<const denoiser::BlockKV>(std::move(kv)));
  }
  for (const auto& o : doc.at("outputs")) engine.outputs_.emplace(o.at("block").get<int>(), matrix_from_json(o.at("latents")));
  engine.clock_ = doc.at("clock").at("modeled").get<double>();
  engine.wall_clock_ = doc.at("clock").at("wall").get<double>();
  engine.decode_free_ = doc.at("clock").at("decode_free").get<double>();
  return engine;
}

RunResult run_cascade(const core::CascadeConfig& config, std::string_view prompt, Seeds seeds) {
  CascadeEngine engine(config, prompt, seeds);
  while (!engine.done()) engine.step();
  return RunResult{engine.output_blocks(), engine.trace()};
}

std::vector<core::Matrix> run_sequential_reference(const core::CascadeConfig& config, std::string_view prompt,
                                                   Seeds seeds) {
  config.validate();
  const auto schedule = config.schedule();
  const core::NoiseStream noise(seeds.noise, config.D);
  const auto weights = denoiser::init_model(seeds.weights, config.D, config.Dc, config.model);
  const auto cond = core::embed_prompt(prompt, config.Dc);
  kvpool::KVPool pool(config.W, config.sink_blocks, config.model.layers);

  std::vector<core::Matrix> outputs;
  for (int b = 0; b < config.blocks(); ++b) {
    const int first = b * config.S;
    core::Matrix x = noise.draw_block(b, 0, first, config.S);
    double level = schedule.level(0);

    const auto visible = pool.visible_set(b);
    std::vector<int> pool_blocks;
    for (const auto& kv : visible) pool_blocks.push_back(kv->block_index);
    const denoiser::MaskBlock query{b, level};
    const auto mask = denoiser::build_mask(std::span(&query, 1), pool_blocks, config.attention_mode, config.S);

    for (int p = 0; p < schedule.passes(); ++p) {
      const denoiser::BatchInput input{b, x, level, &cond};
      auto out = denoiser::forward(weights, std::span(&input, 1), visible, mask).front();
      if (p < schedule.final_denoise_pass()) {
        level = schedule.level(p + 1);
        x = denoiser::renoise(out.x0, noise.draw_block(b, p + 1, first, config.S), level);
      } else if (p == schedule.final_denoise_pass()) {
        outputs.push_back(out.x0);
        x = out.x0;
        level = schedule.cache_level();
      } else {
        pool.insert(std::make_shared<const denoiser::BlockKV>(std::move(out.kv)));
      }
    }
  }
  return outputs;
}

}  // namespace cascade::scheduler
