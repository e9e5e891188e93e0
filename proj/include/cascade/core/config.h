#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cascade/core/schedule.h"
#include "cascade/core/types.h"

namespace cascade::core {

struct ModelDims {
  int layers = 2;
  int heads = 2;
  int head_dim = 8;

  bool operator==(const ModelDims&) const = default;
};

// Affine modeled-time costs, in seconds.
struct CostParams {
  double pass_base = 0.05;
  double pass_per_frame = 0.001;  // per visible key frame
  double comm_base = 0.0;
  double comm_per_frame = 0.0;  // per KV frame exchanged between workers
  double decode = 0.0;          // per emitted block

  bool operator==(const CostParams&) const = default;
};

struct CascadeConfig {
  int S = 3;    // latent frames per block
  int D = 16;   // latent dim
  int Dc = 16;  // conditioning dim
  int W = 7;    // window in predecessor blocks
  int sink_blocks = 1;
  int offset = 1;  // passes between consecutive block starts
  AttentionMode attention_mode = AttentionMode::bidirectional;
  int workers = 5;
  int total_frames = 39;
  int video_frames_per_latent = 4;
  int pixel_dim = 16;
  ModelDims model;
  std::vector<double> denoise_levels{1000, 750, 500, 250};
  CostParams cost;
  bool decode_overlap = false;
  bool refresh_sink_on_switch = false;

  int blocks() const { return (total_frames + S - 1) / S; }
  int passes() const { return static_cast<int>(denoise_levels.size()) + 1; }
  // Max blocks in flight at once: ceil(P / offset).
  int cascade_width() const { return (passes() + offset - 1) / offset; }
  TimestepSchedule schedule() const;

  // Empty when valid; otherwise one "field: reason" line per problem.
  std::vector<std::string> diagnostics() const;
  void validate() const;  // throws ConfigError

  bool operator==(const CascadeConfig&) const = default;
};

// Field names match the CascadeConfig members; cost and model members are
// flattened (pass_base, layers, ...). Unknown keys are rejected.
CascadeConfig config_from_json(const nlohmann::json& doc, CascadeConfig base = {});
nlohmann::json config_to_json(const CascadeConfig& config);
const std::vector<std::string>& config_keys();

// Applies one key from its textual form (env vars, CLI).
void set_config_field(CascadeConfig& config, const std::string& key, const std::string& value);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

// CASCADE_<KEY> overrides, key matched case-insensitively.
void apply_env_overrides(CascadeConfig& config, const EnvLookup& lookup);
void apply_env_overrides(CascadeConfig& config);

CascadeConfig load_config(const std::filesystem::path& path);

}  // namespace cascade::core
