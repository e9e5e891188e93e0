#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "cascade/core/config.h"
#include "cascade/metrics/trace.h"

namespace cascade::gateway {

// Turns trace events into the client event stream. Per iteration: any
// switch events, one "iteration" event, then "block_emitted" if a block
// finished. Wall-clock fields are left out so a trace replays to the same
// bytes.
class EventProjector {
 public:
  explicit EventProjector(core::CascadeConfig config);

  std::vector<nlohmann::json> project(const metrics::TraceEvent& event);
  nlohmann::json finish(const std::string& status, const std::string& error = {});

  int next_seq() const { return seq_; }

 private:
  nlohmann::json stamp(nlohmann::json event);

  core::CascadeConfig config_;
  int seq_ = 0;
  int emitted_ = 0;
  int iterations_ = 0;
  double last_emit_ = 0.0;
};

// Every event of a whole trace followed by session_done.
std::vector<nlohmann::json> project_trace(const core::CascadeConfig& config, const metrics::Trace& trace);

// Little-endian float32 pixels, base64.
std::string encode_pixels(const core::Matrix& pixels);
core::Matrix decode_pixels(const std::string& base64, std::size_t rows, std::size_t cols);

}  // namespace cascade::gateway
