#include "cascade/core/config.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cascade/core/errors.h"

namespace cascade::core {
namespace {

using nlohmann::json;

enum class Kind { integer, real, boolean, mode, levels };

struct Field {
  const char* name;
  Kind kind;
  std::function<void(CascadeConfig&, const json&)> set;
  std::function<json(const CascadeConfig&)> get;
};

template <typename T>
Field member(const char* name, Kind kind, T CascadeConfig::*ptr) {
  return Field{name, kind, [ptr](CascadeConfig& c, const json& v) { c.*ptr = v.get<T>(); },
               [ptr](const CascadeConfig& c) { return json(c.*ptr); }};
}

template <typename T>
Field model_member(const char* name, T ModelDims::*ptr) {
  return Field{name, Kind::integer, [ptr](CascadeConfig& c, const json& v) { c.model.*ptr = v.get<T>(); },
               [ptr](const CascadeConfig& c) { return json(c.model.*ptr); }};
}

Field cost_member(const char* name, double CostParams::*ptr) {
  return Field{name, Kind::real, [ptr](CascadeConfig& c, const json& v) { c.cost.*ptr = v.get<double>(); },
               [ptr](const CascadeConfig& c) { return json(c.cost.*ptr); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(member("S", Kind::integer, &CascadeConfig::S));
    f.push_back(member("D", Kind::integer, &CascadeConfig::D));
    f.push_back(member("Dc", Kind::integer, &CascadeConfig::Dc));
    f.push_back(member("W", Kind::integer, &CascadeConfig::W));
    f.push_back(member("sink_blocks", Kind::integer, &CascadeConfig::sink_blocks));
    f.push_back(member("offset", Kind::integer, &CascadeConfig::offset));
    f.push_back(Field{"attention_mode", Kind::mode,
                      [](CascadeConfig& c, const json& v) { c.attention_mode = parse_attention_mode(v.get<std::string>()); },
                      [](const CascadeConfig& c) { return json(to_string(c.attention_mode)); }});
    f.push_back(member("workers", Kind::integer, &CascadeConfig::workers));
    f.push_back(member("total_frames", Kind::integer, &CascadeConfig::total_frames));
    f.push_back(member("video_frames_per_latent", Kind::integer, &CascadeConfig::video_frames_per_latent));
    f.push_back(member("pixel_dim", Kind::integer, &CascadeConfig::pixel_dim));
    f.push_back(model_member("layers", &ModelDims::layers));
    f.push_back(model_member("heads", &ModelDims::heads));
    f.push_back(model_member("head_dim", &ModelDims::head_dim));
    f.push_back(member("denoise_levels", Kind::levels, &CascadeConfig::denoise_levels));
    f.push_back(cost_member("pass_base", &CostParams::pass_base));
    f.push_back(cost_member("pass_per_frame", &CostParams::pass_per_frame));
    f.push_back(cost_member("comm_base", &CostParams::comm_base));
    f.push_back(cost_member("comm_per_frame", &CostParams::comm_per_frame));
    f.push_back(cost_member("decode_cost", &CostParams::decode));
    f.push_back(member("decode_overlap", Kind::boolean, &CascadeConfig::decode_overlap));
    f.push_back(member("refresh_sink_on_switch", Kind::boolean, &CascadeConfig::refresh_sink_on_switch));
    return f;
  }();
  return table;
}

const Field* find_field(const std::string& key, bool ignore_case) {
  for (const auto& f : fields()) {
    std::string name = f.name;
    if (name == key) return &f;
    if (ignore_case && name.size() == key.size() &&
        std::equal(name.begin(), name.end(), key.begin(), [](char a, char b) {
          return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
        })) {
      return &f;
    }
  }
  return nullptr;
}

json parse_text(const Field& field, const std::string& text) {
  switch (field.kind) {
    case Kind::integer: {
      std::size_t used = 0;
      const long v = std::stol(text, &used);
      if (used != text.size()) throw InvalidInput("not an integer");
      return json(v);
    }
    case Kind::real: {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw InvalidInput("not a number");
      return json(v);
    }
    case Kind::boolean:
      if (text == "1" || text == "true" || text == "on") return json(true);
      if (text == "0" || text == "false" || text == "off") return json(false);
      throw InvalidInput("not a boolean");
    case Kind::mode:
      return json(text);
    case Kind::levels: {
      json arr = json::array();
      std::stringstream in(text);
      std::string item;
      while (std::getline(in, item, ',')) arr.push_back(std::stod(item));
      return arr;
    }
  }
  return json();
}

}  // namespace

TimestepSchedule CascadeConfig::schedule() const { return make_schedule(denoise_levels); }

std::vector<std::string> CascadeConfig::diagnostics() const {
  std::vector<std::string> out;
  auto require = [&](bool ok, const std::string& line) {
    if (!ok) out.push_back(line);
  };
  require(S >= 1, "S: must be >= 1");
  require(D >= 1, "D: must be >= 1");
  require(Dc >= 1, "Dc: must be >= 1");
  require(W >= 1, "W: must be >= 1");
  require(sink_blocks == 0 || sink_blocks == 1, "sink_blocks: must be 0 or 1");
  require(workers >= 1, "workers: must be >= 1");
  require(total_frames >= 1, "total_frames: must be >= 1");
  require(video_frames_per_latent >= 1, "video_frames_per_latent: must be >= 1");
  require(pixel_dim >= 1, "pixel_dim: must be >= 1");
  require(model.layers >= 1, "layers: must be >= 1");
  require(model.heads >= 1, "heads: must be >= 1");
  require(model.head_dim >= 1, "head_dim: must be >= 1");
  require(!decode_overlap || workers >= 2, "decode_overlap: needs workers >= 2");
  for (const auto& [name, v] : {std::pair{"pass_base", cost.pass_base}, std::pair{"pass_per_frame", cost.pass_per_frame},
                                std::pair{"comm_base", cost.comm_base}, std::pair{"comm_per_frame", cost.comm_per_frame},
                                std::pair{"decode_cost", cost.decode}}) {
    require(std::isfinite(v) && v >= 0.0, std::string(name) + ": must be finite and >= 0");
  }

  bool schedule_ok = true;
  try {
    (void)schedule();
  } catch (const InvalidSchedule& e) {
    schedule_ok = false;
    out.push_back(std::string("denoise_levels: ") + e.what());
  }
  if (schedule_ok) {
    require(offset >= 1 && offset <= passes(),
            "offset: must be in [1, " + std::to_string(passes()) + "]");
    if (offset >= 1 && W >= 1 && (sink_blocks == 0 || sink_blocks == 1)) {
      require(cascade_width() <= W + sink_blocks,
              "W: cascade of " + std::to_string(cascade_width()) + " blocks does not fit window W + sink_blocks = " +
                  std::to_string(W + sink_blocks));
    }
  }
  return out;
}

void CascadeConfig::validate() const {
  auto diags = diagnostics();
  if (!diags.empty()) throw ConfigError(std::move(diags));
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.emplace_back(f.name);
    return k;
  }();
  return keys;
}

CascadeConfig config_from_json(const json& doc, CascadeConfig base) {
  if (!doc.is_object()) throw ConfigError({"config: expected a key/value object"});
  std::vector<std::string> problems;
  for (const auto& [key, value] : doc.items()) {
    const Field* f = find_field(key, false);
    if (f == nullptr) {
      problems.push_back(key + ": unknown field");
      continue;
    }
    try {
      f->set(base, value);
    } catch (const std::exception& e) {
      problems.push_back(key + ": " + e.what());
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return base;
}

json config_to_json(const CascadeConfig& config) {
  json out = json::object();
  for (const auto& f : fields()) out[f.name] = f.get(config);
  return out;
}

void set_config_field(CascadeConfig& config, const std::string& key, const std::string& value) {
  const Field* f = find_field(key, true);
  if (f == nullptr) throw ConfigError({key + ": unknown field"});
  try {
    f->set(config, parse_text(*f, value));
  } catch (const std::exception& e) {
    throw ConfigError({std::string(f->name) + ": cannot parse '" + value + "' (" + e.what() + ")"});
  }
}

void apply_env_overrides(CascadeConfig& config, const EnvLookup& lookup) {
  for (const auto& f : fields()) {
    std::string var = "CASCADE_";
    for (char c : std::string(f.name)) var += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (auto v = lookup(var)) set_config_field(config, f.name, *v);
  }
}

void apply_env_overrides(CascadeConfig& config) {
  apply_env_overrides(config, [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  });
}

CascadeConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string(), {"config: unreadable"});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what(), {"config: malformed"});
  }
  return config_from_json(doc);
}

}  // namespace cascade::core
