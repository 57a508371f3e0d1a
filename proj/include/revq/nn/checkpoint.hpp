#pragma once

// Model checkpoint container.
//
// Layout (little-endian):
//   "RVQCKPT1"       8-byte magic
//   u32 n, n bytes   JSON header, keys in this order:
//                      format_version, architecture{sampler, subsets, flow,
//                      motion_enabled, diff_mode, detector_channels,
//                      stability_widths, fusion_widths, scorer_channels,
//                      scorer_pools, pool_grid}, seed, training{epochs_completed,
//                      steps, stages}, parameters[{name, shape}]
//   u32 count        total number of float32 values
//   f32[count]       parameters concatenated in header order
// Parameter order: scorer trunk, scorer head, detector, stability MLP, fusion MLP.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "revq/binary.hpp"
#include "revq/error.hpp"
#include "revq/model.hpp"

namespace revq {

inline constexpr char kCheckpointMagic[] = "RVQCKPT1";
inline constexpr int kCheckpointVersion = 1;

inline nlohmann::ordered_json to_json(const ModelConfig& c) {
  nlohmann::ordered_json a;
  a["sampler"] = {{"clips", c.sampler.clips},
                  {"frames_per_clip", c.sampler.frames_per_clip},
                  {"grid", c.sampler.grid},
                  {"patch", c.sampler.patch}};
  a["subsets"] = {{"count", c.subsets.count}, {"height", c.subsets.height}, {"width", c.subsets.width}};
  a["flow"] = {{"block_size", c.flow.block_size},
               {"search_radius", c.flow.search_radius},
               {"refinement", c.flow.refinement == Refinement::none ? "none" : "subpixel_parabolic"},
               {"fb_threshold", c.flow.fb_threshold}};
  a["motion_enabled"] = c.motion_enabled;
  a["diff_mode"] = std::string(nn::to_string(c.diff_mode));
  a["detector_channels"] = c.detector_channels;
  a["stability_widths"] = c.stability_widths;
  a["fusion_widths"] = nn::quarter_widths(c.stability_widths);
  a["scorer_channels"] = c.scorer_channels;
  a["scorer_pools"] = c.scorer_pools;
  a["pool_grid"] = c.pool_grid;
  return a;
}

inline ModelConfig model_config_from_json(const nlohmann::json& a) {
  ModelConfig c;
  const auto& s = a.at("sampler");
  c.sampler.clips = s.at("clips").get<int>();
  c.sampler.frames_per_clip = s.at("frames_per_clip").get<int>();
  c.sampler.grid = s.at("grid").get<int>();
  c.sampler.patch = s.at("patch").get<int>();
  const auto& sub = a.at("subsets");
  c.subsets.count = sub.at("count").get<int>();
  c.subsets.height = sub.at("height").get<int>();
  c.subsets.width = sub.at("width").get<int>();
  const auto& f = a.at("flow");
  c.flow.block_size = f.at("block_size").get<int>();
  c.flow.search_radius = f.at("search_radius").get<int>();
  const auto refinement = f.at("refinement").get<std::string>();
  require(refinement == "none" || refinement == "subpixel_parabolic", ErrorCode::MalformedCheckpoint,
          "unknown refinement '" + refinement + "'");
  c.flow.refinement = refinement == "none" ? Refinement::none : Refinement::subpixel_parabolic;
  c.flow.fb_threshold = f.at("fb_threshold").get<double>();
  c.motion_enabled = a.at("motion_enabled").get<bool>();
  const auto mode = a.at("diff_mode").get<std::string>();
  require(mode == "all_pairs" || mode == "reference_only", ErrorCode::MalformedCheckpoint,
          "unknown diff_mode '" + mode + "'");
  c.diff_mode = mode == "all_pairs" ? nn::DiffMode::all_pairs : nn::DiffMode::reference_only;
  c.detector_channels = a.at("detector_channels").get<std::vector<int>>();
  c.stability_widths = a.at("stability_widths").get<std::vector<int>>();
  c.scorer_channels = a.at("scorer_channels").get<std::vector<int>>();
  c.scorer_pools = a.at("scorer_pools").get<std::vector<int>>();
  c.pool_grid = a.at("pool_grid").get<int>();
  return c;
}

inline void write_checkpoint(QualityModel& model, std::ostream& out) {
  nlohmann::ordered_json h;
  h["format_version"] = kCheckpointVersion;
  h["architecture"] = to_json(model.config());
  h["seed"] = model.seed();
  const auto& st = model.training_state();
  h["training"] = {{"epochs_completed", st.epochs_completed}, {"steps", st.steps}, {"stages", st.stages}};
  h["parameters"] = nlohmann::ordered_json::array();
  std::size_t count = 0;
  const auto params = model.named_parameters();
  for (const auto& [name, p] : params) {
    h["parameters"].push_back({{"name", name}, {"shape", p->value.shape}});
    count += p->value.size();
  }
  require(count < (1ULL << 32), ErrorCode::InvalidArgument, "model too large for checkpoint format");
  const std::string header = h.dump();
  out.write(kCheckpointMagic, 8);
  binary::put_u32(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  binary::put_u32(out, static_cast<std::uint32_t>(count));
  for (const auto& [name, p] : params) {
    for (double v : p->value.values) binary::put_f32(out, static_cast<float>(v));
  }
  require(static_cast<bool>(out), ErrorCode::IoError, "checkpoint: write failed");
}

inline QualityModel read_checkpoint(std::istream& in) {
  constexpr auto E = ErrorCode::MalformedCheckpoint;
  require(binary::get_bytes(in, 8, E) == std::string(kCheckpointMagic, 8), E, "bad magic");
  const std::uint32_t header_len = binary::get_u32(in, E);
  require(header_len < (1u << 24), E, "header too large");
  nlohmann::json h;
  ModelConfig config;
  std::uint64_t seed = 0;
  TrainingState state;
  try {
    h = nlohmann::json::parse(binary::get_bytes(in, header_len, E));
    require(h.at("format_version").get<int>() == kCheckpointVersion, E, "unsupported checkpoint version");
    config = model_config_from_json(h.at("architecture"));
    seed = h.at("seed").get<std::uint64_t>();
    const auto& t = h.at("training");
    state.epochs_completed = t.at("epochs_completed").get<std::uint64_t>();
    state.steps = t.at("steps").get<std::uint64_t>();
    state.stages = t.at("stages").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(E, std::string("header: ") + e.what());
  }
  QualityModel model = [&] {
    try {
      return QualityModel(config, seed);
    } catch (const Error& e) {
      fail(E, std::string("architecture: ") + e.what());
    }
  }();
  model.training_state() = state;
  const auto params = model.named_parameters();
  const auto& listed = h.at("parameters");
  require(listed.size() == params.size(), E, "parameter list does not match architecture");
  std::size_t expected = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, p] = params[i];
    try {
      require(listed[i].at("name").get<std::string>() == name &&
                  listed[i].at("shape").get<std::vector<std::size_t>>() == p->value.shape,
              E, "parameter " + name + " does not match architecture");
    } catch (const nlohmann::json::exception& e) {
      fail(E, std::string("parameters: ") + e.what());
    }
    expected += p->value.size();
  }
  require(binary::get_u32(in, E) == expected, E, "parameter count does not match architecture");
  for (const auto& [name, p] : params) {
    for (double& v : p->value.values) {
      v = static_cast<double>(binary::get_f32(in, E));
      require(std::isfinite(v), E, "non-finite value in " + name);
    }
  }
  in.peek();
  require(in.eof(), E, "trailing bytes after parameter blob");
  return model;
}

inline void save_checkpoint(QualityModel& model, const std::filesystem::path& path) {
  std::ostringstream buf(std::ios::binary);
  write_checkpoint(model, buf);
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + path.string());
  const std::string bytes = buf.str();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::IoError, "write failed: " + path.string());
}

inline QualityModel load_checkpoint(const std::filesystem::path& path) {
  std::error_code ec;
  require(std::filesystem::is_regular_file(path, ec), ErrorCode::CheckpointNotFound,
          "checkpoint not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::CheckpointNotFound, "cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

/// Rounds every parameter to float32 so the in-memory model scores exactly
/// like its saved checkpoint.
inline void round_to_checkpoint_precision(QualityModel& model) {
  for (auto* p : model.parameters()) {
    for (double& v : p->value.values) v = static_cast<double>(static_cast<float>(v));
  }
}

}  // namespace revq
