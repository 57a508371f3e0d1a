#pragma once

// Precomputed subset motion, one file per (video_id, seed).
//
// Layout (little-endian):
//   "RVQMV1"                      6-byte magic
//   u32 n, n bytes                JSON header: video_id, seed, flow params,
//                                 subset geometry, motion flag
//   u32 subset_count
//   per subset:
//     i32 start_frame, crop_x, crop_y, width, height
//     4 x { f32 dx[w*h], f32 dy[w*h], mask bits[ceil(w*h/8)] }
// Masks are packed row-major, least significant bit first.

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "revq/binary.hpp"
#include "revq/error.hpp"
#include "revq/motion.hpp"
#include "revq/sampling.hpp"

namespace revq {

inline constexpr char kMotionMagic[] = "RVQMV1";

struct CachedSubset {
  int start_frame = 0;
  int crop_x = 0;
  int crop_y = 0;
  SubsetMotion motion;

  friend bool operator==(const CachedSubset&, const CachedSubset&) = default;
};

struct MotionCache {
  std::string video_id;
  std::uint64_t seed = 0;
  FlowParams flow;
  int crop_width = 0;
  int crop_height = 0;
  bool motion_enabled = true;
  std::vector<CachedSubset> subsets;

  friend bool operator==(const MotionCache&, const MotionCache&) = default;
};

inline std::string cache_file_name(const std::string& video_id, std::uint64_t seed) {
  std::string safe;
  for (char c : video_id) safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return safe + "_" + std::to_string(seed) + ".rvqmv";
}

inline nlohmann::ordered_json cache_header(const MotionCache& cache) {
  nlohmann::ordered_json h;
  h["video_id"] = cache.video_id;
  h["seed"] = cache.seed;
  h["block_size"] = cache.flow.block_size;
  h["search_radius"] = cache.flow.search_radius;
  h["refinement"] = cache.flow.refinement == Refinement::none ? "none" : "subpixel_parabolic";
  h["fb_threshold"] = cache.flow.fb_threshold;
  h["crop_width"] = cache.crop_width;
  h["crop_height"] = cache.crop_height;
  h["motion_enabled"] = cache.motion_enabled;
  return h;
}

inline void write_motion_cache(const MotionCache& cache, std::ostream& out) {
  out.write(kMotionMagic, 6);
  const std::string header = cache_header(cache).dump();
  binary::put_u32(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  binary::put_u32(out, static_cast<std::uint32_t>(cache.subsets.size()));
  for (const auto& s : cache.subsets) {
    const int w = s.motion.flows[0].width;
    const int h = s.motion.flows[0].height;
    for (int v : {s.start_frame, s.crop_x, s.crop_y, w, h}) binary::put_i32(out, v);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& f = s.motion.flows[i];
      const auto& m = s.motion.masks[i];
      require(f.width == w && f.height == h && m.width == w && m.height == h, ErrorCode::DimensionMismatch,
              "motion cache: inconsistent field sizes");
      for (float v : f.dx) binary::put_f32(out, v);
      for (float v : f.dy) binary::put_f32(out, v);
      std::string bits((m.valid.size() + 7) / 8, '\0');
      for (std::size_t p = 0; p < m.valid.size(); ++p) {
        if (m.valid[p]) bits[p / 8] = static_cast<char>(bits[p / 8] | (1 << (p % 8)));
      }
      out.write(bits.data(), static_cast<std::streamsize>(bits.size()));
    }
  }
  require(static_cast<bool>(out), ErrorCode::IoError, "motion cache: write failed");
}

inline MotionCache read_motion_cache(std::istream& in) {
  constexpr auto E = ErrorCode::MalformedCache;
  require(binary::get_bytes(in, 6, E) == std::string(kMotionMagic, 6), E, "bad magic");
  const std::uint32_t header_len = binary::get_u32(in, E);
  require(header_len < (1u << 20), E, "header too large");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(binary::get_bytes(in, header_len, E));
  } catch (const nlohmann::json::exception& e) {
    fail(E, std::string("header: ") + e.what());
  }
  MotionCache cache;
  try {
    cache.video_id = h.at("video_id").get<std::string>();
    cache.seed = h.at("seed").get<std::uint64_t>();
    cache.flow.block_size = h.at("block_size").get<int>();
    cache.flow.search_radius = h.at("search_radius").get<int>();
    cache.flow.refinement = h.at("refinement").get<std::string>() == "none" ? Refinement::none
                                                                           : Refinement::subpixel_parabolic;
    cache.flow.fb_threshold = h.at("fb_threshold").get<double>();
    cache.crop_width = h.at("crop_width").get<int>();
    cache.crop_height = h.at("crop_height").get<int>();
    cache.motion_enabled = h.at("motion_enabled").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    fail(E, std::string("header: ") + e.what());
  }
  const std::uint32_t count = binary::get_u32(in, E);
  require(count < 10000, E, "implausible subset count");
  for (std::uint32_t s = 0; s < count; ++s) {
    CachedSubset sub;
    sub.start_frame = binary::get_i32(in, E);
    sub.crop_x = binary::get_i32(in, E);
    sub.crop_y = binary::get_i32(in, E);
    const int w = binary::get_i32(in, E);
    const int h2 = binary::get_i32(in, E);
    require(w > 0 && h2 > 0 && static_cast<std::int64_t>(w) * h2 < (1LL << 28), E, "bad field size");
    const std::size_t n = static_cast<std::size_t>(w) * h2;
    for (std::size_t i = 0; i < 4; ++i) {
      MotionField f(w, h2);
      for (auto& v : f.dx) v = binary::get_f32(in, E);
      for (auto& v : f.dy) v = binary::get_f32(in, E);
      const std::string bits = binary::get_bytes(in, (n + 7) / 8, E);
      OcclusionMask m(w, h2, 0);
      for (std::size_t p = 0; p < n; ++p) m.valid[p] = (static_cast<unsigned char>(bits[p / 8]) >> (p % 8)) & 1;
      sub.motion.flows[i] = std::move(f);
      sub.motion.masks[i] = std::move(m);
    }
    cache.subsets.push_back(std::move(sub));
  }
  return cache;
}

inline void save_motion_cache(const MotionCache& cache, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + path.string());
  write_motion_cache(cache, out);
}

inline MotionCache load_motion_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + path.string());
  return read_motion_cache(in);
}

}  // namespace revq
