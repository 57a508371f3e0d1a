#pragma once

// Normalisation of raw videos into the two stream inputs:
//  * fragment grids (clip-wise temporally contiguous k x k patches tiled n x n)
//  * temporal subsets (runs of consecutive frames cropped to a fixed size)

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "revq/error.hpp"
#include "revq/media.hpp"
#include "revq/rng.hpp"

namespace revq {

struct SamplerParams {
  int clips = 8;          // s
  int frames_per_clip = 4;  // m
  int grid = 7;           // n
  int patch = 32;         // k
  std::uint64_t seed = 0;

  int fragment_side() const { return grid * patch; }
  int fragment_frames() const { return clips * frames_per_clip; }
};

struct PatchOrigin {
  int source_frame = 0;
  int x = 0;
  int y = 0;

  friend bool operator==(const PatchOrigin&, const PatchOrigin&) = default;
};

struct FragmentVideo {
  std::vector<Frame> frames;
  int grid = 0;
  int patch = 0;
  /// provenance[f * grid * grid + v * grid + u] is the source of cell (u, v) in frame f.
  std::vector<PatchOrigin> provenance;

  const PatchOrigin& origin(std::size_t frame, int u, int v) const {
    return provenance[frame * static_cast<std::size_t>(grid) * grid + static_cast<std::size_t>(v) * grid + u];
  }

  friend bool operator==(const FragmentVideo&, const FragmentVideo&) = default;
};

/// Frame index range [first, last] feasible for the start of clip `clip`'s
/// m-frame window. The last clip absorbs the z mod s remainder frames.
inline std::pair<int, int> clip_start_range(int frame_count, int clips, int clip, int m) {
  const int t = frame_count / clips;
  const int first = clip * t;
  const int end = clip == clips - 1 ? frame_count : first + t;
  return {first, end - m};
}

inline FragmentVideo sample_fragments(const Video& video, const SamplerParams& params) {
  validate(video);
  require(params.clips >= 1 && params.frames_per_clip >= 1 && params.grid >= 1 && params.patch >= 1,
          ErrorCode::InvalidArgument, "sampler parameters must be positive");
  const int z = static_cast<int>(video.frame_count());
  require(z >= params.clips * params.frames_per_clip, ErrorCode::VideoTooShort,
          "need at least s*m = " + std::to_string(params.clips * params.frames_per_clip) + " frames, got " +
              std::to_string(z));
  const int cell_w = video.width() / params.grid;
  const int cell_h = video.height() / params.grid;
  require(cell_w >= params.patch && cell_h >= params.patch, ErrorCode::FrameTooSmall,
          "grid cells of " + std::to_string(cell_w) + "x" + std::to_string(cell_h) + " cannot hold a " +
              std::to_string(params.patch) + " px patch");

  const int n = params.grid;
  const int k = params.patch;
  const int side = n * k;
  FragmentVideo out;
  out.grid = n;
  out.patch = k;
  out.frames.reserve(static_cast<std::size_t>(params.fragment_frames()));
  out.provenance.reserve(static_cast<std::size_t>(params.fragment_frames()) * n * n);

  Rng rng(mix_seed(params.seed, 0xF7A6));
  std::vector<std::pair<int, int>> offsets(static_cast<std::size_t>(n) * n);
  for (int clip = 0; clip < params.clips; ++clip) {
    const auto [first, last] = clip_start_range(z, params.clips, clip, params.frames_per_clip);
    const int start = static_cast<int>(rng.uniform_int(first, last));
    // One offset per cell per clip keeps the patches temporally contiguous.
    for (auto& off : offsets) {
      off.first = static_cast<int>(rng.uniform_int(0, cell_w - k));
      off.second = static_cast<int>(rng.uniform_int(0, cell_h - k));
    }
    for (int f = start; f < start + params.frames_per_clip; ++f) {
      const Frame& src = video.frames[static_cast<std::size_t>(f)];
      Frame dst(side, side);
      for (int v = 0; v < n; ++v) {
        for (int u = 0; u < n; ++u) {
          const auto [ox, oy] = offsets[static_cast<std::size_t>(v) * n + u];
          const int sx = u * cell_w + ox;
          const int sy = v * cell_h + oy;
          for (int y = 0; y < k; ++y) {
            for (int x = 0; x < k; ++x) {
              for (int c = 0; c < 3; ++c) dst.at(u * k + x, v * k + y, c) = src.at(sx + x, sy + y, c);
            }
          }
          out.provenance.push_back({f, sx, sy});
        }
      }
      out.frames.push_back(std::move(dst));
    }
  }
  return out;
}

struct SubsetParams {
  int count = 10;
  int height = 480;  // h
  int width = 800;   // w
  std::uint64_t seed = 0;

  static constexpr int kLength = 5;
};

struct TemporalSubset {
  std::vector<Frame> frames;  // kLength consecutive crops
  int crop_x = 0;
  int crop_y = 0;
  int start_frame = 0;

  friend bool operator==(const TemporalSubset&, const TemporalSubset&) = default;
};

/// start_i = round(i * (z - L) / (count - 1)), rounding halves up.
inline std::vector<int> subset_starts(int frame_count, int count) {
  const int span = frame_count - SubsetParams::kLength;
  std::vector<int> starts(static_cast<std::size_t>(count), 0);
  if (count == 1 || span <= 0) return starts;
  for (int i = 0; i < count; ++i) {
    const std::int64_t num = 2LL * i * span + (count - 1);
    starts[static_cast<std::size_t>(i)] = static_cast<int>(num / (2LL * (count - 1)));
  }
  return starts;
}

inline std::vector<TemporalSubset> sample_subsets(const Video& video, const SubsetParams& params) {
  validate(video);
  require(params.count >= 1 && params.height >= 1 && params.width >= 1, ErrorCode::InvalidArgument,
          "subset parameters must be positive");
  const int z = static_cast<int>(video.frame_count());
  require(z >= SubsetParams::kLength, ErrorCode::VideoTooShort,
          "need at least " + std::to_string(SubsetParams::kLength) + " frames, got " + std::to_string(z));
  require(video.width() >= params.width && video.height() >= params.height, ErrorCode::FrameTooSmall,
          std::to_string(video.width()) + "x" + std::to_string(video.height()) + " is smaller than the " +
              std::to_string(params.width) + "x" + std::to_string(params.height) + " crop");
  Rng rng(mix_seed(params.seed, 0x5B5E));
  std::vector<TemporalSubset> out;
  out.reserve(static_cast<std::size_t>(params.count));
  for (int start : subset_starts(z, params.count)) {
    TemporalSubset s;
    s.start_frame = start;
    s.crop_x = static_cast<int>(rng.uniform_int(0, video.width() - params.width));
    s.crop_y = static_cast<int>(rng.uniform_int(0, video.height() - params.height));
    for (int f = start; f < start + SubsetParams::kLength; ++f) {
      s.frames.push_back(crop(video.frames[static_cast<std::size_t>(f)], s.crop_x, s.crop_y, params.width, params.height));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace revq
