#pragma once

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "revq/media.hpp"
#include "revq/motion.hpp"
#include "revq/nn/tensor.hpp"

namespace revq::nn {

enum class DiffMode {
  all_pairs,       // every ordered pair, grouped by temporal distance: 4 + 3 + 2 + 1 maps
  reference_only,  // |F_i - F_ref| for the four earlier frames
};

inline std::string_view to_string(DiffMode m) { return m == DiffMode::all_pairs ? "all_pairs" : "reference_only"; }

/// (earlier, later) frame index pairs in channel order.
inline std::vector<std::pair<int, int>> diff_pairs(DiffMode mode, int length = SubsetParams::kLength) {
  std::vector<std::pair<int, int>> pairs;
  if (mode == DiffMode::reference_only) {
    for (int i = 0; i + 1 < length; ++i) pairs.emplace_back(i, length - 1);
    return pairs;
  }
  for (int d = 1; d < length; ++d) {
    for (int i = 0; i + d < length; ++i) pairs.emplace_back(i, i + d);
  }
  return pairs;
}

inline std::size_t diff_channel_count(DiffMode mode) { return diff_pairs(mode).size(); }

/// Absolute luma differences between aligned frames. Pixels outside the
/// combined mask are zero in every aligned frame, so they difference to zero.
inline Tensor diff_maps(const AlignedSubset& aligned, DiffMode mode = DiffMode::all_pairs) {
  const auto frames = aligned.frames();
  std::array<LumaPlane, 5> luma;
  for (std::size_t i = 0; i < 5; ++i) luma[i] = luminance(*frames[i]);
  const auto pairs = diff_pairs(mode);
  const auto w = static_cast<std::size_t>(luma[0].width);
  const auto h = static_cast<std::size_t>(luma[0].height);
  Tensor out = Tensor::map(pairs.size(), h, w);
  for (std::size_t c = 0; c < pairs.size(); ++c) {
    const auto& a = luma[static_cast<std::size_t>(pairs[c].first)].values;
    const auto& b = luma[static_cast<std::size_t>(pairs[c].second)].values;
    double* dst = out.channel(c);
    for (std::size_t p = 0; p < w * h; ++p) dst[p] = std::abs(a[p] - b[p]);
  }
  return out;
}

/// (3,H,W) planar tensor from an interleaved RGB frame.
inline Tensor frame_tensor(const Frame& f) {
  const auto w = static_cast<std::size_t>(f.width());
  const auto h = static_cast<std::size_t>(f.height());
  Tensor t = Tensor::map(3, h, w);
  const auto px = f.data();
  for (std::size_t p = 0; p < w * h; ++p) {
    for (std::size_t c = 0; c < 3; ++c) t.values[c * w * h + p] = px[3 * p + c];
  }
  return t;
}

}  // namespace revq::nn
