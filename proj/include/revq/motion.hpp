#pragma once

// Dense motion for temporal subsets: exhaustive block matching on luma,
// forward-backward consistency masks, bilinear backward warping, and the
// alignment of a 5-frame subset onto its last frame.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "revq/error.hpp"
#include "revq/media.hpp"
#include "revq/sampling.hpp"

namespace revq {

enum class Refinement : std::uint8_t { none = 0, subpixel_parabolic = 1 };

struct FlowParams {
  int block_size = 16;
  int search_radius = 24;
  Refinement refinement = Refinement::subpixel_parabolic;
  double fb_threshold = 1.5;

  friend bool operator==(const FlowParams&, const FlowParams&) = default;
};

inline void validate(const FlowParams& p) {
  require(p.block_size >= 4, ErrorCode::InvalidArgument, "block_size must be >= 4");
  require(p.search_radius >= 1, ErrorCode::InvalidArgument, "search_radius must be >= 1");
  require(p.fb_threshold >= 0.0, ErrorCode::InvalidArgument, "fb_threshold must be >= 0");
}

/// Per-pixel displacement: a pixel p of the source grid corresponds to p + (dx, dy)
/// in the target frame.
struct MotionField {
  int width = 0;
  int height = 0;
  std::vector<float> dx;
  std::vector<float> dy;

  MotionField() = default;
  MotionField(int w, int h)
      : width(w), height(h), dx(static_cast<std::size_t>(w) * h, 0.0f), dy(static_cast<std::size_t>(w) * h, 0.0f) {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }

  friend bool operator==(const MotionField&, const MotionField&) = default;
};

/// 1 = pixel has a temporal correspondence, 0 = disoccluded / unmatched.
struct OcclusionMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> valid;

  OcclusionMask() = default;
  OcclusionMask(int w, int h, std::uint8_t fill = 1)
      : width(w), height(h), valid(static_cast<std::size_t>(w) * h, fill) {}

  bool at(int x, int y) const { return valid[static_cast<std::size_t>(y) * width + x] != 0; }
  std::size_t valid_count() const { return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1)); }

  friend bool operator==(const OcclusionMask&, const OcclusionMask&) = default;
};

namespace detail {

struct Candidate {
  int dx;
  int dy;
};

// Search order doubles as the tie-break: smaller |dx|+|dy| first, then dy, then dx.
inline std::vector<Candidate> search_order(int radius) {
  std::vector<Candidate> c;
  c.reserve(static_cast<std::size_t>(2 * radius + 1) * (2 * radius + 1));
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) c.push_back({dx, dy});
  }
  std::stable_sort(c.begin(), c.end(), [](const Candidate& a, const Candidate& b) {
    const int ma = std::abs(a.dx) + std::abs(a.dy);
    const int mb = std::abs(b.dx) + std::abs(b.dy);
    if (ma != mb) return ma < mb;
    if (a.dy != b.dy) return a.dy < b.dy;
    return a.dx < b.dx;
  });
  return c;
}

struct Block {
  int x, y, w, h;
};

// Part of a block whose displacement by (dx, dy) stays inside dst.
inline Block overlap(const LumaPlane& dst, const Block& b, int dx, int dy) {
  const int x0 = std::max(b.x, -dx), x1 = std::min(b.x + b.w, dst.width - dx);
  const int y0 = std::max(b.y, -dy), y1 = std::min(b.y + b.h, dst.height - dy);
  return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

// A candidate is scored only if at least half of the displaced block stays in
// dst; smaller overlaps match by chance too easily.
inline bool scorable(const LumaPlane& dst, const Block& b, int dx, int dy) {
  const Block o = overlap(dst, b, dx, dy);
  return 2 * o.w * o.h >= b.w * b.h;
}

// Mean absolute difference over the in-frame part of the displaced block, so a
// true match that partly leaves the frame still scores exactly 0. Stops once
// `bound` is reached.
inline double block_cost(const LumaPlane& src, const LumaPlane& dst, const Block& b, int dx, int dy, double bound) {
  const Block o = overlap(dst, b, dx, dy);
  const double area = static_cast<double>(o.w) * o.h;
  const double limit = bound * area;
  double sad = 0.0;
  for (int y = 0; y < o.h; ++y) {
    const double* s = &src.values[static_cast<std::size_t>(o.y + y) * src.width + o.x];
    const double* d = &dst.values[static_cast<std::size_t>(o.y + y + dy) * dst.width + o.x + dx];
    for (int x = 0; x < o.w; ++x) sad += std::abs(s[x] - d[x]);
    if (sad >= limit) return sad / area;
  }
  return sad / area;
}

// Vertex of the parabola through (-1, minus), (0, centre), (1, plus).
inline double parabolic_offset(double minus, double centre, double plus) {
  const double denom = minus - 2.0 * centre + plus;
  if (!(denom > 0.0)) return 0.0;
  return std::clamp(0.5 * (minus - plus) / denom, -0.5, 0.5);
}

inline double bilinear(const std::vector<double>& plane, int w, int h, int stride, int channel, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  auto px = [&](int xx, int yy) { return plane[(static_cast<std::size_t>(yy) * w + xx) * stride + channel]; };
  const double top = fx == 0.0 ? px(x0, y0) : (1.0 - fx) * px(x0, y0) + fx * px(x1, y0);
  if (fy == 0.0) return top;
  const double bottom = fx == 0.0 ? px(x0, y1) : (1.0 - fx) * px(x0, y1) + fx * px(x1, y1);
  return (1.0 - fy) * top + fy * bottom;
}

}  // namespace detail

/// A flow field and the pixels whose vector the estimator can vouch for.
struct FlowEstimate {
  MotionField field;
  OcclusionMask verified;
};

/// Estimates how each src pixel moves into dst. Exhaustive search over the
/// window with early exit; each candidate is scored on the part of the block
/// that stays inside dst, and (0, 0) comes first in search order so it wins
/// exact ties. A block is unverified when its best match is inexact and the
/// frame border hid part of the window, since the true match may lie there.
inline FlowEstimate estimate_flow_checked(const LumaPlane& src, const LumaPlane& dst, const FlowParams& params) {
  validate(params);
  require(src.width == dst.width && src.height == dst.height, ErrorCode::DimensionMismatch,
          "estimate_flow: planes differ in size");
  require(src.width >= params.block_size && src.height >= params.block_size, ErrorCode::DimensionMismatch,
          "estimate_flow: plane smaller than one block");
  const auto order = detail::search_order(params.search_radius);
  FlowEstimate out{MotionField(src.width, src.height), OcclusionMask(src.width, src.height, 1)};
  MotionField& field = out.field;
  const int bs = params.block_size;
  const int r = params.search_radius;
  for (int by = 0; by < src.height; by += bs) {
    for (int bx = 0; bx < src.width; bx += bs) {
      // Edge cells are matched with a full block shifted back inside the frame.
      const detail::Block block{std::min(bx, src.width - bs), std::min(by, src.height - bs), bs, bs};
      double best = std::numeric_limits<double>::infinity();
      detail::Candidate best_c{0, 0};
      bool truncated = false;
      for (const auto& c : order) {
        if (!detail::scorable(dst, block, c.dx, c.dy)) {
          truncated = true;
          continue;
        }
        const double cost = detail::block_cost(src, dst, block, c.dx, c.dy, best);
        if (cost < best) {
          best = cost;
          best_c = c;
          if (best == 0.0) break;  // later candidates can only tie
        }
      }
      double fx = best_c.dx;
      double fy = best_c.dy;
      if (params.refinement == Refinement::subpixel_parabolic && best > 0.0) {
        const double inf = std::numeric_limits<double>::infinity();
        auto cost = [&](int dx, int dy) {
          if (std::abs(dx) > r || std::abs(dy) > r || !detail::scorable(dst, block, dx, dy)) return inf;
          return detail::block_cost(src, dst, block, dx, dy, inf);
        };
        const double l = cost(best_c.dx - 1, best_c.dy);
        const double rr = cost(best_c.dx + 1, best_c.dy);
        const double u = cost(best_c.dx, best_c.dy - 1);
        const double d = cost(best_c.dx, best_c.dy + 1);
        if (std::isfinite(l) && std::isfinite(rr)) fx += detail::parabolic_offset(l, best, rr);
        if (std::isfinite(u) && std::isfinite(d)) fy += detail::parabolic_offset(u, best, d);
        fx = std::clamp(fx, static_cast<double>(-r), static_cast<double>(r));
        fy = std::clamp(fy, static_cast<double>(-r), static_cast<double>(r));
      }
      const std::uint8_t verified = truncated && best > 0.0 ? 0 : 1;
      for (int y = by; y < std::min(by + bs, src.height); ++y) {
        for (int x = bx; x < std::min(bx + bs, src.width); ++x) {
          field.dx[field.index(x, y)] = static_cast<float>(fx);
          field.dy[field.index(x, y)] = static_cast<float>(fy);
          out.verified.valid[field.index(x, y)] = verified;
        }
      }
    }
  }
  return out;
}

inline MotionField estimate_flow(const LumaPlane& src, const LumaPlane& dst, const FlowParams& params) {
  return estimate_flow_checked(src, dst, params).field;
}

/// Forward-backward check: p is valid iff p + fwd(p) lands inside the frame and
/// |fwd(p) + bwd(p + fwd(p))| <= threshold (bwd sampled bilinearly).
inline OcclusionMask disocclusion_mask(const MotionField& fwd, const MotionField& bwd, double fb_threshold) {
  require(fwd.width == bwd.width && fwd.height == bwd.height, ErrorCode::DimensionMismatch,
          "disocclusion_mask: fields differ in size");
  const int w = fwd.width;
  const int h = fwd.height;
  OcclusionMask mask(w, h, 0);
  std::vector<double> bwd_xy(static_cast<std::size_t>(w) * h * 2);
  for (std::size_t i = 0; i < bwd.dx.size(); ++i) {
    bwd_xy[2 * i] = bwd.dx[i];
    bwd_xy[2 * i + 1] = bwd.dy[i];
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = fwd.index(x, y);
      const double tx = x + static_cast<double>(fwd.dx[i]);
      const double ty = y + static_cast<double>(fwd.dy[i]);
      if (tx < 0.0 || ty < 0.0 || tx > w - 1 || ty > h - 1) continue;
      const double rx = fwd.dx[i] + detail::bilinear(bwd_xy, w, h, 2, 0, tx, ty);
      const double ry = fwd.dy[i] + detail::bilinear(bwd_xy, w, h, 2, 1, tx, ty);
      mask.valid[i] = std::hypot(rx, ry) <= fb_threshold ? 1 : 0;
    }
  }
  return mask;
}

/// Backward warp: out(p) = frame(p + flow(p)), bilinear, coordinates clamped to the edge.
inline Frame warp(const Frame& frame, const MotionField& flow) {
  require(frame.width() == flow.width && frame.height() == flow.height, ErrorCode::DimensionMismatch,
          "warp: flow and frame differ in size");
  const int w = frame.width();
  const int h = frame.height();
  Frame out(w, h);
  const std::vector<double> src(frame.data().begin(), frame.data().end());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = flow.index(x, y);
      const double sx = x + static_cast<double>(flow.dx[i]);
      const double sy = y + static_cast<double>(flow.dy[i]);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = detail::bilinear(src, w, h, 3, c, sx, sy);
    }
  }
  return out;
}

inline OcclusionMask mask_and(const OcclusionMask& a, const OcclusionMask& b) {
  require(a.width == b.width && a.height == b.height, ErrorCode::DimensionMismatch, "mask_and: size mismatch");
  OcclusionMask out(a.width, a.height, 0);
  for (std::size_t i = 0; i < out.valid.size(); ++i) out.valid[i] = a.valid[i] & b.valid[i];
  return out;
}

/// Motion of one 5-frame subset: for each earlier frame i, the field from the
/// reference (last) frame into frame i and its consistency mask.
struct SubsetMotion {
  std::array<MotionField, 4> flows;
  std::array<OcclusionMask, 4> masks;

  friend bool operator==(const SubsetMotion&, const SubsetMotion&) = default;
};

/// Pluggable estimator so a learned tracker can replace block matching.
class MotionEstimator {
 public:
  virtual ~MotionEstimator() = default;
  virtual FlowEstimate estimate(const LumaPlane& src, const LumaPlane& dst) const = 0;
  virtual double fb_threshold() const = 0;
};

class BlockMatchingEstimator final : public MotionEstimator {
 public:
  explicit BlockMatchingEstimator(FlowParams params = {}) : params_(params) { validate(params_); }
  FlowEstimate estimate(const LumaPlane& src, const LumaPlane& dst) const override {
    return estimate_flow_checked(src, dst, params_);
  }
  double fb_threshold() const override { return params_.fb_threshold; }
  const FlowParams& params() const { return params_; }

 private:
  FlowParams params_;
};

inline SubsetMotion estimate_subset_motion(const TemporalSubset& subset, const MotionEstimator& estimator) {
  require(subset.frames.size() == SubsetParams::kLength, ErrorCode::InvalidArgument, "subset must have 5 frames");
  const LumaPlane ref = luminance(subset.frames[4]);
  SubsetMotion motion;
  for (std::size_t i = 0; i < 4; ++i) {
    const LumaPlane src = luminance(subset.frames[i]);
    FlowEstimate fwd = estimator.estimate(ref, src);
    const FlowEstimate back = estimator.estimate(src, ref);
    motion.masks[i] = mask_and(disocclusion_mask(fwd.field, back.field, estimator.fb_threshold()), fwd.verified);
    motion.flows[i] = std::move(fwd.field);
  }
  return motion;
}

inline SubsetMotion estimate_subset_motion(const TemporalSubset& subset, const FlowParams& params) {
  return estimate_subset_motion(subset, BlockMatchingEstimator(params));
}

/// Zero fields and all-valid masks: the "no motion compensation" ablation.
inline SubsetMotion identity_motion(int width, int height) {
  SubsetMotion m;
  for (std::size_t i = 0; i < 4; ++i) {
    m.flows[i] = MotionField(width, height);
    m.masks[i] = OcclusionMask(width, height, 1);
  }
  return m;
}

struct AlignedSubset {
  std::array<Frame, 4> warped;  // frames j..j+3 warped onto j+4, masked by D
  Frame reference;              // frame j+4, masked by D
  OcclusionMask combined;       // D = AND of the four masks

  /// The five aligned frames in temporal order.
  std::array<const Frame*, 5> frames() const {
    return {&warped[0], &warped[1], &warped[2], &warped[3], &reference};
  }
};

inline void zero_masked(Frame& frame, const OcclusionMask& mask) {
  auto px = frame.data();
  for (std::size_t i = 0; i < mask.valid.size(); ++i) {
    if (!mask.valid[i]) px[3 * i] = px[3 * i + 1] = px[3 * i + 2] = 0.0;
  }
}

inline AlignedSubset apply_alignment(const TemporalSubset& subset, const SubsetMotion& motion) {
  require(subset.frames.size() == SubsetParams::kLength, ErrorCode::InvalidArgument, "subset must have 5 frames");
  AlignedSubset out;
  out.combined = motion.masks[0];
  for (std::size_t i = 1; i < 4; ++i) out.combined = mask_and(out.combined, motion.masks[i]);
  require(out.combined.width == subset.frames[4].width() && out.combined.height == subset.frames[4].height(),
          ErrorCode::DimensionMismatch, "motion does not match subset size");
  for (std::size_t i = 0; i < 4; ++i) {
    out.warped[i] = warp(subset.frames[i], motion.flows[i]);
    zero_masked(out.warped[i], out.combined);
  }
  out.reference = subset.frames[4];
  zero_masked(out.reference, out.combined);
  return out;
}

inline AlignedSubset align_subset(const TemporalSubset& subset, const FlowParams& params) {
  return apply_alignment(subset, estimate_subset_motion(subset, params));
}

}  // namespace revq
