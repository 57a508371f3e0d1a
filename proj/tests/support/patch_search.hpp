#pragma once

// Brute-force locator for fragment patches. Every (frame, x, y) position of the
// source is indexed by its top-left red value, and each candidate is compared
// pixel by pixel, so a match is found iff an exact copy exists anywhere.

#include <unordered_map>
#include <vector>

#include "revq/media.hpp"
#include "revq/sampling.hpp"

namespace oracle {

class PatchIndex {
 public:
  PatchIndex(const revq::Video& video, int patch) : video_(video), k_(patch) {
    for (int f = 0; f < static_cast<int>(video.frames.size()); ++f) {
      const auto& fr = video.frames[static_cast<std::size_t>(f)];
      for (int y = 0; y + k_ <= fr.height(); ++y) {
        for (int x = 0; x + k_ <= fr.width(); ++x) index_.emplace(fr.at(x, y, 0), revq::PatchOrigin{f, x, y});
      }
    }
  }

  /// Every source position whose k x k patch equals the patch at (px, py) of `frame`.
  std::vector<revq::PatchOrigin> find(const revq::Frame& frame, int px, int py) const {
    std::vector<revq::PatchOrigin> hits;
    const auto [lo, hi] = index_.equal_range(frame.at(px, py, 0));
    for (auto it = lo; it != hi; ++it) {
      const auto& o = it->second;
      const auto& src = video_.frames[static_cast<std::size_t>(o.source_frame)];
      bool same = true;
      for (int y = 0; y < k_ && same; ++y) {
        for (int x = 0; x < k_ && same; ++x) {
          for (int c = 0; c < 3 && same; ++c) same = src.at(o.x + x, o.y + y, c) == frame.at(px + x, py + y, c);
        }
      }
      if (same) hits.push_back(o);
    }
    return hits;
  }

 private:
  const revq::Video& video_;
  int k_;
  std::unordered_multimap<double, revq::PatchOrigin> index_;
};

/// True iff every patch of `frag` is found in `video` exactly and only at its
/// recorded provenance.
inline bool provenance_verified(const revq::Video& video, const revq::FragmentVideo& frag) {
  const PatchIndex index(video, frag.patch);
  for (std::size_t f = 0; f < frag.frames.size(); ++f) {
    for (int v = 0; v < frag.grid; ++v) {
      for (int u = 0; u < frag.grid; ++u) {
        const auto hits = index.find(frag.frames[f], u * frag.patch, v * frag.patch);
        if (hits.size() != 1 || !(hits.front() == frag.origin(f, u, v))) return false;
      }
    }
  }
  return true;
}

}  // namespace oracle
