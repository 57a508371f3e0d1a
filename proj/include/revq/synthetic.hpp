#pragma once

// Procedural test content: textured canvases, panning clips with optional
// per-pixel temporal flicker, and solid-colour videos.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "revq/error.hpp"
#include "revq/media.hpp"
#include "revq/rng.hpp"

namespace revq::synth {

/// Three-channel texture in [0,1]: white noise, box-blurred twice with
/// wraparound, stretched to span [0.5 - contrast/2, 0.5 + contrast/2] per channel.
struct Canvas {
  int width = 0;
  int height = 0;
  std::vector<double> rgb;  // interleaved

  double at(int x, int y, int c) const {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + static_cast<std::size_t>(c)];
  }
};

inline Canvas textured_canvas(int width, int height, double contrast, std::uint64_t seed, int blur_radius = 2) {
  require(width >= 1 && height >= 1, ErrorCode::InvalidArgument, "canvas must be non-empty");
  require(contrast >= 0.0 && contrast <= 1.0, ErrorCode::InvalidArgument, "contrast must be in [0,1]");
  Rng rng(mix_seed(seed, 0xCA));
  const auto n = static_cast<std::size_t>(width) * height;
  Canvas out{width, height, std::vector<double>(n * 3)};
  std::vector<double> plane(n), tmp(n);
  for (int c = 0; c < 3; ++c) {
    for (double& v : plane) v = rng.uniform01();
    for (int pass = 0; pass < 2; ++pass) {
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          double s = 0.0;
          for (int d = -blur_radius; d <= blur_radius; ++d) s += plane[static_cast<std::size_t>(y) * width + (x + d + width) % width];
          tmp[static_cast<std::size_t>(y) * width + x] = s / (2 * blur_radius + 1);
        }
      }
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          double s = 0.0;
          for (int d = -blur_radius; d <= blur_radius; ++d) s += tmp[static_cast<std::size_t>((y + d + height) % height) * width + x];
          plane[static_cast<std::size_t>(y) * width + x] = s / (2 * blur_radius + 1);
        }
      }
    }
    const auto [lo, hi] = std::minmax_element(plane.begin(), plane.end());
    const double range = *hi - *lo;
    for (std::size_t p = 0; p < n; ++p) {
      const double unit = range > 0.0 ? (plane[p] - *lo) / range : 0.5;
      out.rgb[p * 3 + static_cast<std::size_t>(c)] = 0.5 + contrast * (unit - 0.5);
    }
  }
  return out;
}

struct PanParams {
  int width = 64;
  int height = 64;
  int frames = 60;
  int vx = 1;  // content displacement per frame, pixels
  int vy = 0;
  double contrast = 0.6;
  double flicker_amplitude = 0.0;  // per-pixel uniform noise in [-a, a], fresh every frame
  std::uint64_t seed = 0;
  int blur_radius = 2;  // texture smoothness; 1 gives block matching more to lock onto
};

/// Window moving over a fixed canvas so that content at p in frame t sits at
/// p + (vx, vy) in frame t + 1.
inline Video panning_video(const PanParams& p) {
  require(p.frames >= 1, ErrorCode::InvalidArgument, "frames must be >= 1");
  require(p.flicker_amplitude >= 0.0, ErrorCode::InvalidArgument, "flicker amplitude must be >= 0");
  const int travel_x = std::abs(p.vx) * (p.frames - 1);
  const int travel_y = std::abs(p.vy) * (p.frames - 1);
  const Canvas canvas = textured_canvas(p.width + travel_x, p.height + travel_y, p.contrast, p.seed, p.blur_radius);
  Rng noise(mix_seed(p.seed, 0xF1));
  Video v;
  for (int t = 0; t < p.frames; ++t) {
    // Window origin moves opposite to the content.
    const int ox = p.vx >= 0 ? travel_x - p.vx * t : -p.vx * t;
    const int oy = p.vy >= 0 ? travel_y - p.vy * t : -p.vy * t;
    Frame f(p.width, p.height);
    for (int y = 0; y < p.height; ++y) {
      for (int x = 0; x < p.width; ++x) {
        const double n = p.flicker_amplitude > 0.0 ? noise.uniform(-p.flicker_amplitude, p.flicker_amplitude) : 0.0;
        for (int c = 0; c < 3; ++c) f.at(x, y, c) = std::clamp(canvas.at(x + ox, y + oy, c) + n, 0.0, 1.0);
      }
    }
    v.frames.push_back(std::move(f));
  }
  return v;
}

inline Video solid_video(int width, int height, int frames, double r, double g, double b) {
  Video v;
  for (int t = 0; t < frames; ++t) {
    Frame f(width, height);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        f.at(x, y, 0) = r;
        f.at(x, y, 1) = g;
        f.at(x, y, 2) = b;
      }
    }
    v.frames.push_back(std::move(f));
  }
  return v;
}

/// Frame filled with unique-ish random values, for provenance checks.
inline Video noise_video(int width, int height, int frames, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x40));
  Video v;
  for (int t = 0; t < frames; ++t) {
    Frame f(width, height);
    for (double& x : f.data()) x = rng.uniform01();
    v.frames.push_back(std::move(f));
  }
  return v;
}

}  // namespace revq::synth
