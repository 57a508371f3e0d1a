#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "revq/error.hpp"
#include "revq/media.hpp"
#include "revq/stats.hpp"

namespace revq {

/// Low-level descriptors of a video used to characterise a corpus.
struct AttributeVector {
  double contrast = 0.0;              // mean per-frame luma std
  double colorfulness = 0.0;          // mean per-frame Hasler-Suesstrunk M
  double temporal_information = 0.0;  // max over t of std(luma_t - luma_{t-1})
  double brightness = 0.0;            // mean luma
};

namespace detail {

inline double hasler_suesstrunk(const Frame& f) {
  const auto px = f.data();
  const std::size_t n = f.pixel_count();
  double sum_rg = 0, sum_yb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sum_rg += px[3 * i] - px[3 * i + 1];
    sum_yb += 0.5 * (px[3 * i] + px[3 * i + 1]) - px[3 * i + 2];
  }
  const double mu_rg = sum_rg / static_cast<double>(n);
  const double mu_yb = sum_yb / static_cast<double>(n);
  double var_rg = 0, var_yb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double rg = px[3 * i] - px[3 * i + 1] - mu_rg;
    const double yb = 0.5 * (px[3 * i] + px[3 * i + 1]) - px[3 * i + 2] - mu_yb;
    var_rg += rg * rg;
    var_yb += yb * yb;
  }
  var_rg /= static_cast<double>(n);
  var_yb /= static_cast<double>(n);
  return std::sqrt(var_rg + var_yb) + 0.3 * std::sqrt(mu_rg * mu_rg + mu_yb * mu_yb);
}

}  // namespace detail

inline AttributeVector compute_attributes(const Video& video) {
  require(!video.frames.empty(), ErrorCode::EmptyInput, "compute_attributes: no frames");
  AttributeVector a;
  LumaPlane previous;
  double luma_sum = 0.0;
  std::size_t luma_count = 0;
  for (std::size_t t = 0; t < video.frames.size(); ++t) {
    LumaPlane luma = luminance(video.frames[t]);
    for (double v : luma.values) luma_sum += v;
    luma_count += luma.values.size();
    a.contrast += population_std(luma.values);
    a.colorfulness += detail::hasler_suesstrunk(video.frames[t]);
    if (t > 0) {
      std::vector<double> diff(luma.values.size());
      bool any = false;
      for (std::size_t i = 0; i < diff.size(); ++i) {
        diff[i] = luma.values[i] - previous.values[i];
        any = any || diff[i] != 0.0;
      }
      // A uniform brightness change has zero spatial std, but it is still a
      // change between frames; keep TI = 0 reserved for identical frames.
      double ti = population_std(diff);
      if (any && ti == 0.0) ti = std::abs(diff.front());
      a.temporal_information = std::max(a.temporal_information, ti);
    }
    previous = std::move(luma);
  }
  const double z = static_cast<double>(video.frames.size());
  a.contrast /= z;
  a.colorfulness /= z;
  a.brightness = luma_sum / static_cast<double>(luma_count);
  return a;
}

}  // namespace revq
