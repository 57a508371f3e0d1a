#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "revq/attributes.hpp"
#include "revq/rng.hpp"
#include "revq/synthetic.hpp"

using namespace revq;

namespace {

// Scalar loop oracle written directly from the attribute definitions.
AttributeVector oracle_attributes(const Video& v) {
  AttributeVector a;
  const int w = v.width(), h = v.height();
  const double n = static_cast<double>(w) * h;
  auto luma = [](const Frame& f, int x, int y) {
    return 0.2126 * f.at(x, y, 0) + 0.7152 * f.at(x, y, 1) + 0.0722 * f.at(x, y, 2);
  };
  double total = 0;
  for (std::size_t t = 0; t < v.frames.size(); ++t) {
    const Frame& f = v.frames[t];
    double s = 0, s2 = 0, rg = 0, yb = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        s += luma(f, x, y);
        rg += f.at(x, y, 0) - f.at(x, y, 1);
        yb += (f.at(x, y, 0) + f.at(x, y, 1)) / 2 - f.at(x, y, 2);
      }
    }
    const double m = s / n, mrg = rg / n, myb = yb / n;
    double vrg = 0, vyb = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        s2 += (luma(f, x, y) - m) * (luma(f, x, y) - m);
        const double a1 = f.at(x, y, 0) - f.at(x, y, 1) - mrg;
        const double a2 = (f.at(x, y, 0) + f.at(x, y, 1)) / 2 - f.at(x, y, 2) - myb;
        vrg += a1 * a1;
        vyb += a2 * a2;
      }
    }
    total += s;
    a.contrast += std::sqrt(s2 / n);
    a.colorfulness += std::sqrt(vrg / n + vyb / n) + 0.3 * std::sqrt(mrg * mrg + myb * myb);
    if (t > 0) {
      const Frame& p = v.frames[t - 1];
      double ds = 0;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) ds += luma(f, x, y) - luma(p, x, y);
      }
      const double dm = ds / n;
      double dv = 0;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double d = luma(f, x, y) - luma(p, x, y) - dm;
          dv += d * d;
        }
      }
      a.temporal_information = std::max(a.temporal_information, std::sqrt(dv / n));
    }
  }
  const double z = static_cast<double>(v.frames.size());
  a.contrast /= z;
  a.colorfulness /= z;
  a.brightness = total / (n * z);
  return a;
}

}  // namespace

TEST(Attributes, ConstantGreyVideo) {
  const auto a = compute_attributes(synth::solid_video(16, 16, 4, 0.5, 0.5, 0.5));
  EXPECT_NEAR(a.brightness, 0.5, 1e-15);
  EXPECT_NEAR(a.contrast, 0.0, 1e-15);
  EXPECT_NEAR(a.colorfulness, 0.0, 1e-15);
  EXPECT_EQ(a.temporal_information, 0.0);
}

TEST(Attributes, ToggledCheckerboardHasPositiveTi) {
  Video v = synth::solid_video(16, 16, 2, 0.2, 0.2, 0.2);
  for (int y = 0; y < 16; ++y) {
    for (int x = 8; x < 16; ++x) {
      if ((x + y) % 2 == 0) {
        for (int c = 0; c < 3; ++c) v.frames[1].at(x, y, c) = 0.9;
      }
    }
  }
  EXPECT_GT(compute_attributes(v).temporal_information, 0.0);
}

TEST(Attributes, MatchLoopOracleOnRandomVideos) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Video v = synth::noise_video(8, 8, 3, seed);
    const auto a = compute_attributes(v);
    const auto o = oracle_attributes(v);
    EXPECT_NEAR(a.brightness, o.brightness, 1e-9);
    EXPECT_NEAR(a.contrast, o.contrast, 1e-9);
    EXPECT_NEAR(a.colorfulness, o.colorfulness, 1e-9);
    EXPECT_NEAR(a.temporal_information, o.temporal_information, 1e-9);
  }
}

TEST(Attributes, SingleFrameHasZeroTi) {
  EXPECT_EQ(compute_attributes(synth::noise_video(8, 8, 1, 3)).temporal_information, 0.0);
}

TEST(Attributes, UniformBrightnessStepStillCountsAsChange) {
  Video v = synth::solid_video(8, 8, 2, 0.3, 0.3, 0.3);
  for (double& x : v.frames[1].data()) x = 0.4;
  EXPECT_GT(compute_attributes(v).temporal_information, 0.0);
}

TEST(Attributes, TiZeroExactlyWhenFramesIdentical) {
  Video v = synth::noise_video(8, 8, 1, 9);
  v.frames.push_back(v.frames[0]);
  v.frames.push_back(v.frames[0]);
  EXPECT_EQ(compute_attributes(v).temporal_information, 0.0);
  v.frames[2].at(3, 3, 1) = 0.5 * v.frames[2].at(3, 3, 1) + 0.25;
  EXPECT_GT(compute_attributes(v).temporal_information, 0.0);
}

TEST(Attributes, FrameOrderOnlyAffectsTi) {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    Video v = synth::noise_video(6, 5, 6, static_cast<std::uint64_t>(trial));
    Video shuffled = v;
    rng.shuffle(std::span<Frame>(shuffled.frames));
    const auto a = compute_attributes(v), b = compute_attributes(shuffled);
    EXPECT_NEAR(a.brightness, b.brightness, 1e-12);
    EXPECT_NEAR(a.contrast, b.contrast, 1e-12);
    EXPECT_NEAR(a.colorfulness, b.colorfulness, 1e-12);
  }
}

TEST(Attributes, EmptyVideoIsRejected) { EXPECT_THROW(compute_attributes(Video{}), Error); }
