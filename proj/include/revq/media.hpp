#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "revq/error.hpp"

namespace revq {

/// RGB frame, row-major, interleaved channels, values in [0,1].
class Frame {
 public:
  static constexpr int kChannels = 3;

  Frame() = default;

  Frame(int width, int height) : width_(width), height_(height) {
    require(width >= 1 && height >= 1, ErrorCode::InvalidArgument, "frame dimensions must be >= 1");
    data_.assign(static_cast<std::size_t>(width) * height * kChannels, 0.0);
  }

  Frame(int width, int height, std::vector<double> data) : width_(width), height_(height), data_(std::move(data)) {
    require(width >= 1 && height >= 1, ErrorCode::InvalidArgument, "frame dimensions must be >= 1");
    require(data_.size() == static_cast<std::size_t>(width) * height * kChannels, ErrorCode::DimensionMismatch,
            "frame data length does not match width*height*3");
    for (double v : data_) {
      require(v >= 0.0 && v <= 1.0, ErrorCode::InvalidArgument, "frame values must lie in [0,1]");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const noexcept { return data_.empty(); }

  double at(int x, int y, int c) const { return data_[index(x, y, c)]; }
  double& at(int x, int y, int c) { return data_[index(x, y, c)]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  bool same_size(const Frame& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

enum class DisplayClass { smartphone, desktop1080, desktop2k, unknown };

inline std::string_view to_string(DisplayClass d) {
  switch (d) {
    case DisplayClass::smartphone: return "smartphone";
    case DisplayClass::desktop1080: return "desktop1080";
    case DisplayClass::desktop2k: return "desktop2k";
    case DisplayClass::unknown: return "unknown";
  }
  return "unknown";
}

inline DisplayClass display_class_from_string(std::string_view s) {
  if (s == "smartphone") return DisplayClass::smartphone;
  if (s == "desktop1080") return DisplayClass::desktop1080;
  if (s == "desktop2k") return DisplayClass::desktop2k;
  return DisplayClass::unknown;
}

struct Video {
  std::vector<Frame> frames;
  double fps = 60.0;
  std::string scene_id;
  DisplayClass display_class = DisplayClass::unknown;

  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
  std::size_t frame_count() const noexcept { return frames.size(); }

  friend bool operator==(const Video&, const Video&) = default;
};

inline void validate(const Video& video) {
  require(!video.frames.empty(), ErrorCode::EmptyInput, "video has no frames");
  require(video.fps > 0.0, ErrorCode::InvalidArgument, "fps must be positive");
  for (const Frame& f : video.frames) {
    require(f.same_size(video.frames.front()), ErrorCode::DimensionMismatch, "frames differ in size");
  }
}

/// Single-channel plane; also used for any per-pixel scalar map.
struct LumaPlane {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  LumaPlane() = default;
  LumaPlane(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const LumaPlane&, const LumaPlane&) = default;
};

inline constexpr double kLumaR = 0.2126;
inline constexpr double kLumaG = 0.7152;
inline constexpr double kLumaB = 0.0722;

/// BT.709 luma of every pixel.
inline LumaPlane luminance(const Frame& frame) {
  LumaPlane out(frame.width(), frame.height());
  const auto src = frame.data();
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = kLumaR * src[3 * i] + kLumaG * src[3 * i + 1] + kLumaB * src[3 * i + 2];
  }
  return out;
}

/// Copy of a rectangular region that must lie inside the frame.
inline Frame crop(const Frame& frame, int x0, int y0, int w, int h) {
  require(x0 >= 0 && y0 >= 0 && x0 + w <= frame.width() && y0 + h <= frame.height(), ErrorCode::InvalidArgument,
          "crop rectangle outside frame");
  Frame out(w, h);
  auto dst = out.data();
  const auto src = frame.data();
  for (int y = 0; y < h; ++y) {
    const auto row = src.subspan((static_cast<std::size_t>(y0 + y) * frame.width() + x0) * 3, static_cast<std::size_t>(w) * 3);
    std::copy(row.begin(), row.end(), dst.begin() + static_cast<std::ptrdiff_t>(y) * w * 3);
  }
  return out;
}

}  // namespace revq
