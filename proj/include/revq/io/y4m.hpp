#pragma once

// YUV4MPEG2 reader (8-bit 4:2:0, 4:4:4 and mono). Chroma is upsampled by
// sample replication; colour conversion uses the BT.709 matrix, limited range
// unless the stream carries XCOLORRANGE=FULL.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "revq/error.hpp"
#include "revq/media.hpp"

namespace revq::io {

enum class ChromaLayout { yuv420, yuv444, mono };

struct Y4mHeader {
  int width = 0;
  int height = 0;
  double fps = 60.0;
  ChromaLayout chroma = ChromaLayout::yuv420;
  bool full_range = false;
};

inline Y4mHeader parse_y4m_header(const std::string& line) {
  std::istringstream tokens(line);
  std::string tag;
  tokens >> tag;
  require(tag == "YUV4MPEG2", ErrorCode::MalformedHeader, "missing YUV4MPEG2 signature");
  Y4mHeader h;
  bool have_fps = false;
  while (tokens >> tag) {
    const char key = tag[0];
    const std::string value = tag.substr(1);
    try {
      switch (key) {
        case 'W': h.width = std::stoi(value); break;
        case 'H': h.height = std::stoi(value); break;
        case 'F': {
          const auto colon = value.find(':');
          require(colon != std::string::npos, ErrorCode::MalformedHeader, "bad frame rate " + value);
          const double num = std::stod(value.substr(0, colon));
          const double den = std::stod(value.substr(colon + 1));
          if (num > 0 && den > 0) {
            h.fps = num / den;
            have_fps = true;
          }
          break;
        }
        case 'C':
          if (value == "420" || value == "420jpeg" || value == "420mpeg2" || value == "420paldv") {
            h.chroma = ChromaLayout::yuv420;
          } else if (value == "444") {
            h.chroma = ChromaLayout::yuv444;
          } else if (value == "mono") {
            h.chroma = ChromaLayout::mono;
          } else {
            fail(ErrorCode::MalformedHeader, "unsupported chroma layout C" + value);
          }
          break;
        case 'X':
          if (value == "COLORRANGE=FULL") h.full_range = true;
          break;
        default:
          break;  // interlacing, aspect ratio and comments do not affect decoding
      }
    } catch (const std::logic_error&) {
      fail(ErrorCode::MalformedHeader, "unparseable header token " + tag);
    }
  }
  require(h.width > 0 && h.height > 0, ErrorCode::MalformedHeader, "header lacks positive W/H");
  if (!have_fps) h.fps = 60.0;
  return h;
}

namespace detail {

struct YuvToRgb {
  bool full_range;

  void operator()(int y, int u, int v, double* rgb) const {
    constexpr double kr = 0.2126, kb = 0.0722, kg = 1.0 - kr - kb;
    double luma, cb, cr;
    if (full_range) {
      luma = y / 255.0;
      cb = (u - 128) / 255.0;
      cr = (v - 128) / 255.0;
    } else {
      luma = (y - 16) / 219.0;
      cb = (u - 128) / 224.0;
      cr = (v - 128) / 224.0;
    }
    const double r = luma + 2.0 * (1.0 - kr) * cr;
    const double g = luma - 2.0 * (1.0 - kb) * kb / kg * cb - 2.0 * (1.0 - kr) * kr / kg * cr;
    const double b = luma + 2.0 * (1.0 - kb) * cb;
    rgb[0] = std::clamp(r, 0.0, 1.0);
    rgb[1] = std::clamp(g, 0.0, 1.0);
    rgb[2] = std::clamp(b, 0.0, 1.0);
  }
};

}  // namespace detail

inline Video read_y4m(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + path.string());
  std::string header_line;
  require(static_cast<bool>(std::getline(in, header_line)), ErrorCode::MalformedHeader, "empty y4m stream");
  const Y4mHeader header = parse_y4m_header(header_line);
  const int w = header.width;
  const int h = header.height;
  const int cw = header.chroma == ChromaLayout::yuv420 ? (w + 1) / 2 : w;
  const int ch = header.chroma == ChromaLayout::yuv420 ? (h + 1) / 2 : h;
  const std::size_t luma_bytes = static_cast<std::size_t>(w) * h;
  const std::size_t chroma_bytes = header.chroma == ChromaLayout::mono ? 0 : static_cast<std::size_t>(cw) * ch;

  Video video;
  video.fps = header.fps;
  const detail::YuvToRgb convert{header.full_range};
  std::vector<unsigned char> plane(luma_bytes + 2 * chroma_bytes);
  std::string frame_line;
  while (std::getline(in, frame_line)) {
    require(frame_line.rfind("FRAME", 0) == 0, ErrorCode::MalformedHeader, "expected FRAME marker");
    in.read(reinterpret_cast<char*>(plane.data()), static_cast<std::streamsize>(plane.size()));
    require(static_cast<std::size_t>(in.gcount()) == plane.size(), ErrorCode::MalformedHeader,
            "truncated frame " + std::to_string(video.frames.size()));
    Frame frame(w, h);
    auto out = frame.data();
    const unsigned char* ys = plane.data();
    const unsigned char* us = ys + luma_bytes;
    const unsigned char* vs = us + chroma_bytes;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        int u = 128, v = 128;
        if (header.chroma != ChromaLayout::mono) {
          const int cx = header.chroma == ChromaLayout::yuv420 ? x / 2 : x;
          const int cy = header.chroma == ChromaLayout::yuv420 ? y / 2 : y;
          u = us[static_cast<std::size_t>(cy) * cw + cx];
          v = vs[static_cast<std::size_t>(cy) * cw + cx];
        }
        convert(ys[static_cast<std::size_t>(y) * w + x], u, v, &out[(static_cast<std::size_t>(y) * w + x) * 3]);
      }
    }
    video.frames.push_back(std::move(frame));
  }
  require(!video.frames.empty(), ErrorCode::EmptyInput, path.string() + ": no frames");
  return video;
}

}  // namespace revq::io
