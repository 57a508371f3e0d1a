#pragma once

// Still-image reading and writing for lossless image sequences (PNG via libpng,
// binary PPM by hand). Pixels are converted to/from the [0,1] Frame range with
// a /255 (or /65535 for 16-bit) normalization.

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "revq/error.hpp"
#include "revq/media.hpp"

namespace revq::io {

namespace detail {

inline std::uint8_t to_u8(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

inline void skip_ppm_space(std::istream& in) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in.get();
    } else {
      return;
    }
  }
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace detail

inline Frame read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + path.string());
  std::string magic;
  in >> magic;
  require(magic == "P6", ErrorCode::MalformedHeader, path.string() + ": only binary P6 PPM is supported");
  int w = 0, h = 0, maxval = 0;
  detail::skip_ppm_space(in);
  in >> w;
  detail::skip_ppm_space(in);
  in >> h;
  detail::skip_ppm_space(in);
  in >> maxval;
  require(in && w > 0 && h > 0 && maxval > 0 && maxval < 65536, ErrorCode::MalformedHeader,
          path.string() + ": bad PPM header");
  in.get();  // single whitespace before raster
  const std::size_t samples = static_cast<std::size_t>(w) * h * 3;
  std::vector<double> data(samples);
  if (maxval < 256) {
    std::vector<unsigned char> raw(samples);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(samples));
    require(static_cast<std::size_t>(in.gcount()) == samples, ErrorCode::MalformedHeader,
            path.string() + ": truncated PPM raster");
    for (std::size_t i = 0; i < samples; ++i) data[i] = raw[i] / static_cast<double>(maxval);
  } else {
    std::vector<unsigned char> raw(samples * 2);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(static_cast<std::size_t>(in.gcount()) == raw.size(), ErrorCode::MalformedHeader,
            path.string() + ": truncated PPM raster");
    for (std::size_t i = 0; i < samples; ++i) {
      data[i] = ((raw[2 * i] << 8) | raw[2 * i + 1]) / static_cast<double>(maxval);
    }
  }
  return Frame(w, h, std::move(data));
}

inline void write_ppm(const Frame& frame, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + path.string());
  out << "P6\n" << frame.width() << ' ' << frame.height() << "\n255\n";
  std::vector<char> raw(frame.data().size());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<char>(detail::to_u8(frame.data()[i]));
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
}

inline Frame read_png(const std::filesystem::path& path) {
  detail::FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  require(fp != nullptr, ErrorCode::IoError, "cannot open " + path.string());
  unsigned char sig[8];
  require(std::fread(sig, 1, 8, fp.get()) == 8 && png_sig_cmp(sig, 0, 8) == 0, ErrorCode::MalformedHeader,
          path.string() + ": not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  require(png && info, ErrorCode::IoError, "libpng initialisation failed");
  // Everything with a destructor lives outside the setjmp scope.
  std::vector<double> data;
  std::vector<unsigned char> raster;
  std::vector<png_bytep> rows;
  volatile int w = 0, h = 0;  // read after the setjmp scope
  volatile bool ok = false;  // survives the libpng longjmp
  if (setjmp(png_jmpbuf(png)) == 0) {
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    w = static_cast<int>(png_get_image_width(png, info));
    h = static_cast<int>(png_get_image_height(png, info));
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    if (depth == 16) png_set_swap(png);  // little-endian host order
    png_read_update_info(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    raster.resize(rowbytes * static_cast<std::size_t>(h));
    rows.resize(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = raster.data() + rowbytes * static_cast<std::size_t>(y);
    png_read_image(png, rows.data());
    data.resize(static_cast<std::size_t>(w) * h * 3);
    if (depth == 16) {
      for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = (raster[2 * i] | (raster[2 * i + 1] << 8)) / 65535.0;
      }
    } else {
      for (int y = 0; y < h; ++y) {
        for (std::size_t i = 0; i < static_cast<std::size_t>(w) * 3; ++i) {
          data[static_cast<std::size_t>(y) * w * 3 + i] = rows[static_cast<std::size_t>(y)][i] / 255.0;
        }
      }
    }
    ok = true;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  require(ok, ErrorCode::MalformedHeader, path.string() + ": corrupt PNG data");
  return Frame(w, h, std::move(data));
}

/// 8-bit RGB PNG. Also used for the single-channel debug strips (gray replicated).
inline void write_png(const Frame& frame, const std::filesystem::path& path) {
  detail::FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  require(fp != nullptr, ErrorCode::IoError, "cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  require(png && info, ErrorCode::IoError, "libpng initialisation failed");
  const int w = frame.width();
  const int h = frame.height();
  std::vector<unsigned char> raster(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < raster.size(); ++i) raster[i] = detail::to_u8(frame.data()[i]);
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = raster.data() + static_cast<std::size_t>(y) * w * 3;
  volatile bool ok = false;  // survives the libpng longjmp
  if (setjmp(png_jmpbuf(png)) == 0) {
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    ok = true;
  }
  png_destroy_write_struct(&png, &info);
  require(ok, ErrorCode::IoError, "failed writing " + path.string());
}

inline Frame read_image(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".png" || ext == ".PNG") return read_png(path);
  if (ext == ".ppm" || ext == ".PPM") return read_ppm(path);
  fail(ErrorCode::MalformedHeader, path.string() + ": unsupported image extension");
}

inline bool is_image_file(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".png" || ext == ".PNG" || ext == ".ppm" || ext == ".PPM";
}

}  // namespace revq::io
