#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "revq/error.hpp"
#include "revq/io/image.hpp"
#include "revq/io/y4m.hpp"
#include "revq/media.hpp"

namespace revq::io {

enum class VideoFormat { y4m, image_sequence };

inline VideoFormat detect_format(const std::filesystem::path& path) {
  return std::filesystem::is_directory(path) ? VideoFormat::image_sequence : VideoFormat::y4m;
}

/// Sidecar location: `meta.json` inside a sequence directory, `<stem>.meta.json`
/// next to a y4m file.
inline std::filesystem::path sidecar_path(const std::filesystem::path& path, VideoFormat format) {
  if (format == VideoFormat::image_sequence) return path / "meta.json";
  auto p = path;
  p.replace_extension(".meta.json");
  return p;
}

inline void apply_sidecar(Video& video, const std::filesystem::path& meta) {
  if (!std::filesystem::exists(meta)) return;
  std::ifstream in(meta);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedHeader, meta.string() + ": " + e.what());
  }
  if (j.contains("fps")) {
    require(j["fps"].is_number() && j["fps"].get<double>() > 0, ErrorCode::MalformedHeader,
            meta.string() + ": fps must be a positive number");
    video.fps = j["fps"].get<double>();
  }
  if (j.contains("scene_id")) video.scene_id = j["scene_id"].get<std::string>();
  if (j.contains("display_class")) video.display_class = display_class_from_string(j["display_class"].get<std::string>());
}

inline Video load_image_sequence(const std::filesystem::path& dir) {
  require(std::filesystem::is_directory(dir), ErrorCode::IoError, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
  require(!files.empty(), ErrorCode::EmptyInput, dir.string() + ": no image files");
  Video video;
  video.frames.reserve(files.size());
  for (const auto& f : files) {
    Frame frame = read_image(f);
    if (!video.frames.empty()) {
      require(frame.same_size(video.frames.front()), ErrorCode::DimensionMismatch,
              f.filename().string() + " differs in size from the first frame");
    }
    video.frames.push_back(std::move(frame));
  }
  return video;
}

/// Decodes a whole video. fps comes from the container (y4m), then the sidecar,
/// falling back to 60.
inline Video load_video(const std::filesystem::path& path, std::optional<VideoFormat> format = std::nullopt) {
  require(std::filesystem::exists(path), ErrorCode::IoError, path.string() + " does not exist");
  const VideoFormat fmt = format.value_or(detect_format(path));
  Video video = fmt == VideoFormat::y4m ? read_y4m(path) : load_image_sequence(path);
  apply_sidecar(video, sidecar_path(path, fmt));
  validate(video);
  return video;
}

enum class ImageFormat { png, ppm };

/// Writes frames as `000000.png`, `000001.png`, ... plus meta.json.
inline void write_image_sequence(const Video& video, const std::filesystem::path& dir,
                                 ImageFormat format = ImageFormat::png) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < video.frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.%s", i, format == ImageFormat::png ? "png" : "ppm");
    if (format == ImageFormat::png) {
      write_png(video.frames[i], dir / name);
    } else {
      write_ppm(video.frames[i], dir / name);
    }
  }
  nlohmann::ordered_json meta;
  meta["fps"] = video.fps;
  meta["scene_id"] = video.scene_id;
  meta["display_class"] = std::string(to_string(video.display_class));
  std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
}

}  // namespace revq::io
