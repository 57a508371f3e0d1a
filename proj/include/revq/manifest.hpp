#pragma once

// Dataset manifest: a JSON array of
//   {video_path, scene_id, oa_mos, ts_mos?, display_class?, video_id?}
// Relative paths resolve against the manifest's directory. video_id defaults
// to the file stem (or directory name) of video_path.

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "revq/error.hpp"
#include "revq/media.hpp"

namespace revq {

struct ManifestEntry {
  std::filesystem::path video_path;
  std::string video_id;
  std::string scene_id;
  double oa_mos = 0.0;
  std::optional<double> ts_mos;
  DisplayClass display_class = DisplayClass::unknown;
};

inline std::string default_video_id(const std::filesystem::path& p) {
  auto clean = p;
  if (!clean.has_filename()) clean = clean.parent_path();
  return clean.stem().string();
}

inline std::vector<ManifestEntry> parse_manifest(const nlohmann::json& j, const std::filesystem::path& base) {
  require(j.is_array(), ErrorCode::ParseError, "manifest must be a JSON array");
  std::vector<ManifestEntry> out;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& item = j[i];
    const std::string where = "manifest entry " + std::to_string(i);
    ManifestEntry e;
    try {
      std::filesystem::path p = item.at("video_path").get<std::string>();
      e.video_path = p.is_absolute() ? p : base / p;
      e.scene_id = item.at("scene_id").get<std::string>();
      e.oa_mos = item.at("oa_mos").get<double>();
      if (item.contains("ts_mos") && !item["ts_mos"].is_null()) e.ts_mos = item["ts_mos"].get<double>();
      if (item.contains("display_class")) e.display_class = display_class_from_string(item["display_class"].get<std::string>());
      e.video_id = item.contains("video_id") ? item["video_id"].get<std::string>() : default_video_id(p);
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorCode::ParseError, where + ": " + ex.what());
    }
    require(!e.video_id.empty(), ErrorCode::ParseError, where + ": empty video_id");
    require(ids.insert(e.video_id).second, ErrorCode::ParseError, where + ": duplicate video_id '" + e.video_id + "'");
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return parse_manifest(j, path.parent_path());
}

inline nlohmann::ordered_json to_json(const ManifestEntry& e) {
  nlohmann::ordered_json j;
  j["video_path"] = e.video_path.string();
  j["video_id"] = e.video_id;
  j["scene_id"] = e.scene_id;
  j["oa_mos"] = e.oa_mos;
  if (e.ts_mos) j["ts_mos"] = *e.ts_mos;
  j["display_class"] = std::string(to_string(e.display_class));
  return j;
}

inline std::vector<std::string> manifest_scenes(const std::vector<ManifestEntry>& entries) {
  std::set<std::string> s;
  for (const auto& e : entries) s.insert(e.scene_id);
  return {s.begin(), s.end()};
}

}  // namespace revq
