#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "revq/error.hpp"
#include "revq/rng.hpp"

namespace revq {

/// Scene-level train/test assignment for one repetition.
struct SplitSpec {
  int repetition = 0;
  std::vector<std::string> train_scenes;  // sorted
  std::vector<std::string> test_scenes;   // sorted

  bool is_train(const std::string& scene) const {
    return std::binary_search(train_scenes.begin(), train_scenes.end(), scene);
  }
  bool is_test(const std::string& scene) const {
    return std::binary_search(test_scenes.begin(), test_scenes.end(), scene);
  }

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

inline void validate(const SplitSpec& s) {
  for (const auto& scene : s.train_scenes) {
    require(!s.is_test(scene), ErrorCode::InvalidArgument, "scene '" + scene + "' is in both train and test");
  }
}

/// `repetitions` random scene partitions with round(test_fraction * n) test
/// scenes each (at least one of each side).
inline std::vector<SplitSpec> make_splits(std::vector<std::string> scenes, int repetitions = 5,
                                          double test_fraction = 0.2, std::uint64_t seed = 0) {
  std::sort(scenes.begin(), scenes.end());
  scenes.erase(std::unique(scenes.begin(), scenes.end()), scenes.end());
  require(scenes.size() >= 2, ErrorCode::InvalidArgument, "need at least two scenes to split");
  require(repetitions >= 1, ErrorCode::InvalidArgument, "repetitions must be >= 1");
  require(test_fraction > 0.0 && test_fraction < 1.0, ErrorCode::InvalidArgument, "test_fraction must be in (0,1)");
  const auto n = scenes.size();
  const auto n_test = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n))),
                                              1, n - 1);
  std::vector<SplitSpec> out;
  for (int r = 0; r < repetitions; ++r) {
    std::vector<std::string> order = scenes;
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
    rng.shuffle(std::span<std::string>(order));
    SplitSpec s;
    s.repetition = r;
    s.test_scenes.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train_scenes.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    std::sort(s.test_scenes.begin(), s.test_scenes.end());
    std::sort(s.train_scenes.begin(), s.train_scenes.end());
    out.push_back(std::move(s));
  }
  return out;
}

inline nlohmann::ordered_json to_json(const SplitSpec& s) {
  nlohmann::ordered_json j;
  j["repetition"] = s.repetition;
  j["train"] = s.train_scenes;
  j["test"] = s.test_scenes;
  return j;
}

inline SplitSpec split_from_json(const nlohmann::json& j) {
  SplitSpec s;
  try {
    s.repetition = j.value("repetition", 0);
    s.train_scenes = j.at("train").get<std::vector<std::string>>();
    s.test_scenes = j.at("test").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("split: ") + e.what());
  }
  std::sort(s.train_scenes.begin(), s.train_scenes.end());
  std::sort(s.test_scenes.begin(), s.test_scenes.end());
  validate(s);
  return s;
}

/// A split file holds either one split object or an array of them.
inline std::vector<SplitSpec> load_splits(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  std::vector<SplitSpec> out;
  if (j.is_array()) {
    for (const auto& item : j) out.push_back(split_from_json(item));
  } else {
    out.push_back(split_from_json(j));
  }
  require(!out.empty(), ErrorCode::ParseError, path.string() + ": no splits");
  return out;
}

}  // namespace revq
