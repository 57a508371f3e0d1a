// revq: command-line front end for scoring, training, evaluation, dataset
// tooling, motion precomputation and the annotation server.
//
// Exit codes: 0 success, 1 some inputs failed, 2 usage or configuration error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "revq/annotation/http.hpp"
#include "revq/annotation/service.hpp"
#include "revq/annotations.hpp"
#include "revq/attributes.hpp"
#include "revq/calibration.hpp"
#include "revq/csv.hpp"
#include "revq/error.hpp"
#include "revq/evaluation.hpp"
#include "revq/io/image.hpp"
#include "revq/io/video_io.hpp"
#include "revq/manifest.hpp"
#include "revq/model.hpp"
#include "revq/motion_cache.hpp"
#include "revq/nn/checkpoint.hpp"
#include "revq/parallel.hpp"
#include "revq/split.hpp"
#include "revq/synthetic.hpp"
#include "revq/training.hpp"

namespace fs = std::filesystem;
using namespace revq;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;

// Thrown for configuration mistakes detected by the CLI itself.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- --set overrides ------------------------------------------------------

struct TrainSettings {
  int batch_size = 16;
  double learning_rate = 1e-3;
  double alpha = kRankingWeight;
  int epochs = 30;
  int pretrain_epochs = 30;
  bool freeze_stream_b = false;
};

nlohmann::json parse_value_like(const std::string& key, const std::string& text, const nlohmann::json& like) {
  try {
    if (like.is_boolean()) {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw UsageError("");
    }
    if (like.is_number_integer()) {
      std::size_t used = 0;
      const long long v = std::stoll(text, &used);
      if (used != text.size()) throw UsageError("");
      return v;
    }
    if (like.is_number()) {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw UsageError("");
      return v;
    }
    if (like.is_array()) {
      nlohmann::json arr = nlohmann::json::array();
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) arr.push_back(parse_value_like(key, item, 0));
      return arr;
    }
    return text;
  } catch (const std::logic_error&) {
    throw UsageError("--set " + key + ": cannot parse '" + text + "'");
  } catch (const UsageError&) {
    throw UsageError("--set " + key + ": cannot parse '" + text + "'");
  }
}

/// Applies `key=value` pairs: `train.*` keys go to the training settings, the
/// rest are dotted paths into the model config JSON. Unknown keys are errors.
void apply_overrides(const std::vector<std::string>& sets, nlohmann::json& model, TrainSettings* train) {
  nlohmann::json t = {{"batch_size", train ? train->batch_size : 0},
                      {"lr", train ? train->learning_rate : 0.0},
                      {"alpha", train ? train->alpha : 0.0},
                      {"epochs", train ? train->epochs : 0},
                      {"pretrain_epochs", train ? train->pretrain_epochs : 0},
                      {"freeze_stream_b", train ? train->freeze_stream_b : false}};
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + s + "'");
    const std::string key = s.substr(0, eq);
    const std::string value = s.substr(eq + 1);
    if (key.starts_with("train.")) {
      const std::string field = key.substr(6);
      if (!train || !t.contains(field)) throw UsageError("unknown --set key '" + key + "'");
      t[field] = parse_value_like(key, value, t[field]);
      continue;
    }
    if (key == "fusion_widths") throw UsageError("fusion_widths follow stability_widths and cannot be set");
    nlohmann::json* node = &model;
    std::stringstream path(key);
    std::string part;
    while (std::getline(path, part, '.')) {
      if (!node->is_object() || !node->contains(part)) throw UsageError("unknown --set key '" + key + "'");
      node = &(*node)[part];
    }
    *node = parse_value_like(key, value, *node);
  }
  if (train) {
    train->batch_size = t["batch_size"].get<int>();
    train->learning_rate = t["lr"].get<double>();
    train->alpha = t["alpha"].get<double>();
    train->epochs = t["epochs"].get<int>();
    train->pretrain_epochs = t["pretrain_epochs"].get<int>();
    train->freeze_stream_b = t["freeze_stream_b"].get<bool>();
  }
}

ModelConfig model_config_with(const std::vector<std::string>& sets, TrainSettings* train = nullptr,
                              const ModelConfig& base = {}) {
  nlohmann::json j = to_json(base);
  apply_overrides(sets, j, train);
  try {
    ModelConfig c = model_config_from_json(j);
    validate(c);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad --set value: ") + e.what());
  } catch (const Error& e) {
    throw UsageError(std::string("invalid model config: ") + e.what());
  }
}

// ---- inputs ---------------------------------------------------------------

struct VideoInput {
  fs::path path;
  std::string video_id;
};

std::vector<VideoInput> collect_inputs(const std::vector<std::string>& videos, const std::string& manifest) {
  std::vector<VideoInput> out;
  if (!manifest.empty()) {
    for (const auto& e : load_manifest(manifest)) out.push_back({e.video_path, e.video_id});
  }
  for (const auto& v : videos) out.push_back({v, default_video_id(v)});
  if (out.empty()) throw UsageError("no input videos (pass paths or --manifest)");
  return out;
}

std::optional<fs::path> resolve_cache_dir(const std::string& flag) {
  if (!flag.empty()) return fs::path(flag);
  if (const char* env = std::getenv("REVQ_CACHE_DIR"); env != nullptr && *env != '\0') return fs::path(env);
  return std::nullopt;
}

std::optional<MotionCache> try_load_cache(const std::optional<fs::path>& dir, const std::string& video_id,
                                          std::uint64_t seed) {
  if (!dir) return std::nullopt;
  const fs::path p = *dir / cache_file_name(video_id, seed);
  if (!fs::exists(p)) return std::nullopt;
  return load_motion_cache(p);
}

VideoFeatures features_for(const VideoInput& in, const ModelConfig& config, std::uint64_t seed,
                           const std::optional<fs::path>& cache_dir) {
  const Video video = io::load_video(in.path);
  const auto cache = try_load_cache(cache_dir, in.video_id, seed);
  return extract_features(video, in.video_id, config, seed, cache ? &*cache : nullptr);
}

std::string describe(const std::exception& e) {
  std::string s = e.what();
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

// Writes to a file, or stdout for "-" or an empty path.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
      file_.open(path, std::ios::binary);
      require(static_cast<bool>(file_), ErrorCode::IoError, "cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

// ---- training data --------------------------------------------------------

std::vector<TrainExample> load_examples(const std::vector<ManifestEntry>& entries, const ModelConfig& config,
                                        std::uint64_t seed, int jobs, const std::optional<fs::path>& cache_dir,
                                        const std::function<bool(const ManifestEntry&)>& wanted) {
  std::vector<const ManifestEntry*> chosen;
  for (const auto& e : entries) {
    if (wanted(e)) chosen.push_back(&e);
  }
  std::vector<TrainExample> out(chosen.size());
  std::vector<std::string> errors(chosen.size());
  parallel_for(chosen.size(), jobs, [&](std::size_t i) {
    try {
      const ManifestEntry& e = *chosen[i];
      out[i].features = features_for({e.video_path, e.video_id}, config, seed, cache_dir);
      out[i].scene_id = e.scene_id;
      out[i].oa_mos = e.oa_mos;
      out[i].ts_mos = e.ts_mos;
    } catch (const std::exception& ex) {
      errors[i] = chosen[i]->video_id + ": " + describe(ex);
    }
  });
  for (const auto& err : errors) {
    if (!err.empty()) fail(ErrorCode::IoError, err);
  }
  return out;
}

SplitSpec choose_split(const std::string& split_path, int repetition, const std::vector<ManifestEntry>& entries,
                       bool all_train) {
  if (split_path.empty()) {
    SplitSpec s;
    const auto scenes = manifest_scenes(entries);
    (all_train ? s.train_scenes : s.test_scenes) = scenes;
    return s;
  }
  const auto splits = load_splits(split_path);
  if (repetition < 0 || static_cast<std::size_t>(repetition) >= splits.size()) {
    throw UsageError("--repetition " + std::to_string(repetition) + " out of range (file has " +
                     std::to_string(splits.size()) + ")");
  }
  return splits[static_cast<std::size_t>(repetition)];
}

// ---- subcommands ----------------------------------------------------------

struct ScoreArgs {
  std::vector<std::string> videos;
  std::string manifest, model, out, rescale_to, cache_dir;
  std::uint64_t seed = 0;
  int jobs = 1;
};

int cmd_score(const ScoreArgs& a) {
  const QualityModel model = load_checkpoint(a.model);
  const auto inputs = collect_inputs(a.videos, a.manifest);
  const auto cache_dir = resolve_cache_dir(a.cache_dir);
  std::vector<std::optional<Scores>> scores(inputs.size());
  std::vector<std::string> errors(inputs.size());
  parallel_for(inputs.size(), a.jobs, [&](std::size_t i) {
    try {
      scores[i] = model.score(features_for(inputs[i], model.config(), a.seed, cache_dir));
    } catch (const std::exception& e) {
      errors[i] = describe(e);
    }
  });

  std::vector<double> q_pred(inputs.size(), 0.0);
  std::vector<double> ok_preds;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (scores[i]) {
      q_pred[i] = scores[i]->q_pred;
      ok_preds.push_back(scores[i]->q_pred);
    }
  }
  if (!a.rescale_to.empty() && !ok_preds.empty()) {
    std::ifstream in(a.rescale_to);
    require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + a.rescale_to);
    std::vector<double> reference;
    for (const auto& m : read_mos_csv(in)) reference.push_back(m.oa_mos);
    require(!reference.empty(), ErrorCode::EmptyInput, a.rescale_to + " holds no MOS rows");
    const auto rescaled = rescale_predictions(ok_preds, reference);
    std::size_t k = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (scores[i]) q_pred[i] = rescaled[k++];
    }
  }

  Output out(a.out);
  std::ostream& os = out.stream();
  os << "video_id,q_a,q_b,q_pred,errors\n";
  bool any_failed = false;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    os << csv::escape(inputs[i].video_id) << ',';
    if (scores[i]) {
      os << csv::format_double(scores[i]->q_a) << ',' << csv::format_double(scores[i]->q_b) << ','
         << csv::format_double(q_pred[i]) << ",\n";
    } else {
      any_failed = true;
      os << ",,," << csv::escape(errors[i]) << '\n';
      std::cerr << "revq score: " << inputs[i].video_id << ": " << errors[i] << '\n';
    }
  }
  return any_failed ? kExitPartial : kExitOk;
}

struct TrainArgs {
  std::string manifest, split, out, log, init, stage = "full", cache_dir;
  std::vector<std::string> sets;
  int repetition = 0;
  std::uint64_t seed = 0;
  int jobs = 1;
};

int cmd_train(const TrainArgs& a) {
  if (a.stage != "full" && a.stage != "stream_b" && a.stage != "both") {
    throw UsageError("--stage must be full, stream_b or both");
  }
  TrainSettings settings;
  const ModelConfig base = a.init.empty() ? ModelConfig{} : load_checkpoint(a.init).config();
  const ModelConfig config = model_config_with(a.sets, &settings, base);
  if (!a.init.empty() && !(to_json(config) == to_json(base))) {
    throw UsageError("--set cannot change the model shape of an --init checkpoint");
  }
  const auto entries = load_manifest(a.manifest);
  const SplitSpec split = choose_split(a.split, a.repetition, entries, true);
  const bool needs_ts = a.stage != "full";
  if (needs_ts) {
    for (const auto& e : entries) {
      if (split.is_train(e.scene_id) && !e.ts_mos) {
        throw UsageError("--stage " + a.stage + " needs ts_mos for every training video; missing for " + e.video_id);
      }
    }
  }
  const auto cache_dir = resolve_cache_dir(a.cache_dir);
  const auto examples = load_examples(entries, config, a.seed, a.jobs, cache_dir,
                                      [&](const ManifestEntry& e) { return split.is_train(e.scene_id); });

  TrainConfig tc;
  tc.batch_size = settings.batch_size;
  tc.adam.learning_rate = settings.learning_rate;
  tc.alpha = settings.alpha;
  tc.seed = a.seed;
  tc.freeze_stream_b = settings.freeze_stream_b;
  validate(tc);

  QualityModel model = a.init.empty() ? QualityModel(config, a.seed) : load_checkpoint(a.init);
  TrainLog log;
  auto progress = [](const EpochLog& e) {
    std::cerr << to_string(e.stage) << " epoch " << e.epoch << " loss " << csv::format_double(e.mean_loss)
              << " srcc " << csv::format_double(e.running_srcc) << '\n';
  };
  if (a.stage == "stream_b" || a.stage == "both") {
    TrainConfig pre = tc;
    pre.stage = TrainStage::stream_b_pretrain_on_ts;
    pre.epochs = a.stage == "both" ? settings.pretrain_epochs : settings.epochs;
    model = train(examples, pre, split, std::move(model), &log, progress);
  }
  if (a.stage == "full" || a.stage == "both") {
    TrainConfig full = tc;
    full.stage = TrainStage::full_on_oa;
    full.epochs = settings.epochs;
    model = train(examples, full, split, std::move(model), &log, progress);
  }
  save_checkpoint(model, a.out);
  Output log_out(a.log.empty() ? a.out + ".log.csv" : a.log);
  write_train_log_csv(log, log_out.stream());
  return kExitOk;
}

struct EvalArgs {
  std::string manifest, split, model, out, weighting = "test_count", cache_dir;
  int repetition = 0;
  std::uint64_t seed = 0;
  int jobs = 1;
};

int cmd_eval(const EvalArgs& a) {
  if (a.weighting != "test_count" && a.weighting != "uniform") throw UsageError("--weighting must be test_count or uniform");
  const QualityModel model = load_checkpoint(a.model);
  const auto entries = load_manifest(a.manifest);
  const SplitSpec split = choose_split(a.split, a.repetition, entries, false);
  const auto examples = load_examples(entries, model.config(), a.seed, a.jobs, resolve_cache_dir(a.cache_dir),
                                      [&](const ManifestEntry& e) { return split.is_test(e.scene_id); });
  const EvalReport report = evaluate(model, examples, split,
                                     a.weighting == "uniform" ? SceneWeighting::uniform : SceneWeighting::test_count);
  Output out(a.out);
  out.stream() << to_json(report).dump(2) << '\n';
  std::cerr << "weighted SRCC " << csv::format_double(report.weighted_srcc) << " PLCC "
            << csv::format_double(report.weighted_plcc) << '\n';
  return kExitOk;
}

struct CleanArgs {
  std::string ratings, gold, repeats, mos_out, report_out;
};

int cmd_clean(const CleanArgs& a) {
  auto open = [](const std::string& p) {
    std::ifstream in(p);
    require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + p);
    return in;
  };
  auto ratings_in = open(a.ratings);
  const auto ratings = read_ratings_csv(ratings_in);
  std::map<std::string, GoldScore> gold;
  if (!a.gold.empty()) {
    auto in = open(a.gold);
    gold = read_gold_csv(in);
  }
  std::vector<std::pair<std::string, std::string>> repeats;
  if (!a.repeats.empty()) {
    auto in = open(a.repeats);
    repeats = read_repeats_csv(in);
  }
  const CleaningResult result = clean_annotations(ratings, gold, repeats);
  {
    Output mos(a.mos_out);
    write_mos_csv(mos.stream(), aggregate_mos(result.retained));
  }
  Output report(a.report_out);
  report.stream() << to_json(result.report).dump(2) << '\n';
  for (const auto& r : result.report.rejected_annotators) {
    std::cerr << "rejected " << r.annotator_id << " (" << to_string(r.rule) << "): " << r.detail << '\n';
  }
  return kExitOk;
}

struct AttributesArgs {
  std::vector<std::string> videos;
  std::string manifest, out;
  int jobs = 1;
};

int cmd_attributes(const AttributesArgs& a) {
  const auto inputs = collect_inputs(a.videos, a.manifest);
  std::vector<std::optional<AttributeVector>> attrs(inputs.size());
  std::vector<std::string> errors(inputs.size());
  parallel_for(inputs.size(), a.jobs, [&](std::size_t i) {
    try {
      attrs[i] = compute_attributes(io::load_video(inputs[i].path));
    } catch (const std::exception& e) {
      errors[i] = describe(e);
    }
  });
  Output out(a.out);
  std::ostream& os = out.stream();
  os << "video_id,contrast,colorfulness,temporal_information,brightness,errors\n";
  bool any_failed = false;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    os << csv::escape(inputs[i].video_id) << ',';
    if (attrs[i]) {
      os << csv::format_double(attrs[i]->contrast) << ',' << csv::format_double(attrs[i]->colorfulness) << ','
         << csv::format_double(attrs[i]->temporal_information) << ',' << csv::format_double(attrs[i]->brightness)
         << ",\n";
    } else {
      any_failed = true;
      os << ",,,," << csv::escape(errors[i]) << '\n';
    }
  }
  return any_failed ? kExitPartial : kExitOk;
}

struct MotionArgs {
  std::vector<std::string> videos;
  std::string manifest, model, cache_dir;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool force = false;
};

int cmd_precompute_motion(const MotionArgs& a) {
  const auto dir = resolve_cache_dir(a.cache_dir);
  if (!dir) throw UsageError("set --cache-dir or REVQ_CACHE_DIR");
  const ModelConfig config =
      a.model.empty() ? model_config_with(a.sets) : model_config_with(a.sets, nullptr, load_checkpoint(a.model).config());
  const auto inputs = collect_inputs(a.videos, a.manifest);
  if (!a.force) {
    for (const auto& in : inputs) {
      const fs::path p = *dir / cache_file_name(in.video_id, a.seed);
      if (fs::exists(p)) throw UsageError(p.string() + " exists; pass --force to overwrite");
    }
  }
  fs::create_directories(*dir);
  std::vector<std::string> errors(inputs.size());
  parallel_for(inputs.size(), a.jobs, [&](std::size_t i) {
    try {
      const Video video = io::load_video(inputs[i].path);
      save_motion_cache(compute_motion(video, inputs[i].video_id, config, a.seed),
                        *dir / cache_file_name(inputs[i].video_id, a.seed));
    } catch (const std::exception& e) {
      errors[i] = describe(e);
    }
  });
  bool any_failed = false;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (errors[i].empty()) continue;
    any_failed = true;
    std::cerr << "revq precompute-motion: " << inputs[i].video_id << ": " << errors[i] << '\n';
  }
  return any_failed ? kExitPartial : kExitOk;
}

struct ServeArgs {
  std::string config, log, host = "127.0.0.1";
  int port = 8080;
};

int cmd_serve(const ServeArgs& a) {
  std::ifstream in(a.config);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + a.config);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, a.config + ": " + e.what());
  }
  annotation::AnnotationStore store(annotation::study_config_from_json(j, fs::path(a.config).parent_path()), a.log);
  httplib::Server server;
  annotation::register_routes(server, store);
  std::cerr << "serving on http://" << a.host << ':' << a.port << '\n';
  if (!server.listen(a.host, a.port)) fail(ErrorCode::IoError, "cannot listen on " + a.host + ":" + std::to_string(a.port));
  return kExitOk;
}

struct ProfileArgs {
  std::string video, out;
  int column = -1;
};

// One pixel column traced over time: the strip is frame_count wide and
// frame height tall, column t holding frame t.
int cmd_profile(const ProfileArgs& a) {
  const Video video = io::load_video(a.video);
  const int x = a.column < 0 ? video.width() / 2 : a.column;
  if (x >= video.width()) throw UsageError("--column " + std::to_string(x) + " outside a " + std::to_string(video.width()) + " px wide video");
  Frame strip(static_cast<int>(video.frame_count()), video.height());
  for (std::size_t t = 0; t < video.frame_count(); ++t) {
    for (int y = 0; y < video.height(); ++y) {
      for (int c = 0; c < 3; ++c) strip.at(static_cast<int>(t), y, c) = video.frames[t].at(x, y, c);
    }
  }
  io::write_png(strip, a.out);
  return kExitOk;
}

struct SynthArgs {
  std::string out;
  int count = 8, width = 64, height = 48, frames = 12, scenes = 4, max_velocity = 2;
  double max_flicker = 0.05;
  std::uint64_t seed = 0;
};

// Panning clips, half stable and half with graded flicker; both MOS channels
// fall linearly from 5 (stable) to 1 (max flicker).
int cmd_synth(const SynthArgs& a) {
  if (a.count < 2 || a.scenes < 1 || a.max_velocity < 1) throw UsageError("need --count >= 2, --scenes >= 1, --max-velocity >= 1");
  fs::create_directories(a.out);
  nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
  const int flickering = a.count / 2;
  for (int i = 0; i < a.count; ++i) {
    const bool flicker = i % 2 == 1;
    const int level = i / 2 + 1;
    const double amp = flicker ? a.max_flicker * level / flickering : 0.0;
    const double label = flicker ? 5.0 - 4.0 * level / flickering : 5.0;
    synth::PanParams p;
    p.width = a.width;
    p.height = a.height;
    p.frames = a.frames;
    // Stable and flickering clips share velocities, so speed says nothing about flicker.
    p.vx = 1 + (i / 2) % a.max_velocity;
    p.vy = (i / 2) % 3 - 1;
    p.flicker_amplitude = amp;
    p.seed = mix_seed(a.seed, static_cast<std::uint64_t>(i));
    p.blur_radius = 1;
    Video v = synth::panning_video(p);
    char name[32];
    std::snprintf(name, sizeof(name), "clip%03d", i);
    v.scene_id = "scene" + std::to_string(i % a.scenes);
    io::write_image_sequence(v, fs::path(a.out) / name);
    nlohmann::ordered_json e;
    e["video_path"] = name;
    e["scene_id"] = v.scene_id;
    e["oa_mos"] = label;
    e["ts_mos"] = label;
    e["flicker_amplitude"] = amp;
    manifest.push_back(e);
  }
  std::ofstream(fs::path(a.out) / "manifest.json") << manifest.dump(2) << '\n';
  return kExitOk;
}

struct SplitsArgs {
  std::string manifest, out;
  int repetitions = 5;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

int cmd_splits(const SplitsArgs& a) {
  const auto splits = make_splits(manifest_scenes(load_manifest(a.manifest)), a.repetitions, a.test_fraction, a.seed);
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& s : splits) j.push_back(to_json(s));
  Output out(a.out);
  out.stream() << j.dump(2) << '\n';
  return kExitOk;
}

bool is_usage_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::CheckpointNotFound:
    case ErrorCode::MalformedCheckpoint:
    case ErrorCode::InvalidArgument:
    case ErrorCode::ParseError:
    case ErrorCode::EmptyTrainSet:
    case ErrorCode::NoEvaluableScenes: return true;
    default: return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"revq: no-reference quality metric for rendered videos"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "revq 1.0");

  ScoreArgs score;
  auto* s = app.add_subcommand("score", "Score videos with a trained checkpoint");
  s->add_option("videos", score.videos, "Video files (.y4m) or image-sequence directories");
  s->add_option("--manifest", score.manifest, "Dataset manifest JSON");
  s->add_option("--model", score.model, "Checkpoint")->required();
  s->add_option("--out,-o", score.out, "Output CSV (default stdout)");
  s->add_option("--rescale-to", score.rescale_to, "MOS CSV whose mean/std the predictions are rescaled to");
  s->add_option("--seed", score.seed, "Sampling seed");
  s->add_option("--jobs,-j", score.jobs, "Parallel videos")->check(CLI::PositiveNumber);
  s->add_option("--cache-dir", score.cache_dir, "Motion cache directory (default $REVQ_CACHE_DIR)");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model on a manifest");
  t->add_option("--manifest", tr.manifest, "Dataset manifest JSON")->required();
  t->add_option("--split", tr.split, "Split JSON (default: every scene trains)");
  t->add_option("--repetition", tr.repetition, "Split index within the split file");
  t->add_option("--out,-o", tr.out, "Checkpoint to write")->required();
  t->add_option("--log", tr.log, "Training log CSV (default <out>.log.csv)");
  t->add_option("--init", tr.init, "Start from this checkpoint");
  t->add_option("--stage", tr.stage, "full | stream_b | both");
  t->add_option("--set", tr.sets, "Override key=value (model config path or train.*)");
  t->add_option("--seed", tr.seed, "Initialisation, sampling and shuffling seed");
  t->add_option("--jobs,-j", tr.jobs, "Parallel feature extraction")->check(CLI::PositiveNumber);
  t->add_option("--cache-dir", tr.cache_dir, "Motion cache directory (default $REVQ_CACHE_DIR)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Scene-wise SRCC/PLCC on the test scenes of a split");
  e->add_option("--manifest", ev.manifest, "Dataset manifest JSON")->required();
  e->add_option("--split", ev.split, "Split JSON (default: every scene is test)");
  e->add_option("--repetition", ev.repetition, "Split index within the split file");
  e->add_option("--model", ev.model, "Checkpoint")->required();
  e->add_option("--out,-o", ev.out, "Report JSON (default stdout)");
  e->add_option("--weighting", ev.weighting, "test_count | uniform");
  e->add_option("--seed", ev.seed, "Sampling seed");
  e->add_option("--jobs,-j", ev.jobs, "Parallel feature extraction")->check(CLI::PositiveNumber);
  e->add_option("--cache-dir", ev.cache_dir, "Motion cache directory (default $REVQ_CACHE_DIR)");

  CleanArgs cl;
  auto* c = app.add_subcommand("clean", "Clean subjective ratings and aggregate MOS");
  c->add_option("--ratings", cl.ratings, "Ratings CSV")->required();
  c->add_option("--gold", cl.gold, "Gold CSV video_id,oa,ts");
  c->add_option("--repeats", cl.repeats, "Repeats CSV video_id,repeat_video_id");
  c->add_option("--mos-out", cl.mos_out, "MOS CSV to write")->required();
  c->add_option("--report-out", cl.report_out, "Cleaning report JSON to write")->required();

  AttributesArgs at;
  auto* a = app.add_subcommand("attributes", "Contrast, colorfulness, TI and brightness per video");
  a->add_option("videos", at.videos, "Video files or image-sequence directories");
  a->add_option("--manifest", at.manifest, "Dataset manifest JSON");
  a->add_option("--out,-o", at.out, "Output CSV (default stdout)");
  a->add_option("--jobs,-j", at.jobs, "Parallel videos")->check(CLI::PositiveNumber);

  MotionArgs mo;
  auto* m = app.add_subcommand("precompute-motion", "Write motion caches for later scoring and training");
  m->add_option("videos", mo.videos, "Video files or image-sequence directories");
  m->add_option("--manifest", mo.manifest, "Dataset manifest JSON");
  m->add_option("--model", mo.model, "Take crop and flow settings from this checkpoint");
  m->add_option("--set", mo.sets, "Override key=value in the model config");
  m->add_option("--seed", mo.seed, "Sampling seed (must match later runs)");
  m->add_option("--jobs,-j", mo.jobs, "Parallel videos")->check(CLI::PositiveNumber);
  m->add_option("--cache-dir", mo.cache_dir, "Cache directory (default $REVQ_CACHE_DIR)");
  m->add_flag("--force", mo.force, "Overwrite existing caches");

  ServeArgs sv;
  auto* v = app.add_subcommand("serve", "Run the annotation HTTP service");
  v->add_option("--config", sv.config, "Study config JSON")->required();
  v->add_option("--log", sv.log, "Append-only ratings log (NDJSON)")->required();
  v->add_option("--host", sv.host, "Bind address");
  v->add_option("--port", sv.port, "Port");

  ProfileArgs pr;
  auto* p = app.add_subcommand("profile", "PNG strip of one pixel column over time");
  p->add_option("video", pr.video, "Video")->required();
  p->add_option("--column", pr.column, "Pixel column (default centre)");
  p->add_option("--out,-o", pr.out, "PNG to write")->required();

  SynthArgs sy;
  auto* y = app.add_subcommand("synth", "Generate a synthetic panning/flicker corpus with a manifest");
  y->add_option("--out,-o", sy.out, "Output directory")->required();
  y->add_option("--count", sy.count, "Number of clips");
  y->add_option("--width", sy.width, "Frame width");
  y->add_option("--height", sy.height, "Frame height");
  y->add_option("--frames", sy.frames, "Frames per clip");
  y->add_option("--scenes", sy.scenes, "Number of scene ids");
  y->add_option("--max-flicker", sy.max_flicker, "Largest flicker amplitude");
  y->add_option("--max-velocity", sy.max_velocity, "Largest horizontal pan, px/frame");
  y->add_option("--seed", sy.seed, "Seed");

  SplitsArgs sp;
  auto* l = app.add_subcommand("splits", "Random scene-level train/test splits");
  l->add_option("--manifest", sp.manifest, "Dataset manifest JSON")->required();
  l->add_option("--repetitions", sp.repetitions, "Number of splits");
  l->add_option("--test-fraction", sp.test_fraction, "Share of scenes held out");
  l->add_option("--seed", sp.seed, "Seed");
  l->add_option("--out,-o", sp.out, "Split JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (s->parsed()) return cmd_score(score);
    if (t->parsed()) return cmd_train(tr);
    if (e->parsed()) return cmd_eval(ev);
    if (c->parsed()) return cmd_clean(cl);
    if (a->parsed()) return cmd_attributes(at);
    if (m->parsed()) return cmd_precompute_motion(mo);
    if (v->parsed()) return cmd_serve(sv);
    if (p->parsed()) return cmd_profile(pr);
    if (y->parsed()) return cmd_synth(sy);
    if (l->parsed()) return cmd_splits(sp);
  } catch (const UsageError& err) {
    std::cerr << "revq: " << err.what() << '\n';
    return kExitUsage;
  } catch (const Error& err) {
    std::cerr << "revq: " << err.what() << '\n';
    return is_usage_code(err.code()) ? kExitUsage : kExitPartial;
  } catch (const std::exception& err) {
    std::cerr << "revq: " << err.what() << '\n';
    return kExitPartial;
  }
  return kExitUsage;
}
