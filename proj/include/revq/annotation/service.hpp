#pragma once

// Subjective-study session store. Builds playlists, enforces the rating
// protocol (training, rating rounds, enforced rests), records ratings in an
// append-only NDJSON log and replays that log on startup. No HTTP here; see
// http.hpp for the binding.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "revq/annotations.hpp"
#include "revq/error.hpp"
#include "revq/rng.hpp"

namespace revq::annotation {

using Clock = std::function<double()>;  // seconds since epoch

inline double system_clock_seconds() {
  return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

inline constexpr const char* kRepeatSuffix = "~rep";

struct StudyConfig {
  std::map<SessionKind, std::vector<std::string>> videos;  // regular videos per session kind
  std::map<std::string, GoldScore> gold;                  // added to every session
  std::set<std::string> repeat_videos;                    // presented twice when in the session's set
  std::set<std::string> annotators;
  std::map<std::string, std::filesystem::path> video_files;  // id -> file served by GET /videos/{id}
  std::size_t round_length = 200;
  double rest_seconds = 600.0;
  std::size_t min_repeat_gap = 50;
};

/// Config JSON:
///   {"annotators": [...], "videos": {"s720p": [...], ...},
///    "gold": {"id": {"oa": 4, "ts": 4.5}}, "repeats": [...],
///    "files": {"id": "path"}, "round_length": 200, "rest_seconds": 600,
///    "min_repeat_gap": 50}
/// Relative file paths resolve against `base`.
inline StudyConfig study_config_from_json(const nlohmann::json& j, const std::filesystem::path& base = {}) {
  StudyConfig c;
  try {
    for (const auto& a : j.at("annotators")) c.annotators.insert(a.get<std::string>());
    for (const auto& [kind, list] : j.at("videos").items()) {
      const auto k = session_kind_from_string(kind);
      require(k.has_value(), ErrorCode::ParseError, "unknown session kind '" + kind + "'");
      c.videos[*k] = list.get<std::vector<std::string>>();
    }
    if (j.contains("gold")) {
      for (const auto& [id, g] : j["gold"].items()) c.gold[id] = {g.at("oa").get<double>(), g.at("ts").get<double>()};
    }
    if (j.contains("repeats")) {
      for (const auto& r : j["repeats"]) c.repeat_videos.insert(r.get<std::string>());
    }
    if (j.contains("files")) {
      for (const auto& [id, p] : j["files"].items()) {
        std::filesystem::path path = p.get<std::string>();
        c.video_files[id] = path.is_absolute() ? path : base / path;
      }
    }
    c.round_length = j.value("round_length", c.round_length);
    c.rest_seconds = j.value("rest_seconds", c.rest_seconds);
    c.min_repeat_gap = j.value("min_repeat_gap", c.min_repeat_gap);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("study config: ") + e.what());
  }
  require(c.round_length >= 1, ErrorCode::InvalidArgument, "round_length must be >= 1");
  require(c.rest_seconds >= 0.0, ErrorCode::InvalidArgument, "rest_seconds must be >= 0");
  for (const auto& [id, g] : c.gold) {
    require(on_score_grid(g.oa) && on_score_grid(g.ts), ErrorCode::InvalidArgument,
            "gold score for " + id + " is off the rating grid");
  }
  return c;
}

enum class SessionState { training, rating, resting, done };

inline std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::training: return "training";
    case SessionState::rating: return "rating";
    case SessionState::resting: return "resting";
    case SessionState::done: return "done";
  }
  return "done";
}

struct PlaylistItem {
  std::string presentation_id;
  std::string video_id;      // id recorded with the rating; repeats carry kRepeatSuffix
  std::string source_video;  // file actually shown
  bool gold = false;
  bool repeat = false;

  friend bool operator==(const PlaylistItem&, const PlaylistItem&) = default;
};

struct Session {
  std::string id;
  std::string annotator_id;
  SessionKind kind = SessionKind::s720p;
  std::uint64_t seed = 0;
  std::vector<PlaylistItem> playlist;
  std::size_t round_length = 200;
  SessionState state = SessionState::training;
  std::size_t cursor = 0;
  double unlock_at = 0.0;
  bool gold_failed = false;

  std::size_t round() const { return cursor / round_length; }
  std::size_t round_count() const { return (playlist.size() + round_length - 1) / round_length; }
};

struct RatingSubmission {
  std::string presentation_id;
  double oa_score = 0.0;
  double ts_score = 0.0;
  double client_timestamp = 0.0;
  int replay_count = 0;
};

struct Ack {
  std::size_t cursor = 0;
  SessionState state = SessionState::rating;
  double unlock_at = 0.0;
  bool gold_failed = false;
};

struct StoredRating {
  std::string session_id;
  std::string presentation_id;
  Rating rating;
  int replay_count = 0;
  double server_time = 0.0;
};

/// Seeded playlist: shuffled regular videos, gold videos at random positions
/// inside the first round, and a second presentation of every repeat video
/// at least `min_repeat_gap` positions from the first where the length allows.
inline std::vector<PlaylistItem> build_playlist(const StudyConfig& config, SessionKind kind, std::uint64_t seed,
                                                const std::string& session_id) {
  const auto found = config.videos.find(kind);
  std::vector<std::string> regular;
  if (found != config.videos.end()) {
    for (const auto& v : found->second) {
      if (!config.gold.contains(v)) regular.push_back(v);
    }
  }
  require(!regular.empty(), ErrorCode::EmptyVideoSet, "no videos configured for " + std::string(to_string(kind)));
  Rng rng(mix_seed(seed, 0x91A7));
  rng.shuffle(std::span<std::string>(regular));

  std::vector<PlaylistItem> items;
  for (const auto& v : regular) items.push_back({"", v, v, false, false});

  std::vector<std::string> gold;
  for (const auto& [id, g] : config.gold) gold.push_back(id);
  rng.shuffle(std::span<std::string>(gold));
  for (const auto& g : gold) {
    const auto hi = std::min(items.size(), config.round_length - 1);
    const auto pos = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(hi)));
    items.insert(items.begin() + static_cast<std::ptrdiff_t>(pos), PlaylistItem{"", g, g, true, false});
  }

  // Inserting never shrinks an existing gap: items between a pair push the
  // second one further away, items elsewhere shift both.
  for (const auto& v : regular) {
    if (!config.repeat_videos.contains(v)) continue;
    const auto first = static_cast<std::size_t>(
        std::find_if(items.begin(), items.end(), [&](const PlaylistItem& it) { return it.source_video == v; }) -
        items.begin());
    const std::size_t gap = config.min_repeat_gap;
    std::size_t pos;
    if (first + gap <= items.size()) {
      pos = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(first + gap),
                                                     static_cast<std::int64_t>(items.size())));
    } else if (first >= gap) {
      pos = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(first - gap)));
    } else {
      pos = items.size();  // too short for the spacing; farthest slot
    }
    items.insert(items.begin() + static_cast<std::ptrdiff_t>(pos), PlaylistItem{"", v + kRepeatSuffix, v, false, true});
  }
  for (std::size_t i = 0; i < items.size(); ++i) items[i].presentation_id = session_id + ":" + std::to_string(i);
  return items;
}

// ---- log records ----------------------------------------------------------

inline nlohmann::ordered_json to_json(const Session& s) {
  nlohmann::ordered_json j;
  j["id"] = s.id;
  j["annotator_id"] = s.annotator_id;
  j["kind"] = std::string(to_string(s.kind));
  j["seed"] = s.seed;
  j["round_length"] = s.round_length;
  j["playlist"] = nlohmann::ordered_json::array();
  for (const auto& it : s.playlist) {
    j["playlist"].push_back({{"presentation_id", it.presentation_id},
                             {"video_id", it.video_id},
                             {"source_video", it.source_video},
                             {"gold", it.gold},
                             {"repeat", it.repeat}});
  }
  return j;
}

inline Session session_from_json(const nlohmann::json& j) {
  Session s;
  s.id = j.at("id").get<std::string>();
  s.annotator_id = j.at("annotator_id").get<std::string>();
  const auto kind = session_kind_from_string(j.at("kind").get<std::string>());
  require(kind.has_value(), ErrorCode::ParseError, "bad session kind in log");
  s.kind = *kind;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.round_length = j.at("round_length").get<std::size_t>();
  for (const auto& it : j.at("playlist")) {
    s.playlist.push_back({it.at("presentation_id").get<std::string>(), it.at("video_id").get<std::string>(),
                          it.at("source_video").get<std::string>(), it.at("gold").get<bool>(),
                          it.at("repeat").get<bool>()});
  }
  return s;
}

class AnnotationStore {
 public:
  /// Opens (or creates) the log at `log_path` and replays it. An empty path
  /// keeps everything in memory.
  AnnotationStore(StudyConfig config, std::filesystem::path log_path = {}, Clock clock = system_clock_seconds)
      : config_(std::move(config)), log_path_(std::move(log_path)), clock_(std::move(clock)) {
    if (!log_path_.empty()) {
      replay();
      log_.open(log_path_, std::ios::app);
      require(static_cast<bool>(log_), ErrorCode::IoError, "cannot open ratings log " + log_path_.string());
    }
  }

  const StudyConfig& config() const { return config_; }

  Session create_session(const std::string& annotator_id, SessionKind kind, std::uint64_t seed) {
    std::lock_guard lock(mutex_);
    require(config_.annotators.contains(annotator_id), ErrorCode::UnknownAnnotator,
            "annotator '" + annotator_id + "' is not registered");
    Session s;
    s.id = "S" + std::to_string(sessions_.size() + 1) + "-" + hex(mix_seed(seed, sessions_.size() + 1)).substr(0, 8);
    s.annotator_id = annotator_id;
    s.kind = kind;
    s.seed = seed;
    s.round_length = config_.round_length;
    s.playlist = build_playlist(config_, kind, seed, s.id);
    nlohmann::ordered_json event;
    event["event"] = "session_created";
    event["session"] = to_json(s);
    append(event);
    order_.push_back(s.id);
    sessions_[s.id] = s;
    return s;
  }

  /// Ends the training phase.
  Session start_rating(const std::string& session_id) {
    std::lock_guard lock(mutex_);
    Session& s = find(session_id);
    require(s.state == SessionState::training, ErrorCode::SessionNotRating, "session is not in training");
    append({{"event", "started"}, {"session_id", session_id}});
    s.state = SessionState::rating;
    return s;
  }

  /// Current state, with an elapsed rest period lifted.
  Session session(const std::string& session_id) {
    std::lock_guard lock(mutex_);
    Session& s = find(session_id);
    refresh(s, clock_());
    return s;
  }

  Ack submit_rating(const std::string& session_id, const RatingSubmission& sub) {
    std::lock_guard lock(mutex_);
    Session& s = find(session_id);
    const double now = clock_();
    refresh(s, now);
    require(s.state == SessionState::rating, ErrorCode::SessionNotRating,
            "session is " + std::string(to_string(s.state)) +
                (s.state == SessionState::resting ? " until " + csv::format_double(s.unlock_at) : ""));
    require(on_score_grid(sub.oa_score) && on_score_grid(sub.ts_score), ErrorCode::OffGridScore,
            "scores must be one of 1.0, 1.5, ..., 5.0");
    require(sub.replay_count >= 0, ErrorCode::InvalidArgument, "replay_count must be >= 0");
    require(s.cursor < s.playlist.size() && s.playlist[s.cursor].presentation_id == sub.presentation_id,
            ErrorCode::OutOfOrder, "presentation " + sub.presentation_id + " is not the current item");
    StoredRating r;
    r.session_id = session_id;
    r.presentation_id = sub.presentation_id;
    r.rating = {s.annotator_id, s.playlist[s.cursor].video_id, sub.oa_score, sub.ts_score, s.kind, sub.client_timestamp};
    r.replay_count = sub.replay_count;
    r.server_time = now;
    nlohmann::ordered_json event;
    event["event"] = "rating";
    event["session_id"] = session_id;
    event["presentation_id"] = r.presentation_id;
    event["oa"] = sub.oa_score;
    event["ts"] = sub.ts_score;
    event["client_timestamp"] = sub.client_timestamp;
    event["replay_count"] = sub.replay_count;
    event["server_time"] = now;
    append(event);
    apply_rating(s, r);
    return {s.cursor, s.state, s.unlock_at, s.gold_failed};
  }

  /// Ratings in submission order, optionally restricted to one session kind.
  std::vector<Rating> export_ratings(std::optional<SessionKind> kind = std::nullopt) const {
    std::lock_guard lock(mutex_);
    std::vector<Rating> out;
    for (const auto& r : ratings_) {
      if (!kind || r.rating.session == *kind) out.push_back(r.rating);
    }
    return out;
  }

  std::vector<StoredRating> stored_ratings() const {
    std::lock_guard lock(mutex_);
    return ratings_;
  }

  /// (video_id, repeat alias) pairs in the cleaning pipeline's repeats format.
  std::vector<std::pair<std::string, std::string>> repeat_pairs() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& v : config_.repeat_videos) out.emplace_back(v, v + kRepeatSuffix);
    return out;
  }

  std::size_t session_count() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
  }

 private:
  static std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
  }

  Session& find(const std::string& id) {
    const auto it = sessions_.find(id);
    require(it != sessions_.end(), ErrorCode::UnknownSession, "unknown session '" + id + "'");
    return it->second;
  }

  void refresh(Session& s, double now) const {
    if (s.state == SessionState::resting && now >= s.unlock_at) s.state = SessionState::rating;
  }

  void apply_rating(Session& s, const StoredRating& r) {
    const PlaylistItem& item = s.playlist[s.cursor];
    ratings_.push_back(r);
    ++s.cursor;
    if (item.gold) {
      const GoldScore& g = config_.gold.at(item.source_video);
      if (std::abs(r.rating.oa_score - g.oa) > 1.0 || std::abs(r.rating.ts_score - g.ts) > 1.0) s.gold_failed = true;
    }
    if (s.gold_failed || s.cursor >= s.playlist.size()) {
      s.state = SessionState::done;
    } else if (s.cursor % s.round_length == 0) {
      s.state = SessionState::resting;
      s.unlock_at = r.server_time + config_.rest_seconds;
    }
  }

  void append(const nlohmann::ordered_json& event) {
    if (log_path_.empty()) return;
    log_ << event.dump() << '\n';
    log_.flush();
    require(static_cast<bool>(log_), ErrorCode::IoError, "ratings log write failed");
  }

  void replay() {
    std::ifstream in(log_path_);
    if (!in) return;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        const auto e = nlohmann::json::parse(line);
        const auto kind = e.at("event").get<std::string>();
        if (kind == "session_created") {
          Session s = session_from_json(e.at("session"));
          order_.push_back(s.id);
          sessions_[s.id] = std::move(s);
        } else if (kind == "started") {
          find(e.at("session_id").get<std::string>()).state = SessionState::rating;
        } else if (kind == "rating") {
          Session& s = find(e.at("session_id").get<std::string>());
          StoredRating r;
          r.session_id = s.id;
          r.presentation_id = e.at("presentation_id").get<std::string>();
          require(s.cursor < s.playlist.size() && s.playlist[s.cursor].presentation_id == r.presentation_id,
                  ErrorCode::ParseError, "out-of-order rating");
          r.replay_count = e.at("replay_count").get<int>();
          r.server_time = e.at("server_time").get<double>();
          r.rating = {s.annotator_id,         s.playlist[s.cursor].video_id, e.at("oa").get<double>(),
                      e.at("ts").get<double>(), s.kind, e.at("client_timestamp").get<double>()};
          refresh(s, r.server_time);
          apply_rating(s, r);
        } else {
          fail(ErrorCode::ParseError, "unknown event '" + kind + "'");
        }
      } catch (const nlohmann::json::exception& ex) {
        fail(ErrorCode::ParseError, log_path_.string() + ":" + std::to_string(line_no) + ": " + ex.what());
      } catch (const Error& ex) {
        fail(ErrorCode::ParseError, log_path_.string() + ":" + std::to_string(line_no) + ": " + ex.what());
      }
    }
  }

  StudyConfig config_;
  std::filesystem::path log_path_;
  Clock clock_;
  mutable std::mutex mutex_;
  std::map<std::string, Session> sessions_;
  std::vector<std::string> order_;
  std::vector<StoredRating> ratings_;
  std::ofstream log_;
};

}  // namespace revq::annotation
