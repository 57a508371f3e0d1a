#pragma once

// Subjective-study bookkeeping: rating records, the three annotator screening
// rules (gold deviation, repeat consistency, leave-one-out correlation) and
// MOS aggregation.

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "revq/csv.hpp"
#include "revq/error.hpp"
#include "revq/stats.hpp"

namespace revq {

enum class SessionKind { s720p, s1080p, s2k };

inline std::string_view to_string(SessionKind k) {
  switch (k) {
    case SessionKind::s720p: return "s720p";
    case SessionKind::s1080p: return "s1080p";
    case SessionKind::s2k: return "s2k";
  }
  return "s720p";
}

inline std::optional<SessionKind> session_kind_from_string(std::string_view s) {
  if (s == "s720p") return SessionKind::s720p;
  if (s == "s1080p") return SessionKind::s1080p;
  if (s == "s2k") return SessionKind::s2k;
  return std::nullopt;
}

/// True for 1.0, 1.5, ..., 5.0.
inline bool on_score_grid(double score) {
  const double doubled = score * 2.0;
  return std::isfinite(score) && score >= 1.0 && score <= 5.0 && doubled == std::round(doubled);
}

struct Rating {
  std::string annotator_id;
  std::string video_id;
  double oa_score = 0.0;
  double ts_score = 0.0;
  SessionKind session = SessionKind::s720p;
  double timestamp = 0.0;

  friend bool operator==(const Rating&, const Rating&) = default;
};

struct GoldScore {
  double oa = 0.0;
  double ts = 0.0;
};

struct MosRecord {
  std::string video_id;
  double oa_mos = 0.0;
  double ts_mos = 0.0;
  std::size_t n_ratings = 0;
};

enum class CleaningRule { gold, repeat, correlation };

inline std::string_view to_string(CleaningRule r) {
  switch (r) {
    case CleaningRule::gold: return "gold";
    case CleaningRule::repeat: return "repeat";
    case CleaningRule::correlation: return "correlation";
  }
  return "gold";
}

struct Rejection {
  std::string annotator_id;
  CleaningRule rule;
  std::string detail;
};

struct CleaningFlag {
  std::string annotator_id;
  std::string reason;  // "InsufficientOverlap" or "DegenerateInput"
  std::string channel;
};

struct CleaningReport {
  std::vector<Rejection> rejected_annotators;
  std::vector<CleaningFlag> flagged;
  std::size_t retained_rating_count = 0;
  std::vector<std::string> omitted_videos;  // videos left without any clean rating

  bool is_rejected(const std::string& annotator) const {
    return std::any_of(rejected_annotators.begin(), rejected_annotators.end(),
                       [&](const Rejection& r) { return r.annotator_id == annotator; });
  }
};

struct CleaningOptions {
  double max_gold_deviation = 1.0;
  double max_repeat_difference = 1.0;
  double min_correlation = 0.8;
  std::size_t min_other_raters = 2;
  std::size_t min_shared_videos = 3;
};

struct CleaningResult {
  CleaningReport report;
  std::vector<Rating> retained;
};

namespace detail {

using Channel = double Rating::*;

// annotator -> video -> mean score on a channel (duplicate ratings averaged)
using ScoreTable = std::map<std::string, std::map<std::string, double>>;

inline ScoreTable score_table(const std::vector<Rating>& ratings, const std::set<std::string>& annotators,
                              Channel channel) {
  std::map<std::string, std::map<std::string, std::pair<double, int>>> acc;
  for (const Rating& r : ratings) {
    if (!annotators.contains(r.annotator_id)) continue;
    auto& cell = acc[r.annotator_id][r.video_id];
    cell.first += r.*channel;
    cell.second += 1;
  }
  ScoreTable table;
  for (const auto& [a, videos] : acc) {
    for (const auto& [v, sc] : videos) table[a][v] = sc.first / sc.second;
  }
  return table;
}

struct CorrelationOutcome {
  bool evaluated = false;
  double worst = 1.0;
  std::string detail;
};

}  // namespace detail

/// Screens annotators and returns the ratings of those who pass.
///
/// Rules 1 and 2 are checked once on the raw ratings. Rule 3 compares each
/// remaining annotator against the leave-one-out mean of the other remaining
/// annotators, on each score channel, with both PLCC and SRCC required to reach
/// `min_correlation`. The worst offender is removed and the rule re-evaluated
/// until nobody fails, so the result is a fixed point: cleaning the retained
/// ratings again rejects nobody.
inline CleaningResult clean_annotations(const std::vector<Rating>& ratings,
                                        const std::map<std::string, GoldScore>& gold,
                                        const std::vector<std::pair<std::string, std::string>>& repeats,
                                        const CleaningOptions& options = {}) {
  CleaningResult result;
  std::set<std::string> remaining;
  std::set<std::string> all_videos;
  for (const Rating& r : ratings) {
    remaining.insert(r.annotator_id);
    all_videos.insert(r.video_id);
  }

  auto reject = [&](const std::string& who, CleaningRule rule, std::string detail) {
    if (!remaining.contains(who)) return;
    remaining.erase(who);
    result.report.rejected_annotators.push_back({who, rule, std::move(detail)});
  };

  // Rule 1: gold deviation on either channel.
  for (const Rating& r : ratings) {
    const auto g = gold.find(r.video_id);
    if (g == gold.end()) continue;
    const double d_oa = std::abs(r.oa_score - g->second.oa);
    const double d_ts = std::abs(r.ts_score - g->second.ts);
    if (d_oa > options.max_gold_deviation || d_ts > options.max_gold_deviation) {
      reject(r.annotator_id, CleaningRule::gold,
             "video " + r.video_id + " deviates by " + csv::format_double(std::max(d_oa, d_ts)));
    }
  }

  // Rule 2: repeated presentations must agree within the tolerance.
  {
    const auto oa = detail::score_table(ratings, remaining, &Rating::oa_score);
    const auto ts = detail::score_table(ratings, remaining, &Rating::ts_score);
    for (const std::string& who : std::set<std::string>(remaining)) {
      for (const auto& [first, second] : repeats) {
        for (const auto* table : {&oa, &ts}) {
          const auto& mine = table->at(who);
          const auto a = mine.find(first);
          const auto b = mine.find(second);
          if (a == mine.end() || b == mine.end()) continue;
          const double diff = std::abs(a->second - b->second);
          if (diff > options.max_repeat_difference) {
            reject(who, CleaningRule::repeat, first + "/" + second + " differ by " + csv::format_double(diff));
          }
        }
      }
    }
  }

  // Rule 3: leave-one-out correlation, iterated to a fixed point.
  std::set<std::string> flagged_once;
  while (true) {
    std::optional<std::pair<double, std::string>> worst;
    std::string worst_detail;
    for (const std::string& who : remaining) {
      for (const auto& [channel, name] : {std::pair<detail::Channel, const char*>{&Rating::oa_score, "oa"},
                                          std::pair<detail::Channel, const char*>{&Rating::ts_score, "ts"}}) {
        const auto table = detail::score_table(ratings, remaining, channel);
        std::vector<double> own, others;
        for (const auto& [video, score] : table.at(who)) {
          double sum = 0.0;
          std::size_t count = 0;
          for (const auto& [other, videos] : table) {
            if (other == who) continue;
            const auto it = videos.find(video);
            if (it == videos.end()) continue;
            sum += it->second;
            ++count;
          }
          if (count < options.min_other_raters) continue;
          own.push_back(score);
          others.push_back(sum / static_cast<double>(count));
        }
        const std::string flag_key = who + "/" + name;
        if (own.size() < options.min_shared_videos) {
          if (flagged_once.insert(flag_key).second) {
            result.report.flagged.push_back({who, "InsufficientOverlap", name});
          }
          continue;
        }
        double plcc = 0.0, srcc = 0.0;
        try {
          plcc = pearson(own, others);
          srcc = spearman(own, others);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::DegenerateInput) throw;
          if (flagged_once.insert(flag_key).second) {
            result.report.flagged.push_back({who, "DegenerateInput", name});
          }
          continue;
        }
        const double lowest = std::min(plcc, srcc);
        if (lowest < options.min_correlation && (!worst || lowest < worst->first)) {
          worst = std::make_pair(lowest, who);
          worst_detail = std::string(name) + " plcc=" + csv::format_double(plcc) + " srcc=" + csv::format_double(srcc);
        }
      }
    }
    if (!worst) break;
    reject(worst->second, CleaningRule::correlation, worst_detail);
  }

  std::set<std::string> covered;
  for (const Rating& r : ratings) {
    if (remaining.contains(r.annotator_id)) {
      result.retained.push_back(r);
      covered.insert(r.video_id);
    }
  }
  for (const auto& v : all_videos) {
    if (!covered.contains(v)) result.report.omitted_videos.push_back(v);
  }
  result.report.retained_rating_count = result.retained.size();
  return result;
}

/// Per-video arithmetic means, sorted by video id.
inline std::vector<MosRecord> aggregate_mos(const std::vector<Rating>& clean_ratings) {
  std::map<std::string, MosRecord> acc;
  for (const Rating& r : clean_ratings) {
    auto& rec = acc[r.video_id];
    rec.video_id = r.video_id;
    rec.oa_mos += r.oa_score;
    rec.ts_mos += r.ts_score;
    rec.n_ratings += 1;
  }
  std::vector<MosRecord> out;
  out.reserve(acc.size());
  for (auto& [id, rec] : acc) {
    rec.oa_mos /= static_cast<double>(rec.n_ratings);
    rec.ts_mos /= static_cast<double>(rec.n_ratings);
    out.push_back(rec);
  }
  return out;
}

// ---- file formats -------------------------------------------------------

inline const std::vector<std::string>& ratings_header() {
  static const std::vector<std::string> h{"annotator_id", "video_id", "oa", "ts", "session", "timestamp"};
  return h;
}

inline std::vector<Rating> read_ratings_csv(std::istream& in) {
  std::vector<Rating> out;
  for (const auto& row : csv::read(in, ratings_header())) {
    Rating r;
    r.annotator_id = row.fields[0];
    r.video_id = row.fields[1];
    r.oa_score = csv::parse_double(row.fields[2], row.line);
    r.ts_score = csv::parse_double(row.fields[3], row.line);
    require(on_score_grid(r.oa_score) && on_score_grid(r.ts_score), ErrorCode::ParseError,
            "line " + std::to_string(row.line) + ": score off the 0.5-step grid in [1,5]");
    const auto kind = session_kind_from_string(row.fields[4]);
    require(kind.has_value(), ErrorCode::ParseError,
            "line " + std::to_string(row.line) + ": unknown session '" + row.fields[4] + "'");
    r.session = *kind;
    r.timestamp = csv::parse_double(row.fields[5], row.line);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string format_rating_row(const Rating& r) {
  return csv::escape(r.annotator_id) + ',' + csv::escape(r.video_id) + ',' + csv::format_double(r.oa_score) + ',' +
         csv::format_double(r.ts_score) + ',' + std::string(to_string(r.session)) + ',' +
         csv::format_double(r.timestamp);
}

inline void write_ratings_csv(std::ostream& out, const std::vector<Rating>& ratings) {
  out << "annotator_id,video_id,oa,ts,session,timestamp\n";
  for (const Rating& r : ratings) out << format_rating_row(r) << '\n';
}

/// `video_id,oa,ts`
inline std::map<std::string, GoldScore> read_gold_csv(std::istream& in) {
  std::map<std::string, GoldScore> out;
  for (const auto& row : csv::read(in, {"video_id", "oa", "ts"})) {
    out[row.fields[0]] = {csv::parse_double(row.fields[1], row.line), csv::parse_double(row.fields[2], row.line)};
  }
  return out;
}

/// `video_id,repeat_video_id`
inline std::vector<std::pair<std::string, std::string>> read_repeats_csv(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& row : csv::read(in, {"video_id", "repeat_video_id"})) out.emplace_back(row.fields[0], row.fields[1]);
  return out;
}

inline void write_mos_csv(std::ostream& out, const std::vector<MosRecord>& records) {
  out << "video_id,oa_mos,ts_mos,n\n";
  for (const auto& r : records) {
    out << csv::escape(r.video_id) << ',' << csv::format_double(r.oa_mos) << ',' << csv::format_double(r.ts_mos) << ','
        << r.n_ratings << '\n';
  }
}

inline std::vector<MosRecord> read_mos_csv(std::istream& in) {
  std::vector<MosRecord> out;
  for (const auto& row : csv::read(in, {"video_id", "oa_mos", "ts_mos", "n"})) {
    out.push_back({row.fields[0], csv::parse_double(row.fields[1], row.line), csv::parse_double(row.fields[2], row.line),
                   static_cast<std::size_t>(csv::parse_double(row.fields[3], row.line))});
  }
  return out;
}

inline nlohmann::ordered_json to_json(const CleaningReport& report) {
  nlohmann::ordered_json j;
  j["rejected_annotators"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rejected_annotators) {
    j["rejected_annotators"].push_back(
        {{"annotator_id", r.annotator_id}, {"rule", std::string(to_string(r.rule))}, {"detail", r.detail}});
  }
  j["flagged"] = nlohmann::ordered_json::array();
  for (const auto& f : report.flagged) {
    j["flagged"].push_back({{"annotator_id", f.annotator_id}, {"reason", f.reason}, {"channel", f.channel}});
  }
  j["retained_rating_count"] = report.retained_rating_count;
  j["omitted_videos"] = report.omitted_videos;
  return j;
}

}  // namespace revq
