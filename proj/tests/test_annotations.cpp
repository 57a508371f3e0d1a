#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <sstream>
#include <vector>

#include "revq/annotations.hpp"
#include "revq/rng.hpp"
#include "support/oracles.hpp"
#include "support/study_fixture.hpp"

using namespace revq;

namespace {

std::map<std::string, CleaningRule> rejections(const CleaningReport& r) {
  std::map<std::string, CleaningRule> out;
  for (const auto& x : r.rejected_annotators) out[x.annotator_id] = x.rule;
  return out;
}

Rating rating(std::string who, std::string video, double oa, double ts = 3.0) {
  return {std::move(who), std::move(video), oa, ts, SessionKind::s720p, 0.0};
}

// Consensus study with random half-step noise; `n` annotators over `v` videos.
std::vector<Rating> noisy_study(Rng& rng, int n, int v) {
  std::vector<double> q(static_cast<std::size_t>(v));
  for (auto& x : q) x = 1.0 + 0.5 * static_cast<double>(rng.uniform_int(0, 8));
  std::vector<Rating> out;
  for (int a = 0; a < n; ++a) {
    const bool noisy = rng.uniform01() < 0.4;
    for (int i = 0; i < v; ++i) {
      auto jitter = [&](double base) {
        const double step = noisy ? 0.5 * static_cast<double>(rng.uniform_int(-4, 4)) : 0.5 * static_cast<double>(rng.uniform_int(-1, 1));
        return std::clamp(base + step, 1.0, 5.0);
      };
      out.push_back(rating("a" + std::to_string(a), "v" + std::to_string(i), jitter(q[static_cast<std::size_t>(i)]),
                           jitter(6.0 - q[static_cast<std::size_t>(i)])));
    }
  }
  return out;
}

}  // namespace

TEST(ScoreGrid, HalfStepsOnly) {
  for (double s = 1.0; s <= 5.0; s += 0.5) EXPECT_TRUE(on_score_grid(s));
  for (double s : {0.5, 5.5, 3.25, 2.1, -1.0}) EXPECT_FALSE(on_score_grid(s));
}

TEST(Cleaning, GoldDeviationRejects) {
  std::vector<Rating> r;
  for (std::string who : {"A", "B", "C", "D", "E"}) {
    r.push_back(rating(who, "G", who == "E" ? 4.5 : 3.0));
    for (int i = 0; i < 4; ++i) r.push_back(rating(who, "v" + std::to_string(i), 1.0 + i));
  }
  const auto result = clean_annotations(r, {{"G", {3.0, 3.0}}}, {});
  EXPECT_EQ(rejections(result.report), (std::map<std::string, CleaningRule>{{"E", CleaningRule::gold}}));
  EXPECT_EQ(result.retained.size(), 20u);
}

TEST(Cleaning, GoldDeviationOfExactlyOneIsTolerated) {
  std::vector<Rating> r{rating("A", "G", 4.0, 2.0)};
  EXPECT_TRUE(clean_annotations(r, {{"G", {3.0, 3.0}}}, {}).report.rejected_annotators.empty());
}

TEST(Cleaning, GoldAppliesToTsChannel) {
  std::vector<Rating> r{rating("A", "G", 3.0, 5.0)};
  EXPECT_EQ(rejections(clean_annotations(r, {{"G", {3.0, 3.5}}}, {}).report).at("A"), CleaningRule::gold);
}

TEST(Cleaning, PerfectAgreementKeepsEverything) {
  std::vector<Rating> r;
  for (std::string who : {"A", "B", "C", "D"}) {
    for (int i = 0; i < 6; ++i) r.push_back(rating(who, "v" + std::to_string(i), 1.0 + 0.5 * i, 5.0 - 0.5 * i));
  }
  const auto result = clean_annotations(r, {}, {});
  EXPECT_TRUE(result.report.rejected_annotators.empty());
  EXPECT_EQ(result.report.retained_rating_count, r.size());
  EXPECT_EQ(result.retained, r);
}

TEST(Cleaning, PermutedAnnotatorFailsCorrelation) {
  const std::vector<double> consensus{1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5};
  const std::vector<double> permuted{4.0, 2.0, 4.5, 1.0, 3.5, 1.5, 2.5, 3.0};
  std::vector<Rating> r;
  for (std::string who : {"A", "B", "C", "D"}) {
    for (std::size_t i = 0; i < consensus.size(); ++i) {
      const double s = who == "D" ? permuted[i] : consensus[i];
      r.push_back(rating(who, "v" + std::to_string(i), s, s));
    }
  }
  // Leave-one-out SRCC of D against the others' mean, via the oracle.
  EXPECT_LT(oracle::spearman(permuted, consensus), 0.8);
  const auto result = clean_annotations(r, {}, {});
  EXPECT_EQ(rejections(result.report), (std::map<std::string, CleaningRule>{{"D", CleaningRule::correlation}}));
}

TEST(Cleaning, RepeatDisagreementRejects) {
  std::vector<Rating> r;
  for (std::string who : {"A", "B"}) {
    r.push_back(rating(who, "v", 3.0));
    r.push_back(rating(who, "v~rep", who == "B" ? 1.5 : 3.5));
  }
  const auto result = clean_annotations(r, {}, {{"v", "v~rep"}});
  EXPECT_EQ(rejections(result.report), (std::map<std::string, CleaningRule>{{"B", CleaningRule::repeat}}));
}

TEST(Cleaning, SparseOverlapIsFlaggedNotRejected) {
  std::vector<Rating> r;
  for (std::string who : {"A", "B", "C"}) {
    for (int i = 0; i < 2; ++i) r.push_back(rating(who, "v" + std::to_string(i), 1.0 + i));
  }
  const auto result = clean_annotations(r, {}, {});
  EXPECT_TRUE(result.report.rejected_annotators.empty());
  ASSERT_FALSE(result.report.flagged.empty());
  EXPECT_EQ(result.report.flagged.front().reason, "InsufficientOverlap");
}

TEST(Cleaning, SixAnnotatorFixtureNamesEachViolator) {
  const auto study = fixture::six_annotator_study();
  const auto result = clean_annotations(study.ratings, study.gold, study.repeats);
  EXPECT_EQ(rejections(result.report), (std::map<std::string, CleaningRule>{{"D", CleaningRule::gold},
                                                                            {"E", CleaningRule::repeat},
                                                                            {"F", CleaningRule::correlation}}));
  const auto mos = aggregate_mos(result.retained);
  ASSERT_EQ(mos.size(), study.expected_mos.size());
  for (const auto& m : mos) {
    EXPECT_EQ(m.oa_mos, study.expected_mos.at(m.video_id).first) << m.video_id;
    EXPECT_EQ(m.ts_mos, study.expected_mos.at(m.video_id).second) << m.video_id;
    EXPECT_EQ(m.n_ratings, 3u);
  }
}

TEST(Cleaning, IdempotentOnRetainedOutput) {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const auto ratings = noisy_study(rng, 8, 10);
    const auto first = clean_annotations(ratings, {}, {});
    const auto second = clean_annotations(first.retained, {}, {});
    EXPECT_TRUE(second.report.rejected_annotators.empty()) << "trial " << trial;
    EXPECT_EQ(second.retained, first.retained);
  }
}

TEST(Cleaning, RetainedExcludesAllRejectedRatings) {
  Rng rng(32);
  const auto ratings = noisy_study(rng, 10, 12);
  const auto result = clean_annotations(ratings, {}, {});
  for (const auto& r : result.retained) EXPECT_FALSE(result.report.is_rejected(r.annotator_id));
  std::set<std::string> seen;
  for (const auto& r : result.report.rejected_annotators) EXPECT_TRUE(seen.insert(r.annotator_id).second);
}

TEST(Mos, MeansAndCounts) {
  const auto two = aggregate_mos({rating("A", "v", 3.0, 2.0), rating("B", "v", 4.0, 2.5)});
  ASSERT_EQ(two.size(), 1u);
  EXPECT_EQ(two[0].oa_mos, 3.5);
  EXPECT_EQ(two[0].ts_mos, 2.25);
  EXPECT_EQ(two[0].n_ratings, 2u);
  const auto one = aggregate_mos({rating("A", "w", 5.0, 5.0)});
  EXPECT_EQ(one[0].oa_mos, 5.0);
  EXPECT_EQ(one[0].n_ratings, 1u);
}

TEST(Mos, SixteenRatingsMatchLoopOracle) {
  Rng rng(40);
  std::vector<Rating> r;
  double sum = 0;
  for (int i = 0; i < 16; ++i) {
    const double s = 1.0 + 0.5 * static_cast<double>(rng.uniform_int(0, 8));
    sum += s;
    r.push_back(rating("a" + std::to_string(i), "v", s));
  }
  EXPECT_NEAR(aggregate_mos(r)[0].oa_mos, sum / 16, 1e-12);
}

TEST(Mos, WithinContributingRange) {
  Rng rng(41);
  const auto ratings = noisy_study(rng, 6, 15);
  for (const auto& m : aggregate_mos(ratings)) {
    double lo = 5, hi = 1;
    for (const auto& r : ratings) {
      if (r.video_id != m.video_id) continue;
      lo = std::min(lo, r.oa_score);
      hi = std::max(hi, r.oa_score);
    }
    EXPECT_GE(m.oa_mos, lo);
    EXPECT_LE(m.oa_mos, hi);
  }
}

TEST(RatingsCsv, RoundTrip) {
  const auto study = fixture::six_annotator_study();
  std::stringstream buf;
  write_ratings_csv(buf, study.ratings);
  EXPECT_EQ(read_ratings_csv(buf), study.ratings);
}

TEST(RatingsCsv, ErrorsCarryLineNumbers) {
  std::istringstream bad("annotator_id,video_id,oa,ts,session,timestamp\nA,v,3.0,3.0,s720p,1\nB,v,abc,3.0,s720p,2\n");
  try {
    read_ratings_csv(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  std::istringstream off("annotator_id,video_id,oa,ts,session,timestamp\nA,v,3.25,3.0,s720p,1\n");
  EXPECT_THROW(read_ratings_csv(off), Error);
  std::istringstream header("who,video_id,oa,ts,session,timestamp\n");
  EXPECT_THROW(read_ratings_csv(header), Error);
}

TEST(MosCsv, RoundTrip) {
  const std::vector<MosRecord> recs{{"a", 3.5, 2.25, 4}, {"b,c", 1.0, 5.0, 1}};
  std::stringstream buf;
  write_mos_csv(buf, recs);
  const auto back = read_mos_csv(buf);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].video_id, "b,c");
  EXPECT_EQ(back[0].ts_mos, 2.25);
  EXPECT_EQ(back[0].n_ratings, 4u);
}
