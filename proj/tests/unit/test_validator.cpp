#include <gtest/gtest.h>

#include "../common/support.hpp"
#include "comet/track_parser.hpp"
#include "comet/validator.hpp"

using namespace comet;

namespace {

// One minute [0, 60) with `content` records (the first `highlights` of them
// highlights) and `emotion` records, spread so no gap exceeds 4 s.
DanmakuTrack minute_track(int content, int emotion, int highlights, double offset = 0) {
  DanmakuTrack t;
  t.video_id = "v";
  const int n = content + emotion;
  for (int i = 0; i < n; ++i) {
    DanmakuType type = i < content ? (i < highlights ? DanmakuType::Highlight : DanmakuType::Discussion)
                                   : DanmakuType::Compliment;
    double time = offset + 1 + i * (58.0 / std::max(1, n - 1));
    t.danmaku.push_back(make_danmaku("r" + std::to_string(1000 + i + static_cast<int>(offset)), 'A', time, type, "short text"));
  }
  sort_track(t);
  return t;
}

std::vector<double> starts(const ValidationReport& r, Rule rule) {
  std::vector<double> out;
  for (const auto& v : r.violations) {
    if (v.rule == rule) out.push_back(v.window_start);
  }
  return out;
}

}  // namespace

TEST(Validator, ScaledBounds) {
  EXPECT_EQ(scaled_min(15, 0.5), 7);
  EXPECT_EQ(scaled_max(25, 0.5), 13);
  EXPECT_EQ(scaled_min(10, 1.0), 10);
  EXPECT_EQ(scaled_max(10, 1.0), 10);
  EXPECT_EQ(scaled_min(5, 0.1), 0);
}

TEST(Validator, CleanMinute) {
  auto r = validate(minute_track(15, 5, 10), 60, GenerationConfig{});
  EXPECT_TRUE(r.clean()) << report_to_json(r);
  ASSERT_EQ(r.per_minute_stats.size(), 1u);
  EXPECT_EQ(r.per_minute_stats[0].content, 15);
  EXPECT_EQ(r.per_minute_stats[0].emotion, 5);
  EXPECT_EQ(r.per_minute_stats[0].highlight, 10);
}

TEST(Validator, RateRules) {
  GenerationConfig c;
  auto r = validate(minute_track(14, 4, 9), 60, c);
  EXPECT_EQ(r.count(Rule::R3_ContentRate), 1u);
  EXPECT_EQ(r.count(Rule::R4_EmotionRate), 1u);
  EXPECT_EQ(r.count(Rule::R5_HighlightMin), 1u);
  r = validate(minute_track(26, 11, 10), 60, c);
  EXPECT_EQ(r.count(Rule::R3_ContentRate), 1u);
  EXPECT_EQ(r.count(Rule::R4_EmotionRate), 1u);
}

TEST(Validator, LengthGapAndBounds) {
  auto t = minute_track(15, 5, 10);
  t.danmaku[3].text = "one two three four five six seven eight nine ten eleven twelve";
  auto user = make_danmaku("u1", std::nullopt, 30.5, DanmakuType::UserPosted,
                           "a user may write as many words as they like in a post here");
  t.danmaku.push_back(user);
  sort_track(t);
  auto r = validate(t, 60, GenerationConfig{});
  EXPECT_EQ(r.count(Rule::R1_Length), 1u);

  auto sparse = minute_track(15, 5, 10);
  sparse.danmaku.erase(sparse.danmaku.begin() + 5, sparse.danmaku.begin() + 16);
  r = validate(sparse, 60, GenerationConfig{});
  EXPECT_GE(r.count(Rule::R2_MaxGap), 1u);
  EXPECT_GT(r.max_gap_s, 30);

  auto edge = minute_track(15, 5, 10);
  r = validate(edge, 100, GenerationConfig{});
  EXPECT_EQ(starts(r, Rule::R2_MaxGap), std::vector<double>{59});  // gap to the end of the video

  edge.danmaku.back().time_s = 61;
  r = validate(edge, 60, GenerationConfig{});
  EXPECT_EQ(r.count(Rule::R9_TimeBounds), 1u);
}

TEST(Validator, RepliesAndCoverage) {
  auto t = minute_track(15, 5, 10);
  auto q = make_danmaku("q1", 'B', 20.25, DanmakuType::QA, "why?");
  auto a = make_danmaku("q2", 'C', 23.5, DanmakuType::QA, "because");
  a.reply_to = "q1";
  auto broken = make_danmaku("q3", 'C', 24, DanmakuType::Discussion, "re");
  broken.reply_to = "nope";
  t.danmaku.insert(t.danmaku.end(), {q, a, broken});
  sort_track(t);
  auto r = validate(t, 60, GenerationConfig{});
  EXPECT_EQ(r.count(Rule::R6_QaDelay), 1u);
  EXPECT_EQ(r.count(Rule::R8_ReplyIntegrity), 1u);

  auto two = minute_track(15, 0, 10);
  auto more = minute_track(15, 5, 10, 60);
  two.danmaku.insert(two.danmaku.end(), more.danmaku.begin(), more.danmaku.end());
  r = validate(two, 120, GenerationConfig{});
  EXPECT_EQ(starts(r, Rule::R7_Coverage), std::vector<double>{0});
}

TEST(Validator, AppendixSampleAudit) {
  auto personas = parse_personas(support::fixture("personas6.json"), "c", 6);
  auto t = parse_track(support::fixture("appendix_c.md"), personas, 270).track;
  auto r = validate(t, 270, GenerationConfig{});
  EXPECT_EQ(starts(r, Rule::R3_ContentRate), (std::vector<double>{60, 120, 180, 240}));
  EXPECT_EQ(starts(r, Rule::R5_HighlightMin), (std::vector<double>{0, 60, 120, 180, 240}));
  EXPECT_EQ(r.count(Rule::R6_QaDelay), 5u);
  EXPECT_EQ(r.count(Rule::R4_EmotionRate), 0u);
  EXPECT_EQ(r.count(Rule::R1_Length), 0u);
  ASSERT_EQ(r.per_minute_stats.size(), 5u);
  EXPECT_EQ(r.per_minute_stats[0].content, 16);

  auto fixed = repair(t, r, GenerationConfig{}, 270);
  EXPECT_EQ(fixed.track.danmaku, t.danmaku);
  EXPECT_EQ(fixed.report.repaired.size(), r.violations.size());
  for (const auto& e : fixed.report.repaired) EXPECT_EQ(e.action, RepairAction::KeptWithWarning);
}

TEST(Validator, RepairFixesWhatItCan) {
  GenerationConfig c;
  auto t = minute_track(27, 5, 10);
  t.danmaku[2].text = "one two three four five six seven eight nine ten eleven twelve thirteen";
  auto r = validate(t, 60, c);
  auto fixed = repair(t, r, c, 60);
  EXPECT_TRUE(fixed.report.clean()) << report_to_json(fixed.report);
  EXPECT_EQ(fixed.track.danmaku.size(), 30u);
  int truncated = 0, dropped = 0;
  for (const auto& e : fixed.report.repaired) {
    truncated += e.action == RepairAction::Truncated;
    dropped += e.action == RepairAction::Dropped;
  }
  EXPECT_EQ(truncated, 1);
  EXPECT_EQ(dropped, 2);
  int highlights = 0;
  for (const auto& d : fixed.track.danmaku) highlights += d.type == DanmakuType::Highlight;
  EXPECT_EQ(highlights, 10);
}

TEST(Validator, RepairDrawsFromThePool) {
  GenerationConfig c;
  auto t = minute_track(15, 3, 10);
  std::vector<Danmaku> pool;
  for (int i = 0; i < 4; ++i) pool.push_back(make_danmaku("p" + std::to_string(i), 'E', 10 + 10 * i, DanmakuType::EmotionExpression, "wow"));
  auto r = validate(t, 60, c);
  ASSERT_EQ(r.count(Rule::R4_EmotionRate), 1u);
  auto fixed = repair(t, r, c, 60, pool);
  EXPECT_TRUE(fixed.report.clean()) << report_to_json(fixed.report);
  int inserted = 0;
  for (const auto& e : fixed.report.repaired) inserted += e.action == RepairAction::Inserted;
  EXPECT_EQ(inserted, 2);
  EXPECT_NO_THROW(check_track_invariants(fixed.track, 60));
}

TEST(Validator, RepairIsDeterministicAndClampsTimes) {
  GenerationConfig c;
  auto t = minute_track(15, 5, 10);
  t.danmaku.back().time_s = 75;
  auto r = validate(t, 60, c);
  auto a = repair(t, r, c, 60);
  auto b = repair(t, r, c, 60);
  EXPECT_EQ(a.track, b.track);
  EXPECT_EQ(report_to_json(a.report), report_to_json(b.report));
  EXPECT_EQ(a.track.danmaku.back().time_s, 60);
  EXPECT_EQ(report_to_json(report_from_json(report_to_json(a.report))), report_to_json(a.report));
}

TEST(Validator, Stats) {
  auto t = minute_track(15, 5, 10);
  t.danmaku.push_back(make_danmaku("u", std::nullopt, 59.5, DanmakuType::UserPosted, "hello"));
  auto s = track_stats(t, 60);
  EXPECT_EQ(s.total, 21);
  EXPECT_EQ(s.count(DanmakuType::Highlight), 10);
  EXPECT_EQ(s.count(DanmakuType::UserPosted), 1);
  EXPECT_DOUBLE_EQ(s.rate_per_min, 21);
  EXPECT_DOUBLE_EQ(s.content_fraction, 15.0 / 21);
  EXPECT_DOUBLE_EQ(s.mean_len_units, (20 * 2 + 1) / 21.0);
}
