#include <gtest/gtest.h>

#include "../common/support.hpp"
#include "comet/danmaku.hpp"
#include "comet/error.hpp"

using namespace comet;

TEST(Danmaku, TypeTables) {
  EXPECT_EQ(category_of(DanmakuType::QA), Category::Content);
  EXPECT_EQ(category_of(DanmakuType::Summary), Category::Content);
  EXPECT_EQ(category_of(DanmakuType::Encouragement), Category::Emotion);
  EXPECT_EQ(category_of(DanmakuType::UserPosted), Category::User);
  for (int i = 0; i <= static_cast<int>(DanmakuType::UserPosted); ++i) {
    auto type = static_cast<DanmakuType>(i);
    EXPECT_EQ(type_from_id(type_id(type)), type);
  }
  EXPECT_GT(type_priority(DanmakuType::Highlight), type_priority(DanmakuType::Compliment));
  EXPECT_EQ(color_hex(Rgb::red()), "#FF0000");
  EXPECT_EQ(color_from_hex("#0000ff"), Rgb::blue());
  EXPECT_FALSE(color_from_hex("blue"));
}

TEST(Danmaku, MakeFollowsType) {
  auto h = make_danmaku("d1", 'A', 8, DanmakuType::Highlight, "Latin consonants", Rgb::red());
  EXPECT_EQ(h.position, Position::Top);
  EXPECT_EQ(h.category, Category::Content);
  auto e = make_danmaku("d2", 'B', 9, DanmakuType::Compliment, "nice");
  EXPECT_EQ(e.position, Position::Scroll);
  EXPECT_EQ(e.category, Category::Emotion);
}

TEST(Danmaku, ConfigDefaultsAndValidation) {
  GenerationConfig c;
  EXPECT_EQ(c.max_len_units, 12);
  EXPECT_EQ(c.max_gap_s, 30);
  EXPECT_EQ(c.content_per_min, (IntRange{15, 25}));
  EXPECT_EQ(c.emotion_per_min, (IntRange{5, 10}));
  EXPECT_EQ(c.highlights_per_min_min, 10);
  EXPECT_EQ(c.qa_answer_delay_s, 2);
  EXPECT_EQ(c.persona_count, 6);
  EXPECT_EQ(config_from_json(config_to_json(c)), c);
  c.content_per_min = {20, 10};
  EXPECT_THROW(validate_config(c), Error);
}

TEST(Danmaku, TrackJsonRoundTrip) {
  support::Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    auto t = support::random_json_track(rng, 900);
    ASSERT_EQ(track_from_json(track_to_json(t)), t) << track_to_json(t);
  }
}

TEST(Danmaku, InvariantsAreEnforced) {
  DanmakuTrack t;
  t.video_id = "v";
  t.danmaku.push_back(make_danmaku("a", 'A', 5, DanmakuType::QA, "q?"));
  t.danmaku.push_back(make_danmaku("b", 'B', 3, DanmakuType::QA, "a"));
  EXPECT_THROW(check_track_invariants(t), Error);
  sort_track(t);
  EXPECT_NO_THROW(check_track_invariants(t));
  t.danmaku[0].reply_to = "a";
  EXPECT_THROW(check_track_invariants(t), Error);
  t.danmaku[0].reply_to.reset();
  t.danmaku[1].persona.reset();
  EXPECT_THROW(check_track_invariants(t), Error);
  EXPECT_THROW(track_from_json("{\"video_id\": 3}"), Error);
}
