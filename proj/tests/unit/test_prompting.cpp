#include <gtest/gtest.h>

#include "../common/support.hpp"
#include "comet/prompting.hpp"

using namespace comet;

namespace {

bool has(const std::string& text, const std::string& needle) { return text.find(needle) != std::string::npos; }

std::string section(const std::string& text, const std::string& heading) {
  auto at = text.find(heading);
  if (at == std::string::npos) return {};
  auto next = text.find("\n## ", at + heading.size());
  auto next3 = text.find("\n### ", at + heading.size());
  return text.substr(at, std::min(next, next3) - at);
}

}  // namespace

TEST(Prompting, DefaultInstructions) {
  auto s = build_system_prompt(GenerationConfig{});
  EXPECT_EQ(s.rfind("# I'm a danmaku generation agent\n- I identify as a brilliant danmaku generation agent.\n", 0), 0u);
  EXPECT_TRUE(has(s, "- The length of each danmaku should be less than 12. The shorter, the better.\n"));
  EXPECT_TRUE(has(s, "- I should generate danmaku continuously without long gaps (longer than 30s).\n"));
  EXPECT_TRUE(has(s, "- I should generate about 15-25 content-related danmaku and 5-10 emotion-related danmaku per minute.\n"));
  EXPECT_TRUE(has(s, "- I should generate more than **10 highlight** per minute.\n"));
  EXPECT_TRUE(has(s, "- Answer should appear within 2 seconds after the question danmaku.\n"));
  EXPECT_TRUE(has(s, "A[00:00:02]: 😆 Very excited for the lesson!\n"));
  EXPECT_TRUE(has(s, "A[00:03:33]: <font color=\"red\">T here stands for tension!</font>\n"));
  EXPECT_TRUE(has(s, "   A[00:21:12]: @D Only 10 min left 💪!!\n"));
  EXPECT_TRUE(has(s, "- <role> | <timestamp>: <generated danmaku>\n"));
  for (DanmakuType t : kGeneratedTypes) {
    std::string heading = t == DanmakuType::QA ? "## Q&A" : "### " + std::string(type_heading(t));
    EXPECT_TRUE(has(s, heading + "\n")) << heading;
  }
}

TEST(Prompting, GoldenDigest) {
  EXPECT_EQ(sha256_hex(build_system_prompt(GenerationConfig{})),
            "4ea388a69d9521f817c16f9da96ac85317d62b11cc66edba767b22159a808324");
}

TEST(Prompting, NumbersFollowTheConfig) {
  GenerationConfig c;
  c.max_len_units = 9;
  c.max_gap_s = 20;
  c.content_per_min = {12, 18};
  c.emotion_per_min = {3, 7};
  c.highlights_per_min_min = 6;
  c.qa_answer_delay_s = 4;
  auto s = build_system_prompt(c);
  EXPECT_TRUE(has(s, "less than 9. The shorter"));
  EXPECT_TRUE(has(s, "- The length of each danmaku should be less than 9. \n"));
  EXPECT_TRUE(has(s, "(longer than 20s)"));
  EXPECT_TRUE(has(s, "about 12-18 content-related danmaku and 3-7 emotion-related danmaku per minute"));
  EXPECT_TRUE(has(s, "more than **6 highlight** per minute"));
  EXPECT_TRUE(has(s, "within 4 seconds after the question"));
  EXPECT_FALSE(has(s, "less than 12"));
}

TEST(Prompting, DisabledEmotionTypes) {
  GenerationConfig all;
  GenerationConfig c;
  c.enabled_types = {DanmakuType::Discussion, DanmakuType::Highlight, DanmakuType::QA, DanmakuType::Summary};
  auto s = build_system_prompt(c);
  auto full = build_system_prompt(all);
  EXPECT_FALSE(has(s, "Personal Emotion Expression"));
  EXPECT_FALSE(has(s, "### Brief Compliment"));
  EXPECT_FALSE(has(s, "### Encouragement"));
  EXPECT_FALSE(has(s, "## Generate Emotion-related Danmaku"));
  EXPECT_TRUE(has(s, "- I should generate about 15-25 content-related danmaku per minute.\n"));
  for (const char* h : {"### Discussion", "### Highlights", "## Q&A", "### Summary"}) {
    EXPECT_EQ(section(s, h), section(full, h)) << h;
  }
}

TEST(Prompting, DisabledHighlights) {
  GenerationConfig c;
  c.enabled_types = {DanmakuType::EmotionExpression, DanmakuType::Discussion, DanmakuType::QA};
  auto s = build_system_prompt(c);
  EXPECT_FALSE(has(s, "### Highlights"));
  EXPECT_FALSE(has(s, "highlight** per minute"));
  EXPECT_FALSE(has(s, "### Summary"));
  EXPECT_TRUE(has(s, "two types of content-related danmaku, including discussion and question-and-answer"));
}

TEST(Prompting, UserMessageAndFraming) {
  auto personas = parse_personas(support::fixture("appendix_b_sample.json"), "v", 2);
  std::vector<SceneClip> clips = {{1, 0, 30, std::string("Intro"), std::string("Opening")}};
  TextLevelDescription text{"T", "A", "C", {{0, 5, "hello"}}};
  auto u = build_user_prompt(personas, clips, text);
  EXPECT_EQ(u, "I provide personas" + personas_to_compact_json(personas) + ", video clip-level descriptions " +
                   clips_to_json(clips) + " and text-level descriptions " + to_json(text) +
                   ".\nPlease generate danmaku interactions of these personas throughout the whole learning video.\n");
  auto b = build_prompt_bundle(GenerationConfig{}, personas, clips, text);
  EXPECT_EQ(b.user_text, u);
  EXPECT_EQ(b.framed(), "<|im_start|>system\n" + b.system_text + "<|im_end|>\n<|im_start|>user\n" + u + "<|im_end|>\n");
}
