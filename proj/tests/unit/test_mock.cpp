#include <gtest/gtest.h>

#include "../common/support.hpp"
#include "comet/llm_client.hpp"
#include "comet/prompting.hpp"
#include "comet/track_parser.hpp"
#include "comet/validator.hpp"

using namespace comet;

namespace {
VideoManifest manifest300() { return manifest_from_json(support::fixture("manifest_300s.json")); }
}  // namespace

TEST(Mock, PersonasStartWithTheSample) {
  auto sample = parse_personas(support::fixture("appendix_b_sample.json"), "", 2);
  auto six = mock_personas(6);
  ASSERT_EQ(six.personas.size(), 6u);
  EXPECT_EQ(six.personas[0], sample.personas[0]);
  EXPECT_EQ(six.personas[1], sample.personas[1]);
  EXPECT_NO_THROW(validate_personas(six, 6));
  EXPECT_NO_THROW(validate_personas(mock_personas(26), 26));
}

TEST(Mock, TracksMeetEveryRule) {
  auto m = manifest300();
  auto personas = mock_personas(6);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto r = parse_track(generate_mock_track(m, personas, GenerationConfig{}, seed), personas, m.duration_s);
    EXPECT_TRUE(r.warnings.empty());
    auto report = validate(r.track, m.duration_s, GenerationConfig{});
    EXPECT_TRUE(report.clean()) << "seed " << seed << ": " << report_to_json(report);
  }
}

TEST(Mock, PartialMinuteAndOtherConfigs) {
  auto m = manifest_from_json(support::fixture("manifest_latin_270s.json"));
  auto personas = mock_personas(4);
  GenerationConfig c;
  c.persona_count = 4;
  c.length_unit = LengthUnit::Graphemes;
  c.max_len_units = 40;
  auto r = parse_track(generate_mock_track(m, personas, c, 5), personas, m.duration_s);
  EXPECT_TRUE(validate(r.track, m.duration_s, c).clean());

  GenerationConfig content_only;
  content_only.enabled_types = {DanmakuType::Discussion, DanmakuType::Highlight, DanmakuType::QA, DanmakuType::Summary};
  auto t = parse_track(generate_mock_track(m, mock_personas(6), content_only, 1), mock_personas(6), m.duration_s).track;
  for (const auto& d : t.danmaku) EXPECT_EQ(d.category, Category::Content);
}

TEST(Mock, DeterministicPerSeed) {
  auto m = manifest300();
  auto p = mock_personas(6);
  EXPECT_EQ(generate_mock_track(m, p, {}, 4), generate_mock_track(m, p, {}, 4));
  EXPECT_NE(generate_mock_track(m, p, {}, 4), generate_mock_track(m, p, {}, 5));
}

TEST(Mock, AnswersEachPromptKind) {
  auto m = manifest300();
  MockBackend mock(m, GenerationConfig{}, 0);
  auto clip = SceneClip{2, 30, 90};
  auto clip_prompt = build_clip_description_prompt(clip, frame_refs_for(m, clip), transcript_slice(m, clip));
  auto described = mock.complete({clip_prompt.instructions, clip_prompt.body});
  EXPECT_EQ(described.model_id, kMockModelId);
  auto clips = parse_clip_descriptions(described.text, m.duration_s).clips;
  ASSERT_EQ(clips.size(), 1u);
  EXPECT_EQ(clips[0].start_s, 30);
  EXPECT_EQ(clips[0].end_s, 90);

  auto persona_prompt = build_persona_prompt(m.title, 5);
  auto personas = parse_personas(mock.complete({persona_prompt.instructions, persona_prompt.full()}).text, m.id, 5);
  EXPECT_EQ(personas.personas.size(), 5u);

  auto bundle = build_prompt_bundle(GenerationConfig{}, personas, segment_scenes(m), describe_text_level(m));
  auto track = parse_track(mock.complete({bundle.system_text, bundle.user_text}).text, personas, m.duration_s).track;
  for (const auto& d : track.danmaku) EXPECT_TRUE(personas.find(*d.persona));
}
