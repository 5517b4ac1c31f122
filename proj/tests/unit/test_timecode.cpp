#include <gtest/gtest.h>

#include "comet/text_units.hpp"
#include "comet/timecode.hpp"

using namespace comet;

TEST(Timecode, ParsesAllShapes) {
  EXPECT_EQ(parse_timestamp("00:01:02"), 62.0);
  EXPECT_EQ(parse_timestamp("1:00:00"), 3600.0);
  EXPECT_EQ(parse_timestamp("02:05"), 125.0);
  EXPECT_EQ(parse_timestamp(" 0:00:06.84 "), 6.84);
  EXPECT_FALSE(parse_timestamp("12"));
  EXPECT_FALSE(parse_timestamp("00:61:00"));
  EXPECT_FALSE(parse_timestamp("ab:cd"));
}

TEST(Timecode, FormatParseIsExactOnCentiseconds) {
  for (std::int64_t cs = 0; cs < 400000; cs += 7) {
    const double t = from_centis(cs);
    ASSERT_EQ(parse_timestamp(format_hms(t)), t) << format_hms(t);
    ASSERT_EQ(parse_timestamp(format_clock(t)), t) << format_clock(t);
  }
  EXPECT_EQ(format_hms(8), "00:00:08");
  EXPECT_EQ(format_hms(62.5), "00:01:02.50");
  EXPECT_EQ(format_clock(6.84), "0:00:06.84");
}

TEST(TextUnits, WordsAndGraphemes) {
  EXPECT_EQ(count_units("Most do, but not all.", LengthUnit::Words), 5u);
  EXPECT_EQ(count_units("<font color=\"red\">Latin consonants</font>", LengthUnit::Words), 2u);
  EXPECT_EQ(count_units("学习😂", LengthUnit::Graphemes), 3u);
  EXPECT_EQ(count_units("👍🏽e\xCC\x81", LengthUnit::Graphemes), 2u);
  EXPECT_EQ(strip_tags("<b>x</b> y"), "x y");
  EXPECT_EQ(trim_copy("  a b \t"), "a b");
}

TEST(TextUnits, TruncateLandsBelowTheLimit) {
  std::string long_text = "one two three four five six seven eight nine ten eleven twelve thirteen";
  auto cut = truncate_units(long_text, 12, LengthUnit::Words);
  EXPECT_EQ(count_units(cut, LengthUnit::Words), 11u);
  EXPECT_EQ(truncate_units("short one", 12, LengthUnit::Words), "short one");
  auto g = truncate_units("梯度下降是一种优化算法", 5, LengthUnit::Graphemes);
  EXPECT_EQ(count_units(g, LengthUnit::Graphemes), 4u);
  EXPECT_TRUE(is_valid_utf8(g));
  EXPECT_FALSE(is_valid_utf8("\xC3"));
}
