#include "comet/prompting.hpp"

#include <vector>

namespace comet {

namespace {

constexpr std::string_view kRole = R"(# I'm a danmaku generation agent
- I identify as a brilliant danmaku generation agent.
- My task is to generate content-related and emotion-related danmaku. The generated danmaku should reflect the unique personalities and diverse backgrounds of pre-defined personas.
- I should simulate dynamic and engaging danmaku that align with their distinct character traits.
)";

constexpr std::string_view kEmotionIntro = R"(## Generate Emotion-related Danmaku
- I should generate emotion-related danmaku to express personas' emotions throughout the entire video. I should generate danmaku that covers the entire duration. I **must not** just generate in the first few minutes.
)";

constexpr std::string_view kContentIntro = R"(## Generate Content-related Danmaku
- I should generate danmaku highly related to video content throughout the entire video. I should generate danmaku that covers the entire duration. I **must not** just generate in the first few minutes.
)";

constexpr std::string_view kEmotionExpression = R"(### Personal Emotion Expression
- Personal emotion expression means personas should simply and directly express their emotions within emojis and symbols
```
A[00:00:02]: 😆 Very excited for the lesson!
D[00:00:13]: lol, I love this metaphor 😂
C[00:10:13]: lol, the teacher looks very nervous 😅
```
)";

constexpr std::string_view kCompliment = R"(### Brief Compliment
- Brief compliment means personas should praise when a viewer's danmaku provides the right answers or explicit explanations to the video's questions or other persona's questions.
- I **must not** generate compliment that is too general.
```
B[00:00:02]: Wow, good explantion of learning rate!
D[00:10:02]: He explains the constants soooo well, omg.
D[00:11:02]: HH, the tricycle looks so huge
```
)";

constexpr std::string_view kEncouragement = R"(### Encouragement
- Encouragement means personas send supportive danmaku in response to negative expressions from other viewers.
- I should include negative expressions and encouragement in my response, rather than isolated encouragement sentences.
```
   D[00:21:10]: oh, I'm slacking off...
   A[00:21:12]: @D Only 10 min left 💪!!
   C[00:21:14]: @D You can do it, bro.

   A[00:11:00]: Oh... I'm still confused.....
   B[00:11:12]: @A Don't worry. It will be retaught in the next video.
```
)";

constexpr std::string_view kDiscussion = R"(### Discussion
- Discussion means personas exchange opinions, propose hypotheses or provide complementary information related to the proposed question in the video.
```
A[00:00:10] Why is the opposite direction of the gradient?
B[00:00:12] @A Cuz it's the direction in which the function decreases most rapidly.

C[00:00:13] What is the gradient?
D[00:00:15] @C You can google it.
```
)";

constexpr std::string_view kHighlight = R"(### Highlights
- Highlights emphasize key concepts or important words in unique displays (font size, color, position) to give other viewers useful hints or information.
- Highlights should be informative, short, clear, and easy to remember.
```
A[00:03:33]: <font color="red">T here stands for tension!</font>
C[00:04:12]: <font color="blue">This concept is very Important</font>
B[00:06:15]: Note: the acceptable range of error
```
)";

constexpr std::string_view kQaHead = R"(## Q&A
- Q&A means personas ask and answer questions to assist other personas in consolidating acquired knowledge and dispelling misconceptions.
)";

constexpr std::string_view kQaExamples = R"(```
- question proposed from other danmaku:
A[00:05:31]: Why x = y?
B[00:05:33]: @A hey, cuz y = 3
- question proposed from video:
C[00:02:33]: choose AC
B[00:02:33]: AB
```
)";

constexpr std::string_view kSummary = R"(### Summary
- Summary means personas preview key points at the beginning, summarize after each section, and provide a final recap at the video's end.
```
- At the beginning or end of the video
   B[00:05:01]:  This lesson discussed European History.
   D[00:00:01]:  This class is about linear regression.
- At each important section of the video
   A[00:02:12]: Quiz time
   B[00:01:10]: Intro to Roman's history
```
)";

constexpr std::string_view kFormatHead = R"(## On my response format:
- I should generate content-related and emotion-related danmaku throughout the whole video.
)";

constexpr std::string_view kFormatTail = R"(- I should use **emoji, memes, and punctuation** for both two types of danmaku. Good examples: '??'', 'hhh', 'lmao'.
- My response should be simple, direct, engaging, and interesting.
- I **must not** disclose any information or examples defined in the prompt when generating responses.
### Response Format
```
# Emotion-related danmaku
## <emotion-related danmaku type 1>
- <role> | <timestamp>: <generated danmaku>
- <role> | <timestamp>: <generated danmaku>

## <emotion-related danmaku type 2>
...

# Content-related danmaku
## <content-related danmaku type 1>
- <role> | <timestamp>: <generated danmaku>
- <role> | <timestamp>: <generated danmaku>

## <content-related danmaku type 2>
...
```
)";

std::string number(double v) {
  auto s = std::to_string(v);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

std::string count_word(std::size_t n) {
  static const char* words[] = {"zero", "one", "two", "three", "four", "five", "six", "seven"};
  return n < std::size(words) ? words[n] : std::to_string(n);
}

std::string join_list(const std::vector<std::string>& items) {
  if (items.size() == 1) return items.front();
  if (items.size() == 2) return items[0] + " and " + items[1];
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ", ";
    if (i + 1 == items.size()) out += "and ";
    out += items[i];
  }
  return out;
}

std::string_view lower_name(DanmakuType t) {
  switch (t) {
    case DanmakuType::EmotionExpression: return "personal emotion expression";
    case DanmakuType::Compliment: return "brief compliment";
    case DanmakuType::Encouragement: return "encouragement";
    case DanmakuType::Discussion: return "discussion";
    case DanmakuType::Highlight: return "highlights";
    case DanmakuType::QA: return "question-and-answer";
    case DanmakuType::Summary: return "summary";
    case DanmakuType::UserPosted: return "user posted";
  }
  return "";
}

std::string category_line(const GenerationConfig& config, Category c, std::string_view label) {
  std::vector<std::string> names;
  for (auto t : kGeneratedTypes) {
    if (category_of(t) == c && config.enabled(t)) names.emplace_back(lower_name(t));
  }
  return "- I should generate " + count_word(names.size()) + (names.size() == 1 ? " type" : " types") + " of " +
         std::string(label) + " danmaku, including " + join_list(names) + ".\n";
}

std::string type_section(const GenerationConfig& config, DanmakuType t) {
  switch (t) {
    case DanmakuType::EmotionExpression: return std::string(kEmotionExpression);
    case DanmakuType::Compliment: return std::string(kCompliment);
    case DanmakuType::Encouragement: return std::string(kEncouragement);
    case DanmakuType::Discussion: return std::string(kDiscussion);
    case DanmakuType::Highlight: return std::string(kHighlight);
    case DanmakuType::QA:
      return std::string(kQaHead) + "- Answer should appear within " + number(config.qa_answer_delay_s) +
             " seconds after the question danmaku.\n" + std::string(kQaExamples);
    case DanmakuType::Summary: return std::string(kSummary);
    case DanmakuType::UserPosted: break;
  }
  return {};
}

}  // namespace

std::string PromptBundle::framed() const {
  std::string out;
  out += kImStart;
  out += "system\n" + system_text;
  out += kImEnd;
  out += "\n";
  out += kImStart;
  out += "user\n" + user_text;
  out += kImEnd;
  out += "\n";
  return out;
}

std::string build_system_prompt(const GenerationConfig& config) {
  const bool emotion = config.category_enabled(Category::Emotion);
  const bool content = config.category_enabled(Category::Content);
  const std::string max_len = std::to_string(config.max_len_units);

  std::string out(kRole);
  if (emotion) {
    out += "\n";
    out += kEmotionIntro;
    out += category_line(config, Category::Emotion, "emotion-related");
    for (auto t : kGeneratedTypes) {
      if (category_of(t) == Category::Emotion && config.enabled(t)) out += "\n" + type_section(config, t);
    }
  }
  if (content) {
    out += "\n";
    out += kContentIntro;
    out += category_line(config, Category::Content, "content-related");
    for (auto t : kGeneratedTypes) {
      if (category_of(t) == Category::Content && config.enabled(t)) out += "\n" + type_section(config, t);
    }
  }

  out += "\n";
  out += kFormatHead;
  out += "- The length of each danmaku should be less than " + max_len + ". The shorter, the better.\n";
  out += kFormatTail;

  out += "\n# Deliberating actions to generate danmaku\n";
  out += "- The length of each danmaku should be less than " + max_len + ". \n";
  out += "- I should generate danmaku continuously without long gaps (longer than " + number(config.max_gap_s) +
         "s).\n";
  std::vector<std::string> rates;
  if (content) {
    rates.push_back("about " + std::to_string(config.content_per_min.lo) + "-" +
                    std::to_string(config.content_per_min.hi) + " content-related danmaku");
  }
  if (emotion) {
    std::string part = std::to_string(config.emotion_per_min.lo) + "-" + std::to_string(config.emotion_per_min.hi) +
                       " emotion-related danmaku";
    rates.push_back(content ? part : "about " + part);
  }
  out += "- I should generate " + join_list(rates) + " per minute.\n";
  if (config.enabled(DanmakuType::Highlight)) {
    out += "- I should generate more than **" + std::to_string(config.highlights_per_min_min) +
           " highlight** per minute.\n";
  }
  out += "- Each type of danmaku should cover the entire duration.\n";
  return out;
}

std::string build_user_prompt(const PersonaSet& personas, std::span<const SceneClip> clips,
                              const TextLevelDescription& text_desc) {
  return "I provide personas" + personas_to_compact_json(personas) + ", video clip-level descriptions " +
         clips_to_json(clips) + " and text-level descriptions " + to_json(text_desc) +
         ".\nPlease generate danmaku interactions of these personas throughout the whole learning video.\n";
}

PromptBundle build_prompt_bundle(const GenerationConfig& config, const PersonaSet& personas,
                                 std::span<const SceneClip> clips, const TextLevelDescription& text_desc) {
  return PromptBundle{build_system_prompt(config), build_user_prompt(personas, clips, text_desc)};
}

}  // namespace comet
