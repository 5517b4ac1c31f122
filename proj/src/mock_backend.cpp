#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "comet/llm_client.hpp"
#include "comet/text_units.hpp"
#include "comet/timecode.hpp"
#include "comet/track_parser.hpp"
#include "comet/validator.hpp"

namespace comet {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  std::size_t pick(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(gen_() % n); }
  template <class T>
  const T& choose(const std::vector<T>& v) { return v[pick(v.size())]; }

 private:
  std::mt19937_64 gen_;
};

const std::set<std::string> kStopwords = {
    "about", "after", "also", "because", "been", "before", "between", "both", "come", "comes", "does", "each",
    "every", "from", "have", "here", "into", "just", "like", "more", "most", "never", "next", "only", "over",
    "same", "some", "than", "that", "their", "them", "then", "there", "these", "they", "this", "those", "time",
    "today", "very", "what", "when", "where", "which", "while", "will", "with", "would", "your", "back", "look",
    "always", "makes", "make", "can", "let", "welcome", "notice", "across", "sit", "two",
};

std::vector<std::string> keywords(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) {
    std::string w;
    for (char c : tok) {
      if (std::isalnum(static_cast<unsigned char>(c))) w += c;
    }
    if (w.size() < 4) continue;
    std::string lw = w;
    std::transform(lw.begin(), lw.end(), lw.begin(), [](unsigned char c) { return std::tolower(c); });
    if (kStopwords.count(lw)) continue;
    if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
  }
  return out;
}

std::string fill(std::string_view tmpl, const std::string& kw) {
  std::string out(tmpl);
  auto pos = out.find("{k}");
  if (pos != std::string::npos) out.replace(pos, 3, kw);
  return out;
}

const std::vector<std::string> kHighlight = {"Key point: {k}", "Note: {k} matters here", "Remember {k}!",
                                             "{k} is the core idea", "Important: {k}"};
const std::vector<std::string> kSummary = {"So far: {k} explained", "This part covers {k}", "Recap: {k} and its role"};
const std::vector<std::string> kDiscussionAsk = {"Why does {k} work here?", "Is {k} always needed?",
                                                 "How does {k} relate to this?"};
const std::vector<std::string> kDiscussionReply = {"I think {k} simplifies it", "Maybe {k} depends on the data",
                                                   "Good question, {k} is subtle"};
const std::vector<std::string> kQaAsk = {"What does {k} mean?", "Can someone explain {k}?",
                                         "Where does {k} come from?"};
const std::vector<std::string> kQaReply = {"It's defined right on the slide", "{k} was introduced a minute ago",
                                           "Check the formula for {k}"};
const std::vector<std::string> kEmotion = {"😄 love this part", "wow 🤯", "hhh so fun 😂", "this is cool!!",
                                           "lol 😆", "interesting ??"};
const std::vector<std::string> kCompliment = {"Great explanation of {k}!", "Nice example for {k}",
                                              "Clear point on {k}"};
const std::vector<std::string> kNegative = {"Oh, I'm still confused...", "I'm slacking off...",
                                            "This part is tough..."};
const std::vector<std::string> kSupport = {"Don't worry, it gets clearer", "Keep going, you got this 💪",
                                           "Almost there, hang on!"};

struct Unit {
  DanmakuType type;
  bool pair = false;
};

struct Plan {
  std::vector<Unit> units;
  int content = 0;
  int emotion = 0;

  int seconds() const {
    int s = 0;
    for (const auto& u : units) s += u.pair ? 2 : 1;
    return s;
  }
  void add(DanmakuType t, bool pair) {
    units.push_back({t, pair});
    (category_of(t) == Category::Content ? content : emotion) += pair ? 2 : 1;
  }
  bool remove(DanmakuType t, bool pair) {
    for (auto it = units.rbegin(); it != units.rend(); ++it) {
      if (it->type == t && it->pair == pair) {
        (category_of(t) == Category::Content ? content : emotion) -= pair ? 2 : 1;
        units.erase(std::next(it).base());
        return true;
      }
    }
    return false;
  }
};

}  // namespace

PersonaSet mock_personas(int n) {
  static const std::array<Persona, 6> base = {{
      {'A', 22, "North America", "extroverted, curious", "shares thoughts, sends emojis",
       "discusses with others, takes notes", "personal interest"},
      {'B', 35, "Europe", "introverted, analytical", "asks questions, shares insights", "takes notes, asks questions",
       "career goals"},
      {'C', 19, "East Asia", "playful, competitive", "quick reactions, memes", "answers quiz questions aloud",
       "academic requirements"},
      {'D', 27, "South America", "easygoing, humorous", "jokes, short comments", "rewatches hard parts",
       "exam preparation"},
      {'E', 41, "Africa", "supportive, patient", "encourages others", "summarizes each section",
       "teaching their own class"},
      {'F', 30, "Oceania", "skeptical, detail-oriented", "corrects mistakes, cites sources",
       "cross-checks with textbooks", "career change"},
  }};
  PersonaSet set;
  for (int i = 0; i < n && i < 26; ++i) {
    Persona p = base[static_cast<std::size_t>(i) % base.size()];
    p.label = static_cast<char>('A' + i);
    if (i >= static_cast<int>(base.size())) p.age += i;
    set.personas.push_back(p);
  }
  return set;
}

std::string mock_clip_description(const VideoManifest& manifest, const SceneClip& clip) {
  auto slice = transcript_slice(manifest, clip);
  std::string text;
  for (const auto& s : slice) text += (text.empty() ? "" : " ") + s.text;
  auto kws = keywords(text);
  SceneClip out = clip;
  out.title = kws.empty() ? "Lecture segment " + std::to_string(clip.index)
                          : "Lecture on " + kws.front() + (kws.size() > 1 ? " and " + kws[1] : "");
  std::istringstream in(text);
  std::string word, summary;
  for (int i = 0; i < 30 && in >> word; ++i) summary += (summary.empty() ? "" : " ") + word;
  out.description = summary.empty() ? "The speaker continues the lecture."
                                    : "The speaker addresses the audience: " + summary;
  return render_clip_descriptions(std::span<const SceneClip>(&out, 1));
}

std::string generate_mock_track(const VideoManifest& manifest, const PersonaSet& personas,
                                const GenerationConfig& config, std::uint64_t seed) {
  Rng rng(fnv1a(manifest.id) ^ (seed * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL));

  std::vector<char> labels;
  for (const auto& p : personas.personas) labels.push_back(p.label);
  if (labels.empty()) labels = {'A', 'B', 'C', 'D', 'E', 'F'};

  auto title_kws = keywords(manifest.title);
  if (title_kws.empty()) title_kws.push_back("this");

  const double duration = manifest.duration_s;
  const int n_windows = duration > 0 ? static_cast<int>(std::ceil(duration / 60.0 - 1e-9)) : 0;
  const bool content_on = config.category_enabled(Category::Content);
  const bool emotion_on = config.category_enabled(Category::Emotion);
  auto on = [&](DanmakuType t) { return config.enabled(t); };

  DanmakuTrack track;
  track.video_id = manifest.id;
  int serial = 0;
  int highlight_count = 0;

  auto shorten = [&](std::string text) {
    return truncate_units(text, static_cast<std::size_t>(config.max_len_units), config.length_unit);
  };

  for (int w = 0; w < n_windows; ++w) {
    const double start = 60.0 * w;
    const double end = std::min(60.0 * (w + 1), duration);
    const double f = (end - start) / 60.0;
    const bool full = f >= 1.0 - 1e-9;
    const int first_s = static_cast<int>(start);
    const int last_s = full ? first_s + 59 : static_cast<int>(std::floor(end + 1e-9));
    const int avail = last_s - first_s + 1;

    const int c_lo = content_on ? scaled_min(config.content_per_min.lo, f) : 0;
    const int c_hi = content_on ? scaled_max(config.content_per_min.hi, f) : 0;
    const int e_lo = emotion_on ? scaled_min(config.emotion_per_min.lo, f) : 0;
    const int e_hi = emotion_on ? scaled_max(config.emotion_per_min.hi, f) : 0;
    const int h_min = on(DanmakuType::Highlight) ? scaled_min(config.highlights_per_min_min, f) : 0;

    Plan plan;
    if (content_on) {
      int h = h_min + (full && on(DanmakuType::Highlight) ? static_cast<int>(rng.pick(2)) : 0);
      for (int i = 0; i < h; ++i) plan.add(DanmakuType::Highlight, false);
      if (on(DanmakuType::QA)) {
        int pairs = full ? 2 : (f >= 0.25 ? 1 : 0);
        for (int i = 0; i < pairs; ++i) plan.add(DanmakuType::QA, true);
      }
      if (on(DanmakuType::Discussion) && full) plan.add(DanmakuType::Discussion, true);
      if (on(DanmakuType::Summary)) plan.add(DanmakuType::Summary, false);

      std::vector<DanmakuType> fillers;
      for (auto t : {DanmakuType::Discussion, DanmakuType::Summary, DanmakuType::Highlight}) {
        if (on(t)) fillers.push_back(t);
      }
      while (plan.content < c_lo && !fillers.empty()) plan.add(rng.choose(fillers), false);
      while (plan.content > c_hi) {
        if (plan.remove(DanmakuType::Discussion, true) || plan.remove(DanmakuType::QA, true) ||
            plan.remove(DanmakuType::Summary, false) || plan.remove(DanmakuType::Discussion, false)) {
          continue;
        }
        if (!plan.remove(DanmakuType::Highlight, false)) break;
      }
    }
    if (emotion_on) {
      if (on(DanmakuType::Encouragement) && full) plan.add(DanmakuType::Encouragement, true);
      if (on(DanmakuType::EmotionExpression)) {
        int n = full ? 2 + static_cast<int>(rng.pick(2)) : 1;
        for (int i = 0; i < n; ++i) plan.add(DanmakuType::EmotionExpression, false);
      }
      if (on(DanmakuType::Compliment)) {
        int n = full ? 1 + static_cast<int>(rng.pick(2)) : 0;
        for (int i = 0; i < n; ++i) plan.add(DanmakuType::Compliment, false);
      }
      std::vector<DanmakuType> fillers;
      for (auto t : {DanmakuType::EmotionExpression, DanmakuType::Compliment}) {
        if (on(t)) fillers.push_back(t);
      }
      while (plan.emotion < e_lo) {
        if (!fillers.empty()) {
          plan.add(rng.choose(fillers), false);
        } else {
          plan.add(DanmakuType::Encouragement, true);
        }
      }
      while (plan.emotion > e_hi) {
        if (plan.remove(DanmakuType::Compliment, false) || plan.remove(DanmakuType::EmotionExpression, false) ||
            plan.remove(DanmakuType::Encouragement, true)) {
          continue;
        }
        break;
      }
    }
    // Too little room in a short tail window: shed what the minima allow.
    while (plan.seconds() > avail) {
      bool shed = false;
      if (plan.emotion > e_lo) {
        shed = plan.remove(DanmakuType::Compliment, false) || plan.remove(DanmakuType::EmotionExpression, false) ||
               (plan.emotion - 2 >= e_lo && plan.remove(DanmakuType::Encouragement, true));
      }
      if (!shed && plan.content > c_lo) {
        shed = plan.remove(DanmakuType::Summary, false) || plan.remove(DanmakuType::Discussion, false) ||
               (plan.content - 2 >= c_lo && plan.remove(DanmakuType::QA, true));
      }
      if (!shed) break;
    }

    // Shuffle, then spread the spare seconds evenly between units.
    auto& units = plan.units;
    for (std::size_t i = units.size(); i > 1; --i) std::swap(units[i - 1], units[rng.pick(i)]);
    const int slack = std::max(avail - plan.seconds(), 0);
    const int chunks = static_cast<int>(units.size()) + 1;
    std::vector<int> gaps(static_cast<std::size_t>(chunks), slack / chunks);
    const int rem = slack % chunks;
    const std::size_t rot = rng.pick(static_cast<std::size_t>(chunks));
    for (int i = 0; i < rem; ++i) ++gaps[(rot + static_cast<std::size_t>(i)) % gaps.size()];

    std::string window_text;
    for (const auto& s : manifest.transcript) {
      if (s.end_s >= start && s.start_s < end) window_text += " " + s.text;
    }
    auto kws = keywords(window_text);
    if (kws.empty()) kws = title_kws;

    auto person = [&]() { return labels[rng.pick(labels.size())]; };
    auto other = [&](char p) {
      if (labels.size() < 2) return p;
      char q = p;
      while (q == p) q = labels[rng.pick(labels.size())];
      return q;
    };
    auto add = [&](double t, char who, DanmakuType type, std::string text, Rgb color = Rgb::white()) {
      Danmaku d = make_danmaku("m" + std::to_string(++serial), who, t, type, shorten(std::move(text)), color);
      track.danmaku.push_back(d);
      return track.danmaku.back().id;
    };

    int t = first_s + gaps[0];
    for (std::size_t i = 0; i < units.size(); ++i) {
      const Unit& u = units[i];
      const std::string& kw = rng.choose(kws);
      const char p = person();
      const double at = t;
      switch (u.type) {
        case DanmakuType::Highlight: {
          Rgb color = highlight_count++ % 2 == 0 ? Rgb::red() : Rgb::blue();
          add(at, p, u.type, fill(rng.choose(kHighlight), kw), color);
          break;
        }
        case DanmakuType::Summary: add(at, p, u.type, fill(rng.choose(kSummary), kw)); break;
        case DanmakuType::EmotionExpression: add(at, p, u.type, rng.choose(kEmotion)); break;
        case DanmakuType::Compliment: add(at, p, u.type, fill(rng.choose(kCompliment), kw)); break;
        case DanmakuType::Discussion:
        case DanmakuType::QA:
        case DanmakuType::Encouragement: {
          const auto& ask = u.type == DanmakuType::Discussion ? kDiscussionAsk
                            : u.type == DanmakuType::QA       ? kQaAsk
                                                              : kNegative;
          const auto& reply = u.type == DanmakuType::Discussion ? kDiscussionReply
                              : u.type == DanmakuType::QA       ? kQaReply
                                                                : kSupport;
          auto first = add(at, p, u.type, fill(rng.choose(ask), kw));
          if (u.pair) {
            add(at + 1, other(p), u.type, fill(rng.choose(reply), kw));
            track.danmaku.back().reply_to = first;
          }
          break;
        }
        case DanmakuType::UserPosted: break;
      }
      t += (u.pair ? 2 : 1) + gaps[i + 1];
    }
  }

  sort_track(track);
  return render_track(track);
}

MockBackend::MockBackend(VideoManifest manifest, GenerationConfig config, std::uint64_t seed)
    : manifest_(std::move(manifest)), config_(std::move(config)), seed_(seed) {}

LmmResponse MockBackend::complete(const LmmRequest& req) {
  LmmResponse out;
  out.model_id = std::string(kMockModelId);

  if (req.system.find("scene transitions") != std::string::npos) {
    auto pos = req.user.find("Clip ");
    SceneClip clip;
    if (pos != std::string::npos) {
      auto line_end = req.user.find('\n', pos);
      std::string line = req.user.substr(pos + 5, line_end - pos - 5);
      auto colon = line.find(':');
      auto dash = line.find(" - ");
      if (colon != std::string::npos && dash != std::string::npos) {
        clip.index = std::atoi(line.substr(0, colon).c_str());
        auto a = parse_timestamp(trim_copy(line.substr(colon + 1, dash - colon - 1)));
        auto b = parse_timestamp(trim_copy(line.substr(dash + 3)));
        if (a && b) {
          clip.start_s = *a;
          clip.end_s = *b;
        }
      }
    }
    out.text = mock_clip_description(manifest_, clip);
    return out;
  }

  if (req.system.find("distinct personas") != std::string::npos) {
    int n = config_.persona_count;
    auto pos = req.system.find("create ");
    if (pos != std::string::npos) n = std::max(1, std::atoi(req.system.c_str() + pos + 7));
    out.text = render_personas(mock_personas(n));
    return out;
  }

  PersonaSet personas = mock_personas(config_.persona_count);
  const std::string open = "I provide personas";
  const std::string close = ", video clip-level descriptions ";
  auto a = req.user.find(open);
  auto b = req.user.find(close);
  if (a != std::string::npos && b != std::string::npos && b > a) {
    // Whatever set the prompt carries, not necessarily the configured count.
    try {
      const std::string raw = req.user.substr(a + open.size(), b - a - open.size());
      personas = parse_personas(raw, manifest_.id, static_cast<int>(nlohmann::json::parse(raw).size()));
    } catch (const std::exception&) {
    }
  }
  out.text = generate_mock_track(manifest_, personas, config_, seed_);
  return out;
}

}  // namespace comet
