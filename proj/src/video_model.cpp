#include "comet/video_model.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <sstream>

#include <json.hpp>

#include "comet/error.hpp"
#include "comet/text_units.hpp"
#include "comet/timecode.hpp"

namespace comet {

using ojson = nlohmann::ordered_json;

namespace {

constexpr double kEps = 1e-9;

void reject_unknown_keys(const ojson& obj, std::initializer_list<std::string_view> allowed,
                         std::string_view where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(Errc::InvalidInput, "unknown key '" + key + "' in " + std::string(where));
    }
  }
}

template <typename T>
T required(const ojson& obj, const char* key, std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(Errc::InvalidInput, std::string("missing '") + key + "' in " + std::string(where));
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::InvalidInput, std::string("bad type for '") + key + "' in " + std::string(where));
  }
}

const ojson* optional_array(const ojson& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  if (!it->is_array()) throw Error(Errc::InvalidInput, std::string("'") + key + "' must be an array");
  return &*it;
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view ltrim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  return s;
}

// `## Scene 3: Title` (2-4 hashes) -> "Title".
std::optional<std::string> match_scene_heading(std::string_view line) {
  line = ltrim(line);
  std::size_t hashes = 0;
  while (hashes < line.size() && line[hashes] == '#') ++hashes;
  if (hashes < 2 || hashes > 4) return std::nullopt;
  line = ltrim(line.substr(hashes));
  if (line.size() < 5 || lower_ascii(line.substr(0, 5)) != "scene") return std::nullopt;
  line = line.substr(5);
  if (line.empty() || !std::isspace(static_cast<unsigned char>(line.front()))) return std::nullopt;
  line = ltrim(line);
  std::size_t digits = 0;
  while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
  if (digits == 0) return std::nullopt;
  line = ltrim(line.substr(digits));
  if (!line.empty() && (line.front() == ':' || line.front() == '.' || line.front() == '-')) line.remove_prefix(1);
  return trim_copy(line);
}

// `**Label:** rest` -> "rest" when the bold label matches case-insensitively.
std::optional<std::string> after_bold_label(std::string_view line, std::string_view label) {
  line = ltrim(line);
  if (line.substr(0, 2) != "**") return std::nullopt;
  auto close = line.find("**", 2);
  if (close == std::string_view::npos) return std::nullopt;
  std::string inner = trim_copy(line.substr(2, close - 2));
  if (!inner.empty() && inner.back() == ':') inner.pop_back();
  if (lower_ascii(trim_copy(inner)) != label) return std::nullopt;
  std::string_view rest = ltrim(line.substr(close + 2));
  if (!rest.empty() && rest.front() == ':') rest.remove_prefix(1);
  return std::string(rest);
}

std::optional<std::pair<std::string, std::string>> split_range(std::string_view text) {
  for (std::string_view sep : {std::string_view("\xE2\x80\x93"), std::string_view("\xE2\x80\x94"), std::string_view("-")}) {
    auto at = text.find(sep);
    if (at != std::string_view::npos) {
      return std::make_pair(trim_copy(text.substr(0, at)), trim_copy(text.substr(at + sep.size())));
    }
  }
  return std::nullopt;
}

std::vector<SceneClip> partition_from_bounds(const std::vector<double>& inner_bounds, double duration) {
  std::vector<SceneClip> clips;
  double start = 0;
  for (double b : inner_bounds) {
    clips.push_back(SceneClip{static_cast<int>(clips.size()) + 1, start, b, std::nullopt, std::nullopt});
    start = b;
  }
  clips.push_back(SceneClip{static_cast<int>(clips.size()) + 1, start, duration, std::nullopt, std::nullopt});
  return clips;
}

std::vector<SceneClip> segment_from_hints(const std::vector<SceneHint>& raw, double duration) {
  std::vector<SceneHint> hints = raw;
  std::stable_sort(hints.begin(), hints.end(),
                   [](const SceneHint& a, const SceneHint& b) { return a.start_s < b.start_s; });
  for (std::size_t i = 0; i < hints.size(); ++i) {
    if (!(hints[i].start_s < hints[i].end_s)) {
      throw Error(Errc::MalformedHints, "hint " + std::to_string(i) + " has start >= end");
    }
    if (i > 0 && hints[i].start_s < hints[i - 1].end_s - kEps) {
      throw Error(Errc::MalformedHints, "hints overlap at " + format_clock(hints[i].start_s));
    }
  }

  std::vector<SceneClip> clips;
  for (const auto& h : hints) {
    double s = std::clamp(h.start_s, 0.0, duration);
    double e = std::clamp(h.end_s, 0.0, duration);
    if (e - s <= kEps) continue;
    SceneClip clip{static_cast<int>(clips.size()) + 1, s, e, std::nullopt, std::nullopt};
    if (!h.label.empty()) clip.title = h.label;
    clips.push_back(std::move(clip));
  }
  if (clips.empty()) return partition_from_bounds({}, duration);

  // Gaps are absorbed by the following clip; the edges stretch to 0 and duration.
  clips.front().start_s = 0;
  for (std::size_t i = 1; i < clips.size(); ++i) clips[i].start_s = clips[i - 1].end_s;
  clips.back().end_s = duration;
  return clips;
}

std::vector<double> bounds_from_scores(const std::vector<FrameScore>& scores, double duration,
                                       const SegmentationParams& params) {
  std::vector<double> bounds;
  double last = 0;
  for (const auto& fs : scores) {
    if (fs.score <= params.threshold) continue;
    if (fs.t <= kEps || fs.t >= duration - kEps) continue;
    if (fs.t - last < params.min_len_s) continue;
    bounds.push_back(fs.t);
    last = fs.t;
  }
  if (!bounds.empty() && duration - bounds.back() < params.min_len_s) bounds.pop_back();
  return bounds;
}

std::vector<double> bounds_from_pauses(const std::vector<TranscriptSegment>& transcript, double duration,
                                       const SegmentationParams& params) {
  std::vector<double> bounds;
  for (std::size_t i = 1; i < transcript.size(); ++i) {
    double gap = transcript[i].start_s - transcript[i - 1].end_s;
    if (gap < params.pause_s) continue;
    double mid = transcript[i - 1].end_s + gap / 2.0;
    if (mid <= kEps || mid >= duration - kEps) continue;
    if (!bounds.empty() && mid - bounds.back() <= kEps) continue;
    bounds.push_back(mid);
  }
  return bounds;
}

}  // namespace

void validate_manifest(const VideoManifest& m) {
  if (!(m.duration_s > 0)) throw Error(Errc::EmptyManifest, "duration_s must be > 0");
  const double d = m.duration_s;
  for (std::size_t i = 0; i < m.transcript.size(); ++i) {
    const auto& seg = m.transcript[i];
    if (!(seg.start_s >= 0 && seg.start_s < seg.end_s && seg.end_s <= d + kEps)) {
      throw Error(Errc::InvalidInput, "transcript segment " + std::to_string(i) + " out of range");
    }
    if (trim_copy(seg.text).empty()) {
      throw Error(Errc::InvalidInput, "transcript segment " + std::to_string(i) + " has empty text");
    }
    if (i > 0 && seg.start_s < m.transcript[i - 1].end_s - kEps) {
      throw Error(Errc::InvalidInput, "transcript segment " + std::to_string(i) + " overlaps or is unsorted");
    }
  }
  if (m.frame_scores) {
    const auto& fs = *m.frame_scores;
    for (std::size_t i = 0; i < fs.size(); ++i) {
      if (fs[i].t < 0 || fs[i].t > d + kEps || fs[i].score < 0) {
        throw Error(Errc::InvalidInput, "frame score " + std::to_string(i) + " out of range");
      }
      if (i > 0 && !(fs[i].t > fs[i - 1].t)) {
        throw Error(Errc::InvalidInput, "frame score times must be strictly increasing");
      }
    }
  }
}

VideoManifest manifest_from_json(std::string_view json_text) {
  ojson doc;
  try {
    doc = ojson::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::InvalidInput, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(Errc::InvalidInput, "manifest must be a JSON object");
  reject_unknown_keys(doc, {"id", "title", "abstract", "course", "duration_s", "transcript", "frame_captions",
                            "frame_scores", "scene_hints"},
                      "manifest");

  VideoManifest m;
  m.id = required<std::string>(doc, "id", "manifest");
  m.title = required<std::string>(doc, "title", "manifest");
  m.abstract = doc.contains("abstract") ? required<std::string>(doc, "abstract", "manifest") : "";
  m.course = doc.contains("course") ? required<std::string>(doc, "course", "manifest") : "";
  m.duration_s = required<double>(doc, "duration_s", "manifest");

  if (const auto* arr = optional_array(doc, "transcript")) {
    for (const auto& e : *arr) {
      reject_unknown_keys(e, {"start_s", "end_s", "text"}, "transcript entry");
      m.transcript.push_back({required<double>(e, "start_s", "transcript entry"),
                              required<double>(e, "end_s", "transcript entry"),
                              required<std::string>(e, "text", "transcript entry")});
    }
  }
  if (const auto* arr = optional_array(doc, "frame_captions")) {
    m.frame_captions.emplace();
    for (const auto& e : *arr) {
      reject_unknown_keys(e, {"t", "caption"}, "frame caption");
      m.frame_captions->push_back(
          {required<double>(e, "t", "frame caption"), required<std::string>(e, "caption", "frame caption")});
    }
  }
  if (const auto* arr = optional_array(doc, "frame_scores")) {
    m.frame_scores.emplace();
    for (const auto& e : *arr) {
      reject_unknown_keys(e, {"t", "score"}, "frame score");
      m.frame_scores->push_back({required<double>(e, "t", "frame score"), required<double>(e, "score", "frame score")});
    }
  }
  if (const auto* arr = optional_array(doc, "scene_hints")) {
    m.scene_hints.emplace();
    for (const auto& e : *arr) {
      reject_unknown_keys(e, {"start_s", "end_s", "label"}, "scene hint");
      m.scene_hints->push_back({required<double>(e, "start_s", "scene hint"), required<double>(e, "end_s", "scene hint"),
                                e.contains("label") ? required<std::string>(e, "label", "scene hint") : ""});
    }
  }
  return m;
}

std::string manifest_to_json(const VideoManifest& m) {
  ojson doc;
  doc["id"] = m.id;
  doc["title"] = m.title;
  doc["abstract"] = m.abstract;
  doc["course"] = m.course;
  doc["duration_s"] = m.duration_s;
  doc["transcript"] = ojson::array();
  for (const auto& s : m.transcript) doc["transcript"].push_back({{"start_s", s.start_s}, {"end_s", s.end_s}, {"text", s.text}});
  if (m.frame_captions) {
    doc["frame_captions"] = ojson::array();
    for (const auto& c : *m.frame_captions) doc["frame_captions"].push_back({{"t", c.t}, {"caption", c.caption}});
  }
  if (m.frame_scores) {
    doc["frame_scores"] = ojson::array();
    for (const auto& s : *m.frame_scores) doc["frame_scores"].push_back({{"t", s.t}, {"score", s.score}});
  }
  if (m.scene_hints) {
    doc["scene_hints"] = ojson::array();
    for (const auto& h : *m.scene_hints)
      doc["scene_hints"].push_back({{"start_s", h.start_s}, {"end_s", h.end_s}, {"label", h.label}});
  }
  return doc.dump(2) + "\n";
}

std::vector<SceneClip> segment_scenes(const VideoManifest& m, const SegmentationParams& params) {
  if (!(m.duration_s > 0)) throw Error(Errc::EmptyManifest, "duration_s must be > 0");
  if (m.scene_hints && !m.scene_hints->empty()) return segment_from_hints(*m.scene_hints, m.duration_s);
  if (m.frame_scores && !m.frame_scores->empty()) {
    return partition_from_bounds(bounds_from_scores(*m.frame_scores, m.duration_s, params), m.duration_s);
  }
  return partition_from_bounds(bounds_from_pauses(m.transcript, m.duration_s, params), m.duration_s);
}

std::vector<double> sample_frame_times(const SceneClip& clip) {
  const double len = clip.length();
  if (!(len > 0)) throw Error(Errc::ZeroLengthClip, "clip " + std::to_string(clip.index) + " has no length");
  const auto k = std::max<long long>(1, static_cast<long long>(std::floor(5.0 * len / 60.0 + 0.5)));
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(k));
  for (long long i = 0; i < k; ++i) {
    times.push_back(clip.start_s + (static_cast<double>(i) + 0.5) * len / static_cast<double>(k));
  }
  return times;
}

std::vector<FrameRef> frame_refs_for(const VideoManifest& m, const SceneClip& clip) {
  std::vector<FrameRef> refs;
  for (double t : sample_frame_times(clip)) {
    std::string image = "frame@" + format_clock(t);
    if (m.frame_captions) {
      const FrameCaption* best = nullptr;
      for (const auto& c : *m.frame_captions) {
        if (c.t < clip.start_s || c.t > clip.end_s) continue;
        if (!best || std::abs(c.t - t) < std::abs(best->t - t)) best = &c;
      }
      if (best) image += " (" + best->caption + ")";
    }
    refs.push_back({t, std::move(image)});
  }
  return refs;
}

std::vector<TranscriptSegment> transcript_slice(const VideoManifest& m, const SceneClip& clip) {
  std::vector<TranscriptSegment> out;
  for (const auto& seg : m.transcript) {
    if (seg.end_s > clip.start_s && seg.start_s < clip.end_s) out.push_back(seg);
  }
  return out;
}

PromptText build_clip_description_prompt(const SceneClip& clip, std::span<const FrameRef> frame_refs,
                                         std::span<const TranscriptSegment> slice) {
  PromptText prompt;
  prompt.instructions =
      "- You are an expert in understanding scene transitions based on visual features and transcripts in a video.\n"
      "- For the given sequence of images per timestamp, the input format is timestamp: image, identify different "
      "scenes in the video.\n"
      "- Generate descriptions for each scene with time ranges.";

  std::ostringstream body;
  body << "Clip " << clip.index << ": " << format_clock(clip.start_s) << " - " << format_clock(clip.end_s) << "\n";
  body << "\nFrames:\n";
  for (const auto& f : frame_refs) body << format_clock(f.time_s) << ": " << f.image << "\n";
  if (!slice.empty()) {
    body << "\nTranscript:\n";
    for (const auto& seg : slice) {
      body << format_clock(seg.start_s) << " - " << format_clock(seg.end_s) << ": " << seg.text << "\n";
    }
  }
  prompt.body = body.str();
  return prompt;
}

ClipParseResult parse_clip_descriptions(std::string_view markdown, double duration_s) {
  struct Block {
    std::size_t line_no = 0;
    std::string title;
    std::optional<std::optional<std::pair<std::string, std::string>>> range;
    std::string description;
    bool in_description = false;
  };

  ClipParseResult result;
  std::vector<Block> blocks;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= markdown.size()) {
    auto nl = markdown.find('\n', pos);
    std::string_view line = markdown.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? markdown.size() + 1 : nl + 1;
    ++line_no;

    if (auto title = match_scene_heading(line)) {
      blocks.push_back(Block{line_no, *title, std::nullopt, "", false});
      continue;
    }
    if (blocks.empty()) continue;
    Block& b = blocks.back();
    if (auto rest = after_bold_label(line, "time range")) {
      b.range = split_range(*rest);
      b.in_description = false;
    } else if (auto text = after_bold_label(line, "description")) {
      b.description = trim_copy(*text);
      b.in_description = true;
    } else if (b.in_description) {
      std::string extra = trim_copy(line);
      if (extra.empty()) {
        b.in_description = false;
      } else {
        b.description += (b.description.empty() ? "" : " ") + extra;
      }
    }
  }

  for (const auto& b : blocks) {
    if (!b.range || !*b.range) {
      result.warnings.push_back("line " + std::to_string(b.line_no) + ": scene without time range");
      continue;
    }
    auto start = parse_timestamp((*b.range)->first);
    auto end = parse_timestamp((*b.range)->second);
    if (!start || !end) {
      result.warnings.push_back("line " + std::to_string(b.line_no) + ": bad timestamp in time range");
      continue;
    }
    double s = std::clamp(*start, 0.0, std::max(duration_s, 0.0));
    double e = std::clamp(*end, 0.0, std::max(duration_s, 0.0));
    if (s != *start || e != *end) {
      result.warnings.push_back("line " + std::to_string(b.line_no) + ": time range clamped to video duration");
    }
    if (!(e > s)) {
      result.warnings.push_back("line " + std::to_string(b.line_no) + ": empty time range");
      continue;
    }
    SceneClip clip{0, s, e, std::nullopt, std::nullopt};
    if (!b.title.empty()) clip.title = b.title;
    if (!b.description.empty()) clip.description = b.description;
    result.clips.push_back(std::move(clip));
  }

  if (result.clips.empty()) throw Error(Errc::NoScenesFound, "no scene blocks parsed");
  std::stable_sort(result.clips.begin(), result.clips.end(),
                   [](const SceneClip& a, const SceneClip& b) { return a.start_s < b.start_s; });
  for (std::size_t i = 0; i < result.clips.size(); ++i) result.clips[i].index = static_cast<int>(i) + 1;
  return result;
}

std::string render_clip_descriptions(std::span<const SceneClip> clips) {
  std::ostringstream out;
  out << "Based on the provided images and transcript, the video can be divided into the following scenes:\n";
  for (const auto& c : clips) {
    out << "\n### Scene " << c.index << ": " << c.title.value_or("Scene " + std::to_string(c.index)) << "\n";
    out << "**Time Range:** " << format_clock(c.start_s) << " - " << format_clock(c.end_s) << "  \n";
    if (c.description) out << "**Description:** " << *c.description << "\n";
  }
  return out.str();
}

TextLevelDescription describe_text_level(const VideoManifest& m) {
  return TextLevelDescription{m.title, m.abstract, m.course, m.transcript};
}

std::string to_json(const TextLevelDescription& desc) {
  ojson doc;
  doc["meta"] = {{"title", desc.title}, {"abstract", desc.abstract}, {"course", desc.course}};
  doc["transcript"] = ojson::array();
  for (const auto& s : desc.transcript) {
    doc["transcript"].push_back({{"start_s", s.start_s}, {"end_s", s.end_s}, {"text", s.text}});
  }
  return doc.dump();
}

std::string clips_to_json(std::span<const SceneClip> clips) {
  ojson arr = ojson::array();
  for (const auto& c : clips) {
    ojson e;
    e["index"] = c.index;
    e["start_s"] = c.start_s;
    e["end_s"] = c.end_s;
    e["title"] = c.title ? ojson(*c.title) : ojson(nullptr);
    e["description"] = c.description ? ojson(*c.description) : ojson(nullptr);
    arr.push_back(std::move(e));
  }
  return arr.dump();
}

}  // namespace comet
