#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "comet/prompt_text.hpp"

namespace comet {

struct TranscriptSegment {
  double start_s = 0;
  double end_s = 0;
  std::string text;

  bool operator==(const TranscriptSegment&) const = default;
};

struct FrameCaption {
  double t = 0;
  std::string caption;

  bool operator==(const FrameCaption&) const = default;
};

struct FrameScore {
  double t = 0;
  double score = 0;

  bool operator==(const FrameScore&) const = default;
};

struct SceneHint {
  double start_s = 0;
  double end_s = 0;
  std::string label;

  bool operator==(const SceneHint&) const = default;
};

struct VideoManifest {
  std::string id;
  std::string title;
  std::string abstract;
  std::string course;
  double duration_s = 0;
  std::vector<TranscriptSegment> transcript;
  std::optional<std::vector<FrameCaption>> frame_captions;
  std::optional<std::vector<FrameScore>> frame_scores;
  std::optional<std::vector<SceneHint>> scene_hints;

  bool operator==(const VideoManifest&) const = default;
};

/// Throws Error(EmptyManifest) for a non-positive duration and
/// Error(InvalidInput) for any other broken invariant.
void validate_manifest(const VideoManifest& manifest);

/// Structural parse of the manifest file. Unknown keys are rejected;
/// invariants are left to validate_manifest.
VideoManifest manifest_from_json(std::string_view json_text);
std::string manifest_to_json(const VideoManifest& manifest);

struct SceneClip {
  int index = 1;
  double start_s = 0;
  double end_s = 0;
  std::optional<std::string> title;
  std::optional<std::string> description;

  double length() const { return end_s - start_s; }
  bool operator==(const SceneClip&) const = default;
};

struct SegmentationParams {
  double threshold = 27.0;
  double min_len_s = 10.0;
  double pause_s = 3.0;
};

/// Partitions [0, duration_s] into clips. Evidence is taken from scene hints
/// first, then frame-difference scores, then transcript pauses.
std::vector<SceneClip> segment_scenes(const VideoManifest& manifest, const SegmentationParams& params = {});

/// Uniform midpoints, five per minute of clip, at least one.
std::vector<double> sample_frame_times(const SceneClip& clip);

struct FrameRef {
  double time_s = 0;
  std::string image;
};

/// One reference per sampled time, labelled with the nearest frame caption
/// inside the clip when the manifest carries captions.
std::vector<FrameRef> frame_refs_for(const VideoManifest& manifest, const SceneClip& clip);

/// Transcript segments overlapping the clip.
std::vector<TranscriptSegment> transcript_slice(const VideoManifest& manifest, const SceneClip& clip);

PromptText build_clip_description_prompt(const SceneClip& clip, std::span<const FrameRef> frame_refs,
                                         std::span<const TranscriptSegment> transcript_slice);

struct ClipParseResult {
  std::vector<SceneClip> clips;
  std::vector<std::string> warnings;
};

/// Reads `### Scene N: title` / `**Time Range:**` / `**Description:**` blocks.
/// Throws Error(NoScenesFound) when no block survives.
ClipParseResult parse_clip_descriptions(std::string_view markdown, double duration_s);

std::string render_clip_descriptions(std::span<const SceneClip> clips);

struct TextLevelDescription {
  std::string title;
  std::string abstract;
  std::string course;
  std::vector<TranscriptSegment> transcript;
};

TextLevelDescription describe_text_level(const VideoManifest& manifest);

/// Canonical compact JSON: {"meta":{title,abstract,course},"transcript":[{start_s,end_s,text}]}.
std::string to_json(const TextLevelDescription& desc);

/// Canonical compact JSON array of {index,start_s,end_s,title,description}.
std::string clips_to_json(std::span<const SceneClip> clips);

}  // namespace comet
