#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "comet/danmaku.hpp"
#include "comet/llm_client.hpp"
#include "comet/persona.hpp"
#include "comet/scheduler.hpp"
#include "comet/store.hpp"
#include "comet/validator.hpp"
#include "comet/video_model.hpp"

namespace comet {

enum class JobState { Queued, DescribingClips, CreatingPersonas, Generating, Validating, Done, Failed };

std::string_view job_state_id(JobState state);
std::optional<JobState> job_state_from_id(std::string_view id);
/// Forward moves plus the Validating -> Generating retry edge and any move
/// to Failed.
bool transition_allowed(JobState from, JobState to);

inline constexpr int kMaxGenerationAttempts = 3;
inline constexpr int kMaxPersonaAttempts = 3;

struct GenerationJob {
  std::string job_id;
  std::string video_id;
  JobState state = JobState::Queued;
  int attempts = 0;
  std::optional<std::string> error;
  std::optional<ValidationReport> report;
  std::vector<JobState> history{JobState::Queued};
};

std::string job_to_json(const GenerationJob& job);
GenerationJob job_from_json(std::string_view json_text);

struct PipelineOptions {
  /// Persists artifacts and the job file when set; also caches the
  /// describing and persona stages by manifest hash.
  Catalog* catalog = nullptr;
  ScreenConfig screen;
  SegmentationParams segmentation;
  /// Called after every state change.
  std::function<void(const GenerationJob&)> on_update;
  std::string job_id;
};

struct PipelineResult {
  DanmakuTrack track;
  ValidationReport report;
  std::vector<LaneAssignment> schedule;
  PersonaSet personas;
  std::vector<SceneClip> clips;
  GenerationJob job;
};

/// segment -> describe clips -> personas -> prompt -> generate -> parse ->
/// validate -> repair -> layout -> persist. Hard failures (nothing parsed,
/// or an enabled category left empty) regenerate with the problems appended
/// to the user prompt, up to three attempts. Throws Error(JobFailed).
PipelineResult run_job(const VideoManifest& manifest, const GenerationConfig& config, LmmClient& client,
                       const PipelineOptions& options = {});

/// UTC ISO-8601 with a trailing Z.
std::string utc_now_iso8601();

}  // namespace comet
