#include "comet/pipeline.hpp"

#include <chrono>
#include <ctime>

#include <json.hpp>

#include "comet/error.hpp"
#include "comet/prompting.hpp"
#include "comet/track_parser.hpp"

namespace comet {

using ojson = nlohmann::ordered_json;

namespace {

constexpr std::string_view kEpoch = "1970-01-01T00:00:00Z";

std::string corrective_feedback(const std::vector<std::string>& problems) {
  std::string out = "\n\nThe previous response was rejected:\n";
  for (const auto& p : problems) out += "- " + p + "\n";
  out += "Please generate the complete response again in the required format.\n";
  return out;
}

class JobTracker {
 public:
  JobTracker(GenerationJob& job, const PipelineOptions& options) : job_(job), options_(options) {}

  void move(JobState next) {
    if (!transition_allowed(job_.state, next)) {
      throw Error(Errc::InvalidInput, "illegal job transition " + std::string(job_state_id(job_.state)) + " -> " +
                                          std::string(job_state_id(next)));
    }
    job_.state = next;
    job_.history.push_back(next);
    publish();
  }

  void publish() {
    if (options_.catalog && !job_.job_id.empty()) options_.catalog->save_job(job_.job_id, job_to_json(job_));
    if (options_.on_update) options_.on_update(job_);
  }

 private:
  GenerationJob& job_;
  const PipelineOptions& options_;
};

LmmRequest request_for(const PromptText& prompt) {
  LmmRequest req;
  req.system = prompt.instructions;
  req.user = prompt.body.empty() ? prompt.instructions : prompt.body;
  return req;
}

std::vector<SceneClip> describe_clips(const VideoManifest& manifest, const PipelineOptions& options,
                                      LmmClient& client, const std::string& manifest_hash) {
  auto clips = segment_scenes(manifest, options.segmentation);
  for (auto& clip : clips) {
    auto refs = frame_refs_for(manifest, clip);
    auto slice = transcript_slice(manifest, clip);
    const std::string stage = "clip-" + std::to_string(clip.index);
    std::optional<std::string> text;
    if (options.catalog) text = options.catalog->cache_get(manifest_hash, stage);
    if (!text) {
      text = client.complete(request_for(build_clip_description_prompt(clip, refs, slice))).text;
      if (options.catalog) options.catalog->cache_put(manifest_hash, stage, *text);
    }
    try {
      auto parsed = parse_clip_descriptions(*text, manifest.duration_s);
      const SceneClip& best = parsed.clips.front();
      clip.title = best.title;
      clip.description = best.description;
    } catch (const Error& e) {
      if (e.code() != Errc::NoScenesFound) throw;
    }
  }
  return clips;
}

PersonaSet create_personas(const VideoManifest& manifest, const GenerationConfig& config,
                           const PipelineOptions& options, LmmClient& client, const std::string& manifest_hash) {
  const std::string stage = "personas-" + std::to_string(config.persona_count);
  if (options.catalog) {
    if (auto cached = options.catalog->cache_get(manifest_hash, stage)) {
      try {
        return parse_personas(*cached, manifest.id, config.persona_count);
      } catch (const Error&) {
      }
    }
  }
  auto prompt = build_persona_prompt(manifest.title, config.persona_count);
  std::optional<Error> last;
  for (int attempt = 0; attempt < kMaxPersonaAttempts; ++attempt) {
    auto text = client.complete(request_for(prompt)).text;
    try {
      auto set = parse_personas(text, manifest.id, config.persona_count);
      if (options.catalog) options.catalog->cache_put(manifest_hash, stage, render_personas(set));
      return set;
    } catch (const Error& e) {
      switch (e.code()) {
        case Errc::WrongCount:
        case Errc::MissingField:
        case Errc::InvalidField:
        case Errc::MalformedJson: last = e; break;
        default: throw;
      }
    }
  }
  throw *last;
}

std::vector<std::string> hard_problems(const DanmakuTrack& track, const GenerationConfig& config) {
  std::vector<std::string> out;
  for (auto c : {Category::Emotion, Category::Content}) {
    if (!config.category_enabled(c)) continue;
    bool any = false;
    for (const auto& d : track.danmaku) any = any || d.category == c;
    if (!any) {
      out.push_back(std::string("The response contained no ") +
                    (c == Category::Emotion ? "emotion-related" : "content-related") + " danmaku.");
    }
  }
  return out;
}

}  // namespace

std::string_view job_state_id(JobState state) {
  switch (state) {
    case JobState::Queued: return "Queued";
    case JobState::DescribingClips: return "DescribingClips";
    case JobState::CreatingPersonas: return "CreatingPersonas";
    case JobState::Generating: return "Generating";
    case JobState::Validating: return "Validating";
    case JobState::Done: return "Done";
    case JobState::Failed: return "Failed";
  }
  return "Failed";
}

std::optional<JobState> job_state_from_id(std::string_view id) {
  for (int s = 0; s <= static_cast<int>(JobState::Failed); ++s) {
    if (job_state_id(static_cast<JobState>(s)) == id) return static_cast<JobState>(s);
  }
  return std::nullopt;
}

bool transition_allowed(JobState from, JobState to) {
  if (from == JobState::Done || from == JobState::Failed) return false;
  if (to == JobState::Failed) return true;
  if (from == JobState::Validating && to == JobState::Generating) return true;
  return static_cast<int>(to) == static_cast<int>(from) + 1;
}

std::string job_to_json(const GenerationJob& job) {
  ojson doc;
  doc["job_id"] = job.job_id;
  doc["video_id"] = job.video_id;
  doc["state"] = job_state_id(job.state);
  doc["attempts"] = job.attempts;
  doc["error"] = job.error ? ojson(*job.error) : ojson(nullptr);
  doc["report"] = job.report ? ojson::parse(report_to_json(*job.report)) : ojson(nullptr);
  doc["history"] = ojson::array();
  for (auto s : job.history) doc["history"].push_back(job_state_id(s));
  return doc.dump(2, ' ', false, ojson::error_handler_t::replace) + "\n";
}

GenerationJob job_from_json(std::string_view json_text) {
  GenerationJob job;
  try {
    auto doc = nlohmann::json::parse(json_text);
    job.job_id = doc.at("job_id").get<std::string>();
    job.video_id = doc.at("video_id").get<std::string>();
    auto state = job_state_from_id(doc.at("state").get<std::string>());
    if (!state) throw Error(Errc::Corrupt, "unknown job state");
    job.state = *state;
    job.attempts = doc.at("attempts").get<int>();
    if (!doc.at("error").is_null()) job.error = doc.at("error").get<std::string>();
    if (!doc.at("report").is_null()) job.report = report_from_json(doc.at("report").dump());
    job.history.clear();
    for (const auto& s : doc.at("history")) {
      auto h = job_state_from_id(s.get<std::string>());
      if (!h) throw Error(Errc::Corrupt, "unknown job state in history");
      job.history.push_back(*h);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Corrupt, e.what());
  }
  return job;
}

std::string utc_now_iso8601() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

PipelineResult run_job(const VideoManifest& manifest, const GenerationConfig& config, LmmClient& client,
                       const PipelineOptions& options) {
  PipelineResult result;
  GenerationJob& job = result.job;
  job.job_id = options.job_id;
  job.video_id = manifest.id;
  JobTracker tracker(job, options);
  tracker.publish();

  auto fail = [&](const std::string& why) -> PipelineResult {
    job.error = why;
    tracker.move(JobState::Failed);
    throw Error(Errc::JobFailed, why);
  };

  try {
    tracker.move(JobState::DescribingClips);
    validate_manifest(manifest);
    validate_config(config);
    const std::string manifest_hash = sha256_hex(manifest_to_json(manifest));
    result.clips = describe_clips(manifest, options, client, manifest_hash);

    tracker.move(JobState::CreatingPersonas);
    result.personas = create_personas(manifest, config, options, client, manifest_hash);

    const PromptBundle bundle =
        build_prompt_bundle(config, result.personas, result.clips, describe_text_level(manifest));
    std::vector<std::string> problems;
    std::vector<Danmaku> pool;
    std::optional<DanmakuTrack> accepted;
    std::string model_id;

    while (!accepted) {
      if (job.attempts >= kMaxGenerationAttempts) {
        std::string why = "no usable danmaku after " + std::to_string(job.attempts) + " attempts";
        for (const auto& p : problems) why += "; " + p;
        return fail(why);
      }
      tracker.move(JobState::Generating);
      ++job.attempts;
      LmmRequest req;
      req.system = bundle.system_text;
      req.user = bundle.user_text + (problems.empty() ? std::string() : corrective_feedback(problems));
      auto response = client.complete(req);
      model_id = response.model_id;

      tracker.move(JobState::Validating);
      problems.clear();
      try {
        auto parsed = parse_track(response.text, result.personas, manifest.duration_s);
        problems = hard_problems(parsed.track, config);
        if (problems.empty()) {
          accepted = std::move(parsed.track);
        } else {
          job.report = validate(parsed.track, manifest.duration_s, config);
          pool.insert(pool.end(), parsed.track.danmaku.begin(), parsed.track.danmaku.end());
        }
      } catch (const Error& e) {
        if (e.code() != Errc::NoItemsParsed) throw;
        problems.push_back("No danmaku item lines could be parsed. Use the lines \"- <role> | <timestamp>: "
                           "<generated danmaku>\" under the type headings.");
      }
      if (!accepted) tracker.publish();
    }

    DanmakuTrack track = std::move(*accepted);
    track.video_id = manifest.id;
    track.model_id = model_id;
    track.config = config;
    track.generated_at = model_id == kMockModelId ? std::string(kEpoch) : utc_now_iso8601();

    auto report = validate(track, manifest.duration_s, config);
    auto repaired = repair(track, report, config, manifest.duration_s, pool);
    result.track = std::move(repaired.track);
    result.report = std::move(repaired.report);
    job.report = result.report;
    result.schedule = layout(result.track, options.screen, manifest.duration_s);

    if (options.catalog) {
      auto lock = options.catalog->lock_video(manifest.id);
      options.catalog->save_manifest(manifest);
      options.catalog->save_personas(result.personas);
      options.catalog->save_track(result.track);
      options.catalog->save_schedule(manifest.id, result.schedule);
      options.catalog->save_report(manifest.id, report_to_json(result.report));
    }
    tracker.move(JobState::Done);
    return result;
  } catch (const Error& e) {
    if (e.code() == Errc::JobFailed) throw;
    return fail(e.what());
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

}  // namespace comet
