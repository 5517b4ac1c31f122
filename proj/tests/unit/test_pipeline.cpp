#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>

#include "../common/support.hpp"
#include "comet/error.hpp"
#include "comet/pipeline.hpp"

using namespace comet;
namespace fs = std::filesystem;

namespace {

VideoManifest manifest300() { return manifest_from_json(support::fixture("manifest_300s.json")); }

bool is_generation(const LmmRequest& r) { return r.system.find("danmaku generation agent") != std::string::npos; }
bool is_persona(const LmmRequest& r) { return r.system.find("distinct personas") != std::string::npos ||
                                              r.user.find("distinct personas") != std::string::npos; }

// Delegates to the mock but lets a test replace individual answers.
class Wrapped : public LmmBackend {
 public:
  using Override = std::function<std::optional<std::string>(const LmmRequest&, int generation_call, int persona_call)>;
  Wrapped(const VideoManifest& m, Override o) : mock_(m, GenerationConfig{}, 7), override_(std::move(o)) {}

  LmmResponse complete(const LmmRequest& req) override {
    std::lock_guard lock(mutex_);
    requests.push_back(req);
    if (is_generation(req)) ++generation_calls;
    if (is_persona(req)) ++persona_calls;
    if (override_) {
      if (auto text = override_(req, generation_calls, persona_calls)) return {*text, "wrapped", 0};
    }
    return mock_.complete(req);
  }

  std::vector<LmmRequest> requests;
  int generation_calls = 0;
  int persona_calls = 0;

 private:
  MockBackend mock_;
  Override override_;
  std::mutex mutex_;
};

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("comet-pipe-" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

}  // namespace

TEST(Pipeline, MockRunFinishesClean) {
  auto m = manifest300();
  LmmClient client(std::make_shared<MockBackend>(m, GenerationConfig{}, 7));
  auto r = run_job(m, GenerationConfig{}, client);
  EXPECT_EQ(r.job.state, JobState::Done);
  EXPECT_EQ(r.job.attempts, 1);
  EXPECT_EQ(r.job.history, (std::vector<JobState>{JobState::Queued, JobState::DescribingClips, JobState::CreatingPersonas,
                                                  JobState::Generating, JobState::Validating, JobState::Done}));
  EXPECT_TRUE(r.report.clean());
  EXPECT_EQ(r.track.generated_at, "1970-01-01T00:00:00Z");
  EXPECT_EQ(r.track.model_id, kMockModelId);
  EXPECT_EQ(r.track.video_id, m.id);
  EXPECT_EQ(r.schedule.size(), r.track.danmaku.size());
  EXPECT_EQ(r.personas.personas.size(), 6u);
  for (const auto& c : r.clips) EXPECT_TRUE(c.title);

  LmmClient again(std::make_shared<MockBackend>(m, GenerationConfig{}, 7));
  auto r2 = run_job(m, GenerationConfig{}, again);
  EXPECT_EQ(track_to_json(r2.track), track_to_json(r.track));
  EXPECT_EQ(schedule_to_json(r2.schedule), schedule_to_json(r.schedule));
}

TEST(Pipeline, PersistsArtifactsAndUsesTheCache) {
  TempDir dir;
  Catalog cat(dir.path());
  auto m = manifest300();
  std::vector<JobState> seen;
  PipelineOptions opts;
  opts.catalog = &cat;
  opts.job_id = "j1";
  opts.on_update = [&](const GenerationJob& j) { seen.push_back(j.state); };
  auto first = std::make_shared<Wrapped>(m, nullptr);
  LmmClient c1(first);
  auto r = run_job(m, GenerationConfig{}, c1, opts);
  EXPECT_EQ(cat.load_track(m.id), r.track);
  EXPECT_EQ(cat.load_schedule(m.id), r.schedule);
  EXPECT_EQ(cat.load_personas(m.id), r.personas);
  EXPECT_EQ(job_from_json(cat.load_job("j1")).state, JobState::Done);
  EXPECT_EQ(seen.back(), JobState::Done);

  auto second = std::make_shared<Wrapped>(m, nullptr);
  LmmClient c2(second);
  run_job(m, GenerationConfig{}, c2, opts);
  EXPECT_EQ(second->requests.size(), 1u);  // only the generation call
  EXPECT_EQ(second->generation_calls, 1);
}

TEST(Pipeline, EmptyVideoFails) {
  auto m = manifest300();
  m.duration_s = 0;
  GenerationJob last;
  PipelineOptions opts;
  opts.on_update = [&](const GenerationJob& j) { last = j; };
  LmmClient client(std::make_shared<MockBackend>(m, GenerationConfig{}, 7));
  try {
    run_job(m, GenerationConfig{}, client, opts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::JobFailed);
  }
  EXPECT_EQ(last.state, JobState::Failed);
  EXPECT_TRUE(last.error);
}

TEST(Pipeline, EmptyResponsesAreRegenerated) {
  auto m = manifest300();
  auto backend = std::make_shared<Wrapped>(m, [](const LmmRequest& r, int gen, int) -> std::optional<std::string> {
    if (is_generation(r) && gen <= 2) return std::string();
    return std::nullopt;
  });
  LmmClient client(backend);
  auto r = run_job(m, GenerationConfig{}, client);
  EXPECT_EQ(r.job.state, JobState::Done);
  EXPECT_EQ(r.job.attempts, 3);
  EXPECT_TRUE(r.report.clean());
  int with_feedback = 0;
  for (const auto& req : backend->requests) {
    if (is_generation(req) && req.user.find("The previous response was rejected") != std::string::npos) ++with_feedback;
  }
  EXPECT_EQ(with_feedback, 2);
}

TEST(Pipeline, GivesUpAfterThreeAttempts) {
  auto m = manifest300();
  auto backend = std::make_shared<Wrapped>(m, [](const LmmRequest& r, int, int) -> std::optional<std::string> {
    if (is_generation(r)) return std::string("nothing useful");
    return std::nullopt;
  });
  LmmClient client(backend);
  GenerationJob last;
  PipelineOptions opts;
  opts.on_update = [&](const GenerationJob& j) { last = j; };
  EXPECT_THROW(run_job(m, GenerationConfig{}, client, opts), Error);
  EXPECT_EQ(last.attempts, 3);
  EXPECT_EQ(last.state, JobState::Failed);
  EXPECT_EQ(backend->generation_calls, 3);
}

TEST(Pipeline, MissingCategoryFeedsTheRepairPool) {
  auto m = manifest300();
  auto backend = std::make_shared<Wrapped>(m, [](const LmmRequest& r, int gen, int) -> std::optional<std::string> {
    if (is_generation(r) && gen == 1) return std::string("# Emotion-related danmaku\n## Brief Compliment\n- A | 00:00:03: nice\n");
    return std::nullopt;
  });
  LmmClient client(backend);
  auto r = run_job(m, GenerationConfig{}, client);
  EXPECT_EQ(r.job.attempts, 2);
  EXPECT_EQ(r.job.state, JobState::Done);
}

TEST(Pipeline, PersonaAnswersAreRetried) {
  auto m = manifest300();
  auto backend = std::make_shared<Wrapped>(m, [](const LmmRequest& r, int, int persona) -> std::optional<std::string> {
    if (is_persona(r) && persona == 1) return std::string("{\"A\": {\"age\": 30}}");
    return std::nullopt;
  });
  LmmClient client(backend);
  auto r = run_job(m, GenerationConfig{}, client);
  EXPECT_EQ(backend->persona_calls, 2);
  EXPECT_EQ(r.personas.personas.size(), 6u);
}

TEST(Jobs, Transitions) {
  EXPECT_TRUE(transition_allowed(JobState::Queued, JobState::DescribingClips));
  EXPECT_TRUE(transition_allowed(JobState::Validating, JobState::Generating));
  EXPECT_TRUE(transition_allowed(JobState::Generating, JobState::Failed));
  EXPECT_FALSE(transition_allowed(JobState::Queued, JobState::Generating));
  EXPECT_FALSE(transition_allowed(JobState::Done, JobState::Failed));
  EXPECT_FALSE(transition_allowed(JobState::Failed, JobState::Queued));
  EXPECT_FALSE(transition_allowed(JobState::Generating, JobState::DescribingClips));
}

TEST(Jobs, JsonRoundTrip) {
  GenerationJob j;
  j.job_id = "j";
  j.video_id = "v";
  j.state = JobState::Failed;
  j.attempts = 2;
  j.error = "boom";
  j.history = {JobState::Queued, JobState::Failed};
  auto back = job_from_json(job_to_json(j));
  EXPECT_EQ(back.state, JobState::Failed);
  EXPECT_EQ(back.error, "boom");
  EXPECT_EQ(back.history, j.history);
  EXPECT_EQ(job_to_json(back), job_to_json(j));
  EXPECT_EQ(utc_now_iso8601().size(), 20u);
}
