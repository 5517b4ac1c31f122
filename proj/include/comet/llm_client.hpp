#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <condition_variable>
#include <string>
#include <string_view>
#include <vector>

#include "comet/danmaku.hpp"
#include "comet/error.hpp"
#include "comet/persona.hpp"
#include "comet/video_model.hpp"

namespace comet {

struct LmmRequest {
  std::string system;
  std::string user;
  double temperature = 1.0;
  int max_output_units = 4096;
  double timeout_s = 120;
};

struct LmmResponse {
  std::string text;
  std::string model_id;
  std::int64_t latency_ms = 0;
};

/// One transport attempt. Implementations throw comet::Error with Timeout,
/// RateLimited, Malformed or AuthFailure.
class LmmBackend {
 public:
  virtual ~LmmBackend() = default;
  virtual LmmResponse complete(const LmmRequest& req) = 0;
};

/// Request body in the common chat-completion shape.
std::string chat_request_json(const LmmRequest& req, std::string_view model);
/// Pulls choices[0].message.content and model out of a chat-completion
/// response body. Throws Error(Malformed).
LmmResponse parse_chat_response(std::string_view body);

struct HttpBackendOptions {
  /// Full URL of the chat-completion route, e.g. https://host/v1/chat/completions.
  std::string endpoint;
  std::string api_key;
  std::string model;
  /// When set, every raw response body is appended here as one JSON line.
  std::string record_path;
};

class HttpBackend : public LmmBackend {
 public:
  explicit HttpBackend(HttpBackendOptions options);
  LmmResponse complete(const LmmRequest& req) override;

 private:
  HttpBackendOptions options_;
  std::string scheme_host_port_;
  std::string path_;
  std::mutex record_mutex_;
};

/// Serves recorded response bodies in order, cycling when exhausted.
class ReplayBackend : public LmmBackend {
 public:
  /// `fixture_json` is {"responses": [<raw body>, ...]} where each raw body is
  /// a string holding the wire response.
  explicit ReplayBackend(std::string_view fixture_json);
  LmmResponse complete(const LmmRequest& req) override;

 private:
  std::vector<std::string> bodies_;
  std::size_t next_ = 0;
  std::mutex mutex_;
};

/// Returns the scripted texts (or errors) in order; the last entry repeats.
class ScriptedBackend : public LmmBackend {
 public:
  struct Step {
    std::string text;
    std::optional<Errc> error;
  };
  explicit ScriptedBackend(std::vector<Step> steps, std::string model_id = "scripted");
  LmmResponse complete(const LmmRequest& req) override;
  std::size_t calls() const;
  std::vector<LmmRequest> requests() const;

 private:
  std::vector<Step> steps_;
  std::string model_id_;
  mutable std::mutex mutex_;
  std::vector<LmmRequest> seen_;
};

/// Deterministic stand-in that answers the three prompt kinds of the pipeline
/// (clip descriptions, personas, danmaku generation) from the manifest.
class MockBackend : public LmmBackend {
 public:
  MockBackend(VideoManifest manifest, GenerationConfig config, std::uint64_t seed);
  LmmResponse complete(const LmmRequest& req) override;

 private:
  VideoManifest manifest_;
  GenerationConfig config_;
  std::uint64_t seed_;
};

inline constexpr std::string_view kMockModelId = "mock-lmm-1";

/// Markdown in the response grammar describing a track that meets every
/// constraint of `config`. Deterministic in (manifest.id, seed).
std::string generate_mock_track(const VideoManifest& manifest, const PersonaSet& personas,
                                const GenerationConfig& config, std::uint64_t seed);

/// Personas answered by the mock for a persona prompt asking for `n`.
PersonaSet mock_personas(int n);
/// Clip descriptions answered by the mock for one clip.
std::string mock_clip_description(const VideoManifest& manifest, const SceneClip& clip);

struct RetryPolicy {
  int attempts = 3;
  double base_delay_s = 1.0;
};

/// Wraps a backend with retries, exponential backoff, a deadline of
/// timeout_s plus the backoff budget, and a cap on concurrent calls.
class LmmClient {
 public:
  using Sleeper = std::function<void(double seconds)>;

  explicit LmmClient(std::shared_ptr<LmmBackend> backend, RetryPolicy policy = {}, int max_in_flight = 2,
                     Sleeper sleeper = {});
  LmmResponse complete(const LmmRequest& req);
  int peak_in_flight() const;

 private:
  std::shared_ptr<LmmBackend> backend_;
  RetryPolicy policy_;
  int max_in_flight_;
  Sleeper sleeper_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  int peak_ = 0;
};

enum class BackendKind { Http, Mock };

/// COMET_LLM_BACKEND, defaulting to http when COMET_LLM_ENDPOINT is set and
/// mock otherwise.
BackendKind backend_kind_from_env();
/// Reads COMET_LLM_ENDPOINT, COMET_LLM_KEY and COMET_LLM_MODEL. Throws
/// Error(InvalidInput) when the endpoint is missing.
HttpBackendOptions http_options_from_env();

}  // namespace comet
