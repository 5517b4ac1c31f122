#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "comet/danmaku.hpp"
#include "comet/llm_client.hpp"
#include "comet/pipeline.hpp"
#include "comet/store.hpp"

namespace httplib {
class Server;
}

namespace comet {

struct PostDanmakuRequest {
  std::string video_id;
  double time_s = 0;
  std::string text;
  Rgb color = Rgb::white();
  Position position = Position::Scroll;
};

inline constexpr std::size_t kMaxPostGraphemes = 200;

struct Delivery {
  Danmaku danmaku;
  bool replay = false;
};

/// {...danmaku fields..., "replay": bool}
std::string delivery_to_json(const Delivery& d);

struct StreamOptions {
  double lookahead_s = 10;
  double seek_back_s = 2;
  double session_timeout_s = 30;
};

/// Heartbeat-driven delivery windows, one per playback session. The client
/// reports its position; every record with time_s <= position + lookahead is
/// queued once. A backward jump of more than seek_back_s reopens the window
/// at position - lookahead and marks records seen before as replays; a
/// forward jump past the lookahead skips what was jumped over.
class SessionHub {
 public:
  using Clock = std::function<double()>;
  using Snapshot = std::shared_ptr<const std::vector<Danmaku>>;

  explicit SessionHub(StreamOptions options = {}, Clock clock = {});

  /// Replaces the records sessions of this video deliver from.
  void set_track(const std::string& video_id, std::vector<Danmaku> records);
  Snapshot track(const std::string& video_id) const;

  /// Creates the session on first use. Throws SessionExpired for a session
  /// that missed its heartbeat deadline and VideoNotFound for a mismatch.
  void heartbeat(const std::string& session_id, const std::string& video_id, double position_s);
  /// Appends a freshly posted record to the video's snapshot and pushes it to
  /// every live session of that video.
  void publish(const std::string& video_id, const Danmaku& record);

  /// Waits up to `wait_s` for queued deliveries and takes them all. Throws
  /// SessionExpired once the session is dead.
  std::vector<Delivery> drain(const std::string& session_id, double wait_s = 0);
  bool has_session(const std::string& session_id) const;
  /// Marks a session attached to a stream; unknown sessions are created at
  /// position 0.
  void attach(const std::string& session_id, const std::string& video_id);
  void shutdown();

 private:
  struct Session {
    std::string video_id;
    double position_s = 0;
    double floor_s = 0;
    double last_beat = 0;
    bool started = false;
    std::set<std::string> window;
    std::set<std::string> ever;
    std::vector<Delivery> queue;
  };

  bool expired(const Session& s) const;
  void fill(Session& s);
  Session& session_for(const std::string& session_id, const std::string& video_id);

  StreamOptions options_;
  Clock clock_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::map<std::string, Snapshot> tracks_;
  std::map<std::string, Session> sessions_;
  std::set<std::string> expired_ids_;  // expired sessions stay dead
  bool stopping_ = false;
};

struct ServiceOptions {
  StreamOptions stream;
  /// Builds the backend for a generation job. Defaults to the environment
  /// choice (mock or http).
  std::function<std::shared_ptr<LmmBackend>(const VideoManifest&, const GenerationConfig&, std::uint64_t seed)>
      backend_factory;
  int max_jobs = 0;
  SessionHub::Clock clock;
};

class Service {
 public:
  Service(Catalog& catalog, ServiceOptions options = {});
  ~Service();

  Danmaku handle_post_danmaku(const PostDanmakuRequest& req);
  /// Returns the job id. Throws VideoNotFound; a video with an active job
  /// returns that job's id.
  std::string start_job(const std::string& video_id, std::optional<GenerationConfig> config, std::uint64_t seed);
  std::optional<GenerationJob> job(const std::string& job_id) const;
  /// Blocks until the job finishes.
  void wait_job(const std::string& job_id);

  SessionHub& hub() { return hub_; }

  /// Binds and serves in a background thread; returns the bound port.
  int start(const std::string& host, int port);
  void stop();

 private:
  void install_routes();
  SessionHub::Snapshot snapshot(const std::string& video_id);

  Catalog& catalog_;
  ServiceOptions options_;
  SessionHub hub_;
  std::unique_ptr<httplib::Server> server_;
  std::thread server_thread_;

  mutable std::mutex jobs_mutex_;
  std::condition_variable jobs_cv_;
  std::map<std::string, GenerationJob> jobs_;
  std::map<std::string, std::string> active_by_video_;
  std::vector<std::thread> workers_;
  std::shared_ptr<LmmClient> shared_http_client_;
  int running_jobs_ = 0;
  std::uint64_t job_counter_ = 0;
  std::atomic<std::uint64_t> session_counter_{0};
};

/// "host:port" from COMET_BIND_ADDR, default 127.0.0.1:8080.
std::pair<std::string, int> bind_addr_from_env();

}  // namespace comet
