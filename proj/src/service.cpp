#include "comet/service.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "comet/error.hpp"
#include "comet/text_units.hpp"

namespace comet {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

double steady_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

int http_status(Errc code) {
  switch (code) {
    case Errc::VideoNotFound:
    case Errc::NotFound: return 404;
    case Errc::InvalidTime:
    case Errc::EmptyText:
    case Errc::InvalidInput:
    case Errc::MalformedJson: return 400;
    case Errc::SessionExpired: return 410;
    default: return 500;
  }
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view detail) {
  res.status = status;
  ojson body;
  body["error"] = code;
  body["detail"] = detail;
  res.set_content(body.dump(-1, ' ', false, ojson::error_handler_t::replace), "application/json");
}

template <class F>
void guarded(httplib::Response& res, F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_error(res, http_status(e.code()), to_string(e.code()), e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, "InvalidInput", e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "Internal", e.what());
  }
}

void send_json(httplib::Response& res, const std::string& body, int status = 200) {
  res.status = status;
  res.set_content(body, "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  auto doc = json::parse(req.body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(Errc::InvalidInput, "request body must be a JSON object");
  return doc;
}

}  // namespace

std::string delivery_to_json(const Delivery& d) {
  auto doc = ojson::parse(danmaku_to_json(d.danmaku));
  doc["replay"] = d.replay;
  return doc.dump(-1, ' ', false, ojson::error_handler_t::replace);
}

SessionHub::SessionHub(StreamOptions options, Clock clock) : options_(options), clock_(std::move(clock)) {
  if (!clock_) clock_ = steady_seconds;
}

void SessionHub::set_track(const std::string& video_id, std::vector<Danmaku> records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const Danmaku& a, const Danmaku& b) { return a.time_s < b.time_s; });
  std::lock_guard lock(mutex_);
  tracks_[video_id] = std::make_shared<const std::vector<Danmaku>>(std::move(records));
}

SessionHub::Snapshot SessionHub::track(const std::string& video_id) const {
  std::lock_guard lock(mutex_);
  auto it = tracks_.find(video_id);
  return it == tracks_.end() ? nullptr : it->second;
}

bool SessionHub::expired(const Session& s) const {
  return clock_() - s.last_beat > options_.session_timeout_s;
}

SessionHub::Session& SessionHub::session_for(const std::string& session_id, const std::string& video_id) {
  const std::string timeout_msg = "no heartbeat for " + std::to_string(options_.session_timeout_s) + " s";
  if (expired_ids_.count(session_id)) throw Error(Errc::SessionExpired, timeout_msg);
  auto it = sessions_.find(session_id);
  if (it != sessions_.end()) {
    if (expired(it->second)) {
      sessions_.erase(it);
      expired_ids_.insert(session_id);
      throw Error(Errc::SessionExpired, "no heartbeat for " + std::to_string(options_.session_timeout_s) + " s");
    }
    if (it->second.video_id != video_id) {
      throw Error(Errc::VideoNotFound, "session " + session_id + " belongs to another video");
    }
    return it->second;
  }
  Session& s = sessions_[session_id];
  s.video_id = video_id;
  s.last_beat = clock_();
  return s;
}

void SessionHub::fill(Session& s) {
  auto it = tracks_.find(s.video_id);
  if (it == tracks_.end() || !it->second) return;
  const double horizon = s.position_s + options_.lookahead_s;
  for (const auto& d : *it->second) {
    if (d.time_s > horizon + 1e-9) break;
    if (d.time_s < s.floor_s - 1e-9 || s.window.count(d.id)) continue;
    s.queue.push_back(Delivery{d, s.ever.count(d.id) > 0});
    s.window.insert(d.id);
    s.ever.insert(d.id);
  }
}

void SessionHub::heartbeat(const std::string& session_id, const std::string& video_id, double position_s) {
  if (!std::isfinite(position_s) || position_s < 0) throw Error(Errc::InvalidTime, "position must be >= 0");
  {
    std::lock_guard lock(mutex_);
    Session& s = session_for(session_id, video_id);
    s.last_beat = clock_();
    if (!s.started) {
      s.started = true;
      s.floor_s = std::max(0.0, position_s - options_.lookahead_s);
    } else if (position_s < s.position_s - options_.seek_back_s) {
      s.window.clear();
      s.floor_s = std::max(0.0, position_s - options_.lookahead_s);
    } else if (position_s > s.position_s + options_.lookahead_s) {
      s.floor_s = std::max(s.floor_s, position_s);
    }
    s.position_s = position_s;
    fill(s);
  }
  cv_.notify_all();
}

void SessionHub::publish(const std::string& video_id, const Danmaku& record) {
  {
    std::lock_guard lock(mutex_);
    auto& snap = tracks_[video_id];
    std::vector<Danmaku> records = snap ? *snap : std::vector<Danmaku>{};
    bool known = std::any_of(records.begin(), records.end(), [&](const Danmaku& d) { return d.id == record.id; });
    if (!known) {
      auto pos = std::upper_bound(records.begin(), records.end(), record.time_s,
                                  [](double t, const Danmaku& d) { return t < d.time_s; });
      records.insert(pos, record);
      snap = std::make_shared<const std::vector<Danmaku>>(std::move(records));
    }
    for (auto& [id, s] : sessions_) {
      if (s.video_id != video_id || s.window.count(record.id)) continue;
      s.queue.push_back(Delivery{record, s.ever.count(record.id) > 0});
      s.window.insert(record.id);
      s.ever.insert(record.id);
    }
  }
  cv_.notify_all();
}

std::vector<Delivery> SessionHub::drain(const std::string& session_id, double wait_s) {
  std::unique_lock lock(mutex_);
  auto ready = [&] {
    auto it = sessions_.find(session_id);
    return stopping_ || it == sessions_.end() || !it->second.queue.empty() || expired(it->second);
  };
  if (wait_s > 0) cv_.wait_for(lock, std::chrono::duration<double>(wait_s), ready);
  if (stopping_) throw Error(Errc::SessionExpired, "service stopping");
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(Errc::SessionExpired, "unknown session " + session_id);
  if (it->second.queue.empty() && expired(it->second)) {
    sessions_.erase(it);
    expired_ids_.insert(session_id);
    throw Error(Errc::SessionExpired, "no heartbeat for " + std::to_string(options_.session_timeout_s) + " s");
  }
  std::vector<Delivery> out;
  out.swap(it->second.queue);
  return out;
}

bool SessionHub::has_session(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  return sessions_.count(session_id) > 0;
}

void SessionHub::attach(const std::string& session_id, const std::string& video_id) {
  std::lock_guard lock(mutex_);
  session_for(session_id, video_id).last_beat = clock_();
}

void SessionHub::shutdown() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
}

Service::Service(Catalog& catalog, ServiceOptions options)
    : catalog_(catalog), options_(std::move(options)), hub_(options_.stream, options_.clock) {
  if (options_.max_jobs <= 0) options_.max_jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (!options_.backend_factory) {
    options_.backend_factory = [this](const VideoManifest& m, const GenerationConfig& c,
                                      std::uint64_t seed) -> std::shared_ptr<LmmBackend> {
      if (backend_kind_from_env() == BackendKind::Mock) return std::make_shared<MockBackend>(m, c, seed);
      return std::make_shared<HttpBackend>(http_options_from_env());
    };
  }
}

Service::~Service() {
  stop();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(jobs_mutex_);
    workers.swap(workers_);
  }
  for (auto& w : workers) {
    if (w.joinable()) w.join();
  }
}

SessionHub::Snapshot Service::snapshot(const std::string& video_id) {
  if (auto snap = hub_.track(video_id)) return snap;
  std::vector<Danmaku> records;
  try {
    records = catalog_.load_track(video_id).danmaku;
  } catch (const Error& e) {
    if (e.code() != Errc::NotFound) throw;
  }
  if (!hub_.track(video_id)) hub_.set_track(video_id, std::move(records));
  return hub_.track(video_id);
}

Danmaku Service::handle_post_danmaku(const PostDanmakuRequest& req) {
  if (!catalog_.has_video(req.video_id)) throw Error(Errc::VideoNotFound, req.video_id);
  const auto manifest = catalog_.load_manifest(req.video_id);
  if (!std::isfinite(req.time_s) || req.time_s < 0 || req.time_s > manifest.duration_s) {
    throw Error(Errc::InvalidTime, "time_s must lie within [0, " + std::to_string(manifest.duration_s) + "]");
  }
  std::string text = trim_copy(req.text);
  if (text.empty()) throw Error(Errc::EmptyText, "text is empty");
  if (!is_valid_utf8(text)) throw Error(Errc::InvalidInput, "text is not valid UTF-8");
  if (count_units(text, LengthUnit::Graphemes) > kMaxPostGraphemes) {
    text = truncate_units(text, kMaxPostGraphemes + 1, LengthUnit::Graphemes);
  }
  snapshot(req.video_id);
  Danmaku record = make_danmaku("", std::nullopt, std::round(req.time_s * 100) / 100, DanmakuType::UserPosted,
                                std::move(text), req.color);
  record.position = req.position;
  record = catalog_.append_user_danmaku(req.video_id, std::move(record));
  hub_.publish(req.video_id, record);
  return record;
}

std::string Service::start_job(const std::string& video_id, std::optional<GenerationConfig> config,
                               std::uint64_t seed) {
  if (!catalog_.has_video(video_id)) throw Error(Errc::VideoNotFound, video_id);
  auto manifest = catalog_.load_manifest(video_id);
  GenerationConfig cfg = config.value_or(GenerationConfig{});
  validate_config(cfg);

  std::string job_id;
  {
    std::lock_guard lock(jobs_mutex_);
    if (auto it = active_by_video_.find(video_id); it != active_by_video_.end()) return it->second;
    job_id = "job-" + video_id + "-" + std::to_string(++job_counter_);
    GenerationJob job;
    job.job_id = job_id;
    job.video_id = video_id;
    jobs_[job_id] = job;
    active_by_video_[video_id] = job_id;
    catalog_.save_job(job_id, job_to_json(job));
  }

  auto backend = options_.backend_factory(manifest, cfg, seed);
  std::shared_ptr<LmmClient> client;
  if (dynamic_cast<HttpBackend*>(backend.get())) {
    std::lock_guard lock(jobs_mutex_);
    if (!shared_http_client_) shared_http_client_ = std::make_shared<LmmClient>(backend);
    client = shared_http_client_;
  } else {
    client = std::make_shared<LmmClient>(backend);
  }

  std::lock_guard lock(jobs_mutex_);
  workers_.emplace_back([this, job_id, video_id, manifest, cfg, client] {
    {
      std::unique_lock wait(jobs_mutex_);
      jobs_cv_.wait(wait, [&] { return running_jobs_ < options_.max_jobs; });
      ++running_jobs_;
    }
    PipelineOptions opts;
    opts.catalog = &catalog_;
    opts.job_id = job_id;
    opts.on_update = [this](const GenerationJob& j) {
      std::lock_guard l(jobs_mutex_);
      jobs_[j.job_id] = j;
    };
    try {
      auto result = run_job(manifest, cfg, *client, opts);
      hub_.set_track(video_id, result.track.danmaku);
    } catch (const std::exception&) {
    }
    {
      std::lock_guard l(jobs_mutex_);
      --running_jobs_;
      active_by_video_.erase(video_id);
    }
    jobs_cv_.notify_all();
  });
  return job_id;
}

std::optional<GenerationJob> Service::job(const std::string& job_id) const {
  {
    std::lock_guard lock(jobs_mutex_);
    if (auto it = jobs_.find(job_id); it != jobs_.end()) return it->second;
  }
  try {
    return job_from_json(catalog_.load_job(job_id));
  } catch (const Error&) {
    return std::nullopt;
  }
}

void Service::wait_job(const std::string& job_id) {
  std::unique_lock lock(jobs_mutex_);
  jobs_cv_.wait(lock, [&] {
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) return true;
    bool finished = it->second.state == JobState::Done || it->second.state == JobState::Failed;
    return finished && !active_by_video_.count(it->second.video_id);
  });
}

void Service::install_routes() {
  auto& srv = *server_;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

  srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  srv.Get("/videos", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      ojson arr = ojson::array();
      for (const auto& v : catalog_.list_videos()) {
        arr.push_back({{"id", v.id}, {"title", v.title}, {"course", v.course}, {"duration_s", v.duration_s}});
      }
      send_json(res, arr.dump(-1, ' ', false, ojson::error_handler_t::replace));
    });
  });

  srv.Get(R"(/videos/([^/]+)/track)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      if (!catalog_.has_video(id)) throw Error(Errc::VideoNotFound, id);
      send_json(res, track_to_json(catalog_.load_track(id)));
    });
  });

  srv.Get(R"(/videos/([^/]+)/danmaku)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      if (!catalog_.has_video(id)) throw Error(Errc::VideoNotFound, id);
      double from = req.has_param("from") ? std::stod(req.get_param_value("from")) : 0.0;
      double to = req.has_param("to") ? std::stod(req.get_param_value("to")) : 1e300;
      auto snap = snapshot(id);
      ojson arr = ojson::array();
      for (const auto& d : *snap) {
        if (d.time_s >= from && d.time_s <= to) arr.push_back(ojson::parse(danmaku_to_json(d)));
      }
      send_json(res, arr.dump(-1, ' ', false, ojson::error_handler_t::replace));
    });
  });

  srv.Post(R"(/videos/([^/]+)/danmaku)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto body = parse_body(req);
      PostDanmakuRequest post;
      post.video_id = req.matches[1];
      if (!body.contains("time_s") || !body["time_s"].is_number()) throw Error(Errc::InvalidTime, "time_s missing");
      post.time_s = body["time_s"].get<double>();
      post.text = body.value("text", std::string());
      if (body.contains("color")) {
        const auto& c = body["color"];
        if (c.is_number_integer()) {
          post.color = Rgb{static_cast<std::uint32_t>(c.get<std::int64_t>() & 0xFFFFFF)};
        } else if (auto rgb = color_from_hex(c.get<std::string>())) {
          post.color = *rgb;
        } else {
          throw Error(Errc::InvalidInput, "color must be #RRGGBB");
        }
      }
      if (body.contains("position")) {
        auto p = position_from_id(body["position"].get<std::string>());
        if (!p) throw Error(Errc::InvalidInput, "position must be scroll, top or bottom");
        post.position = *p;
      }
      auto record = handle_post_danmaku(post);
      send_json(res, danmaku_to_json(record), 201);
    });
  });

  srv.Post(R"(/videos/([^/]+)/generate)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto body = parse_body(req);
      std::optional<GenerationConfig> config;
      if (body.contains("config")) config = config_from_json(body["config"].dump());
      std::uint64_t seed = body.value("seed", std::uint64_t{0});
      auto job_id = start_job(req.matches[1], config, seed);
      send_json(res, ojson{{"job_id", job_id}}.dump(), 202);
    });
  });

  srv.Get(R"(/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto j = job(req.matches[1]);
      if (!j) throw Error(Errc::NotFound, "job " + std::string(req.matches[1]));
      send_json(res, job_to_json(*j));
    });
  });

  srv.Post(R"(/videos/([^/]+)/cursor)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      if (!catalog_.has_video(id)) throw Error(Errc::VideoNotFound, id);
      auto body = parse_body(req);
      std::string session = body.at("session").get<std::string>();
      double pos = body.at("position_s").get<double>();
      snapshot(id);
      hub_.heartbeat(session, id, pos);
      send_json(res, ojson{{"session", session}, {"position_s", pos}}.dump());
    });
  });

  srv.Get(R"(/videos/([^/]+)/stream)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      if (!catalog_.has_video(id)) throw Error(Errc::VideoNotFound, id);
      std::string session = req.has_param("session") ? req.get_param_value("session")
                                                     : "s" + std::to_string(++session_counter_);
      snapshot(id);
      hub_.attach(session, id);
      res.set_header("Cache-Control", "no-cache");
      auto greeted = std::make_shared<bool>(false);
      res.set_chunked_content_provider(
          "text/event-stream", [this, session, greeted](std::size_t, httplib::DataSink& sink) {
            if (!*greeted) {
              *greeted = true;
              std::string hello = "event: session\ndata: " + ojson{{"session", session}}.dump() + "\n\n";
              return sink.write(hello.data(), hello.size());
            }
            try {
              auto items = hub_.drain(session, 0.5);
              std::string chunk;
              for (const auto& d : items) chunk += "event: danmaku\ndata: " + delivery_to_json(d) + "\n\n";
              if (chunk.empty()) chunk = ": keepalive\n\n";
              return sink.write(chunk.data(), chunk.size());
            } catch (const Error&) {
              std::string bye = "event: expired\ndata: {}\n\n";
              sink.write(bye.data(), bye.size());
              sink.done();
              return true;
            }
          });
    });
  });
}

int Service::start(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  install_routes();
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(Errc::InvalidInput, "cannot bind " + host + ":" + std::to_string(port));
  server_thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void Service::stop() {
  hub_.shutdown();
  if (server_) server_->stop();
  if (server_thread_.joinable()) server_thread_.join();
}

std::pair<std::string, int> bind_addr_from_env() {
  const char* v = std::getenv("COMET_BIND_ADDR");
  std::string addr = v && *v ? v : "127.0.0.1:8080";
  auto colon = addr.rfind(':');
  if (colon == std::string::npos) return {addr, 8080};
  return {addr.substr(0, colon), std::atoi(addr.c_str() + colon + 1)};
}

}  // namespace comet
