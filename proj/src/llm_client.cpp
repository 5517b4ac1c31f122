#include "comet/llm_client.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "comet/error.hpp"
#include "comet/text_units.hpp"

namespace comet {

using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_until(Clock::time_point deadline) {
  return std::chrono::duration<double>(deadline - Clock::now()).count();
}

std::string env_or(const char* name, std::string fallback = {}) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

}  // namespace

std::string chat_request_json(const LmmRequest& req, std::string_view model) {
  json doc;
  if (!model.empty()) doc["model"] = model;
  doc["messages"] = json::array({{{"role", "system"}, {"content", req.system}}, {{"role", "user"}, {"content", req.user}}});
  doc["temperature"] = req.temperature;
  doc["max_tokens"] = req.max_output_units;
  return doc.dump(-1, ' ', false, json::error_handler_t::replace);
}

LmmResponse parse_chat_response(std::string_view body) {
  LmmResponse out;
  try {
    auto doc = json::parse(body);
    const auto& msg = doc.at("choices").at(0).at("message");
    out.text = msg.at("content").get<std::string>();
    if (doc.contains("model") && doc["model"].is_string()) out.model_id = doc["model"].get<std::string>();
  } catch (const json::exception& e) {
    throw Error(Errc::Malformed, std::string("chat response: ") + e.what());
  }
  if (!is_valid_utf8(out.text)) throw Error(Errc::Malformed, "response text is not valid UTF-8");
  return out;
}

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
  const auto& url = options_.endpoint;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(Errc::InvalidInput, "endpoint must be an absolute URL: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

LmmResponse HttpBackend::complete(const LmmRequest& req) {
  httplib::Client cli(scheme_host_port_);
  auto timeout = std::chrono::duration<double>(std::max(req.timeout_s, 0.001));
  cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(
      std::min(timeout, std::chrono::duration<double>(10.0))));
  cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  cli.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

  const auto started = Clock::now();
  auto res = cli.Post(path_, headers, chat_request_json(req, options_.model), "application/json");
  if (!res) throw Error(Errc::Timeout, "no response from " + scheme_host_port_ + ": " + httplib::to_string(res.error()));

  if (res->status == 429) {
    double retry_after = 1.0;
    if (res->has_header("Retry-After")) {
      try {
        retry_after = std::stod(res->get_header_value("Retry-After"));
      } catch (const std::exception&) {
      }
    }
    throw RateLimitedError(retry_after, "endpoint returned 429");
  }
  if (res->status == 401 || res->status == 403) {
    throw Error(Errc::AuthFailure, "endpoint returned " + std::to_string(res->status));
  }
  if (res->status >= 500) throw Error(Errc::Timeout, "endpoint returned " + std::to_string(res->status));
  if (res->status != 200) throw Error(Errc::Malformed, "endpoint returned " + std::to_string(res->status));

  if (!options_.record_path.empty()) {
    std::lock_guard lock(record_mutex_);
    std::ofstream rec(options_.record_path, std::ios::app | std::ios::binary);
    rec << json(res->body).dump() << "\n";
  }

  LmmResponse out = parse_chat_response(res->body);
  if (out.model_id.empty()) out.model_id = options_.model;
  out.latency_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started).count();
  return out;
}

ReplayBackend::ReplayBackend(std::string_view fixture_json) {
  try {
    auto doc = json::parse(fixture_json);
    for (const auto& b : doc.at("responses")) bodies_.push_back(b.get<std::string>());
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidInput, std::string("replay fixture: ") + e.what());
  }
  if (bodies_.empty()) throw Error(Errc::InvalidInput, "replay fixture holds no responses");
}

LmmResponse ReplayBackend::complete(const LmmRequest&) {
  std::string body;
  {
    std::lock_guard lock(mutex_);
    body = bodies_[next_ % bodies_.size()];
    ++next_;
  }
  return parse_chat_response(body);
}

ScriptedBackend::ScriptedBackend(std::vector<Step> steps, std::string model_id)
    : steps_(std::move(steps)), model_id_(std::move(model_id)) {
  if (steps_.empty()) steps_.push_back(Step{});
}

LmmResponse ScriptedBackend::complete(const LmmRequest& req) {
  Step step;
  {
    std::lock_guard lock(mutex_);
    step = steps_[std::min(seen_.size(), steps_.size() - 1)];
    seen_.push_back(req);
  }
  if (step.error) {
    if (*step.error == Errc::RateLimited) throw RateLimitedError(0, "scripted");
    throw Error(*step.error, "scripted");
  }
  return LmmResponse{step.text, model_id_, 0};
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mutex_);
  return seen_.size();
}

std::vector<LmmRequest> ScriptedBackend::requests() const {
  std::lock_guard lock(mutex_);
  return seen_;
}

LmmClient::LmmClient(std::shared_ptr<LmmBackend> backend, RetryPolicy policy, int max_in_flight, Sleeper sleeper)
    : backend_(std::move(backend)), policy_(policy), max_in_flight_(std::max(max_in_flight, 1)),
      sleeper_(std::move(sleeper)) {
  if (!sleeper_) {
    sleeper_ = [](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); };
  }
}

int LmmClient::peak_in_flight() const {
  std::lock_guard lock(mutex_);
  return peak_;
}

LmmResponse LmmClient::complete(const LmmRequest& req) {
  if (req.system.empty() || req.user.empty()) throw Error(Errc::InvalidInput, "system and user text are required");

  {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
    ++in_flight_;
    peak_ = std::max(peak_, in_flight_);
  }
  struct Release {
    LmmClient* self;
    ~Release() {
      {
        std::lock_guard lock(self->mutex_);
        --self->in_flight_;
      }
      self->cv_.notify_one();
    }
  } release{this};

  double backoff_budget = 0;
  for (int k = 0; k + 1 < policy_.attempts; ++k) backoff_budget += policy_.base_delay_s * std::pow(2.0, k);
  const auto deadline =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(
                         std::chrono::duration<double>(req.timeout_s + backoff_budget));

  std::optional<Error> last;
  double last_retry_after = -1;
  for (int attempt = 0; attempt < policy_.attempts; ++attempt) {
    double remaining = seconds_until(deadline);
    if (remaining <= 0) break;
    LmmRequest r = req;
    r.timeout_s = std::min(req.timeout_s, remaining);
    try {
      return backend_->complete(r);
    } catch (const RateLimitedError& e) {
      last = e;
      last_retry_after = e.retry_after_s();
    } catch (const Error& e) {
      if (e.code() != Errc::Timeout) throw;
      last = e;
      last_retry_after = -1;
    }
    if (attempt + 1 == policy_.attempts) break;
    double delay = policy_.base_delay_s * std::pow(2.0, attempt);
    if (last_retry_after >= 0) delay = std::max(delay, last_retry_after);
    delay = std::min(delay, std::max(seconds_until(deadline), 0.0));
    if (delay > 0) sleeper_(delay);
  }
  if (!last) throw Error(Errc::Timeout, "deadline passed before the first attempt");
  if (last->code() == Errc::RateLimited) throw RateLimitedError(std::max(last_retry_after, 0.0), last->what());
  throw Error(last->code(), std::string("after ") + std::to_string(policy_.attempts) + " attempts: " + last->what());
}

BackendKind backend_kind_from_env() {
  auto v = env_or("COMET_LLM_BACKEND");
  if (v == "mock") return BackendKind::Mock;
  if (v == "http") return BackendKind::Http;
  if (!v.empty()) throw Error(Errc::InvalidInput, "COMET_LLM_BACKEND must be http or mock, got " + v);
  return env_or("COMET_LLM_ENDPOINT").empty() ? BackendKind::Mock : BackendKind::Http;
}

HttpBackendOptions http_options_from_env() {
  HttpBackendOptions o;
  o.endpoint = env_or("COMET_LLM_ENDPOINT");
  o.api_key = env_or("COMET_LLM_KEY");
  o.model = env_or("COMET_LLM_MODEL");
  if (o.endpoint.empty()) throw Error(Errc::InvalidInput, "COMET_LLM_ENDPOINT is not set");
  return o;
}

}  // namespace comet
