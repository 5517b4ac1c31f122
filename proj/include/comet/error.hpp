#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace comet {

enum class Errc {
  InvalidInput,
  // video_model
  EmptyManifest,
  MalformedHints,
  ZeroLengthClip,
  NoScenesFound,
  // persona
  WrongCount,
  MissingField,
  InvalidField,
  MalformedJson,
  // llm_client
  Timeout,
  RateLimited,
  Malformed,
  AuthFailure,
  // track_parser
  NoItemsParsed,
  // store
  MalformedXml,
  NotFound,
  Corrupt,
  // pipeline
  JobFailed,
  // service
  VideoNotFound,
  InvalidTime,
  EmptyText,
  SessionExpired,
};

std::string_view to_string(Errc code);

/// Typed failure raised by every module. Callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

class RateLimitedError : public Error {
 public:
  RateLimitedError(double retry_after_s, const std::string& detail)
      : Error(Errc::RateLimited, detail), retry_after_s_(retry_after_s) {}

  double retry_after_s() const noexcept { return retry_after_s_; }

 private:
  double retry_after_s_;
};

}  // namespace comet
