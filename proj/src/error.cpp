#include "comet/error.hpp"

namespace comet {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidInput: return "InvalidInput";
    case Errc::EmptyManifest: return "EmptyManifest";
    case Errc::MalformedHints: return "MalformedHints";
    case Errc::ZeroLengthClip: return "ZeroLengthClip";
    case Errc::NoScenesFound: return "NoScenesFound";
    case Errc::WrongCount: return "WrongCount";
    case Errc::MissingField: return "MissingField";
    case Errc::InvalidField: return "InvalidField";
    case Errc::MalformedJson: return "MalformedJson";
    case Errc::Timeout: return "Timeout";
    case Errc::RateLimited: return "RateLimited";
    case Errc::Malformed: return "Malformed";
    case Errc::AuthFailure: return "AuthFailure";
    case Errc::NoItemsParsed: return "NoItemsParsed";
    case Errc::MalformedXml: return "MalformedXml";
    case Errc::NotFound: return "NotFound";
    case Errc::Corrupt: return "Corrupt";
    case Errc::JobFailed: return "JobFailed";
    case Errc::VideoNotFound: return "VideoNotFound";
    case Errc::InvalidTime: return "InvalidTime";
    case Errc::EmptyText: return "EmptyText";
    case Errc::SessionExpired: return "SessionExpired";
  }
  return "Unknown";
}

}  // namespace comet
