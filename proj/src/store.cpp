#include "comet/store.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "comet/error.hpp"

namespace comet {

namespace fs = std::filesystem;

namespace {

std::atomic<std::uint64_t> g_temp_counter{0};

void check_id(std::string_view id, std::string_view what) {
  if (id.empty() || id == "." || id == ".." ||
      id.find_first_of("/\\") != std::string_view::npos || id.find('\0') != std::string_view::npos) {
    throw Error(Errc::InvalidInput, std::string(what) + " id is not a valid file name: " + std::string(id));
  }
}

std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

int mode_of(Position p) {
  switch (p) {
    case Position::Scroll: return 1;
    case Position::Bottom: return 4;
    case Position::Top: return 5;
  }
  return 1;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::InvalidInput, "sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(g_temp_counter.fetch_add(1));
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(Errc::InvalidInput, "cannot write " + tmp.string());
  std::size_t done = 0;
  while (done < contents.size()) {
    auto n = ::write(fd, contents.data() + done, contents.size() - done);
    if (n < 0) {
      ::close(fd);
      fs::remove(tmp);
      throw Error(Errc::InvalidInput, "write failed for " + tmp.string());
    }
    done += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::NotFound, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Catalog::Catalog(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "videos");
  fs::create_directories(root_ / "jobs");
}

fs::path Catalog::video_dir(std::string_view video_id) const {
  check_id(video_id, "video");
  return root_ / "videos" / std::string(video_id);
}

std::mutex& Catalog::video_mutex(std::string_view video_id) {
  std::lock_guard lock(map_mutex_);
  auto& slot = video_mutexes_[std::string(video_id)];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

Catalog::WriteLock::WriteLock(std::unique_lock<std::mutex> lock, int fd) : lock_(std::move(lock)), fd_(fd) {}

Catalog::WriteLock::WriteLock(WriteLock&& other) noexcept : lock_(std::move(other.lock_)), fd_(other.fd_) {
  other.fd_ = -1;
}

Catalog::WriteLock::~WriteLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

Catalog::WriteLock Catalog::lock_video(std::string_view video_id) {
  auto dir = video_dir(video_id);
  fs::create_directories(dir);
  std::unique_lock lock(video_mutex(video_id));
  int fd = ::open((dir / ".lock").c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd >= 0) ::flock(fd, LOCK_EX);
  return WriteLock(std::move(lock), fd);
}

std::vector<CatalogEntry> Catalog::list_videos() const {
  std::vector<CatalogEntry> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(root_ / "videos", ec)) {
    if (!entry.is_directory() || !fs::exists(entry.path() / "manifest.json")) continue;
    try {
      auto m = manifest_from_json(read_file(entry.path() / "manifest.json"));
      out.push_back(CatalogEntry{m.id, m.title, m.course, m.duration_s});
    } catch (const std::exception&) {
    }
  }
  std::sort(out.begin(), out.end(), [](const CatalogEntry& a, const CatalogEntry& b) { return a.id < b.id; });
  return out;
}

bool Catalog::has_video(std::string_view video_id) const {
  try {
    return fs::exists(video_dir(video_id) / "manifest.json");
  } catch (const Error&) {
    return false;
  }
}

void Catalog::save_manifest(const VideoManifest& manifest) {
  write_file_atomic(video_dir(manifest.id) / "manifest.json", manifest_to_json(manifest));
}

VideoManifest Catalog::load_manifest(std::string_view video_id) const {
  auto text = read_file(video_dir(video_id) / "manifest.json");
  try {
    auto m = manifest_from_json(text);
    validate_manifest(m);
    return m;
  } catch (const Error& e) {
    throw Error(Errc::Corrupt, e.what());
  }
}

void Catalog::save_personas(const PersonaSet& personas) {
  write_file_atomic(video_dir(personas.video_id) / "personas.json", render_personas(personas));
}

PersonaSet Catalog::load_personas(std::string_view video_id, int expected_count) const {
  auto text = read_file(video_dir(video_id) / "personas.json");
  try {
    return parse_personas(text, std::string(video_id), expected_count);
  } catch (const Error& e) {
    throw Error(Errc::Corrupt, e.what());
  }
}

void Catalog::save_track(const DanmakuTrack& track) {
  check_track_invariants(track);
  write_file_atomic(video_dir(track.video_id) / "track.json", track_to_json(track));
}

DanmakuTrack Catalog::load_track(std::string_view video_id) const {
  auto text = read_file(video_dir(video_id) / "track.json");
  auto track = track_from_json(text);
  check_track_invariants(track);
  return track;
}

void Catalog::save_schedule(std::string_view video_id, const std::vector<LaneAssignment>& schedule) {
  write_file_atomic(video_dir(video_id) / "schedule.json", schedule_to_json(schedule));
}

std::vector<LaneAssignment> Catalog::load_schedule(std::string_view video_id) const {
  return schedule_from_json(read_file(video_dir(video_id) / "schedule.json"));
}

void Catalog::save_report(std::string_view video_id, std::string_view report_json) {
  write_file_atomic(video_dir(video_id) / "report.json", report_json);
}

std::string Catalog::load_report(std::string_view video_id) const {
  return read_file(video_dir(video_id) / "report.json");
}

void Catalog::save_job(std::string_view job_id, std::string_view job_json) {
  check_id(job_id, "job");
  write_file_atomic(root_ / "jobs" / (std::string(job_id) + ".json"), job_json);
}

std::string Catalog::load_job(std::string_view job_id) const {
  check_id(job_id, "job");
  return read_file(root_ / "jobs" / (std::string(job_id) + ".json"));
}

std::optional<std::string> Catalog::cache_get(std::string_view manifest_hash, std::string_view stage) const {
  check_id(manifest_hash, "cache");
  check_id(stage, "cache stage");
  auto path = root_ / "cache" / std::string(manifest_hash) / std::string(stage);
  if (!fs::exists(path)) return std::nullopt;
  return read_file(path);
}

void Catalog::cache_put(std::string_view manifest_hash, std::string_view stage, std::string_view value) {
  check_id(manifest_hash, "cache");
  check_id(stage, "cache stage");
  write_file_atomic(root_ / "cache" / std::string(manifest_hash) / std::string(stage), value);
}

Danmaku Catalog::append_user_danmaku(std::string_view video_id, Danmaku record) {
  auto lock = lock_video(video_id);
  DanmakuTrack track;
  if (fs::exists(video_dir(video_id) / "track.json")) {
    track = load_track(video_id);
  } else {
    track.video_id = std::string(video_id);
  }
  int next = 1;
  for (const auto& d : track.danmaku) {
    if (d.id.size() > 1 && d.id[0] == 'u') {
      try {
        next = std::max(next, std::stoi(d.id.substr(1)) + 1);
      } catch (const std::exception&) {
      }
    }
  }
  char id[32];
  std::snprintf(id, sizeof id, "u%04d", next);
  record.id = id;
  auto pos = std::upper_bound(track.danmaku.begin(), track.danmaku.end(), record.time_s,
                              [](double t, const Danmaku& d) { return t < d.time_s; });
  track.danmaku.insert(pos, record);
  save_track(track);
  return record;
}

std::string export_interop_xml(const DanmakuTrack& track) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<i>";
  std::size_t row = 0;
  char p[128];
  for (const auto& d : track.danmaku) {
    std::string source = d.persona ? std::string(1, *d.persona) : "user";
    std::snprintf(p, sizeof p, "%.2f,%d,25,%u,0,", d.time_s, mode_of(d.position), d.color.value);
    out += "<d p=\"" + std::string(p) + xml_escape(source) + "," + std::to_string(++row) + "\">" +
           xml_escape(d.text) + "</d>";
  }
  out += "</i>";
  return out;
}

XmlImportResult import_interop_xml(std::string_view xml, std::string video_id, double duration_s) {
  namespace pt = boost::property_tree;
  pt::ptree doc;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, doc);
  } catch (const pt::xml_parser_error& e) {
    throw Error(Errc::MalformedXml, e.what());
  }
  auto root = doc.get_child_optional("i");
  if (!root) throw Error(Errc::MalformedXml, "missing <i> root element");

  XmlImportResult result;
  result.track.video_id = std::move(video_id);
  std::size_t index = 0;
  for (const auto& [name, node] : *root) {
    if (name != "d") continue;
    ++index;
    auto where = "element " + std::to_string(index);
    auto p = node.get_optional<std::string>("<xmlattr>.p");
    if (!p) {
      result.warnings.push_back(where + ": no p attribute");
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(*p);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() < 4) {
      result.warnings.push_back(where + ": p attribute has too few fields");
      continue;
    }
    double t = 0;
    int mode = 0;
    long long color = 0;
    try {
      std::size_t used = 0;
      t = std::stod(fields[0], &used);
      if (used != fields[0].size()) throw std::invalid_argument("time");
      mode = std::stoi(fields[1]);
      color = std::stoll(fields[3]);
    } catch (const std::exception&) {
      result.warnings.push_back(where + ": unreadable p attribute");
      continue;
    }
    Position position;
    if (mode == 1 || mode == 2 || mode == 3 || mode == 6) {
      position = Position::Scroll;
    } else if (mode == 4) {
      position = Position::Bottom;
    } else if (mode == 5) {
      position = Position::Top;
    } else {
      result.warnings.push_back(where + ": unsupported mode " + std::to_string(mode));
      continue;
    }
    if (color < 0 || color > 0xFFFFFF) {
      result.warnings.push_back(where + ": color out of range");
      continue;
    }
    std::string text = node.data();
    if (text.empty()) {
      result.warnings.push_back(where + ": empty text");
      continue;
    }
    if (!(t >= 0) || t > duration_s) {
      result.warnings.push_back(where + ": time clamped into the video");
      t = std::clamp(t >= 0 ? t : 0.0, 0.0, std::max(duration_s, 0.0));
    }
    Danmaku d = make_danmaku("", std::nullopt, t, DanmakuType::UserPosted, std::move(text),
                             Rgb{static_cast<std::uint32_t>(color)});
    d.position = position;
    result.track.danmaku.push_back(std::move(d));
  }
  sort_track(result.track);
  char id[32];
  for (std::size_t i = 0; i < result.track.danmaku.size(); ++i) {
    std::snprintf(id, sizeof id, "u%04zu", i + 1);
    result.track.danmaku[i].id = id;
  }
  return result;
}

}  // namespace comet
