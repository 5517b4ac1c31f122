#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "comet/danmaku.hpp"
#include "comet/persona.hpp"
#include "comet/scheduler.hpp"
#include "comet/video_model.hpp"

namespace comet {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

/// Writes through a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
/// Throws Error(NotFound) when the file is missing.
std::string read_file(const std::filesystem::path& path);

struct CatalogEntry {
  std::string id;
  std::string title;
  std::string course;
  double duration_s = 0;
};

/// File-per-video store:
///
///   <root>/videos/<id>/manifest.json, personas.json, track.json,
///                      schedule.json, report.json
///   <root>/jobs/<job-id>.json
///   <root>/cache/<manifest-sha256>/<stage>
class Catalog {
 public:
  explicit Catalog(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path video_dir(std::string_view video_id) const;

  /// Exclusive writer lock for one video: a mutex inside this process and an
  /// advisory flock across processes.
  class WriteLock {
   public:
    WriteLock(WriteLock&&) noexcept;
    WriteLock& operator=(WriteLock&&) = delete;
    ~WriteLock();

   private:
    friend class Catalog;
    WriteLock(std::unique_lock<std::mutex> lock, int fd);
    std::unique_lock<std::mutex> lock_;
    int fd_ = -1;
  };
  WriteLock lock_video(std::string_view video_id);

  std::vector<CatalogEntry> list_videos() const;
  bool has_video(std::string_view video_id) const;

  void save_manifest(const VideoManifest& manifest);
  VideoManifest load_manifest(std::string_view video_id) const;

  void save_personas(const PersonaSet& personas);
  PersonaSet load_personas(std::string_view video_id, int expected_count = kDefaultPersonaCount) const;

  /// Checks the track invariants before writing. Callers that race on one
  /// video must hold its WriteLock.
  void save_track(const DanmakuTrack& track);
  /// Throws NotFound or Corrupt.
  DanmakuTrack load_track(std::string_view video_id) const;

  void save_schedule(std::string_view video_id, const std::vector<LaneAssignment>& schedule);
  std::vector<LaneAssignment> load_schedule(std::string_view video_id) const;

  void save_report(std::string_view video_id, std::string_view report_json);
  std::string load_report(std::string_view video_id) const;

  void save_job(std::string_view job_id, std::string_view job_json);
  std::string load_job(std::string_view job_id) const;

  std::optional<std::string> cache_get(std::string_view manifest_hash, std::string_view stage) const;
  void cache_put(std::string_view manifest_hash, std::string_view stage, std::string_view value);

  /// Appends a user post under the video's writer lock and returns it with
  /// its assigned id. The track stays sorted; a missing track starts empty.
  Danmaku append_user_danmaku(std::string_view video_id, Danmaku record);

 private:
  std::mutex& video_mutex(std::string_view video_id);

  std::filesystem::path root_;
  std::mutex map_mutex_;
  std::unordered_map<std::string, std::unique_ptr<std::mutex>> video_mutexes_;
};

/// `<i>` document with one `<d p="time,mode,size,color,pool,source,rowid">`
/// element per record.
std::string export_interop_xml(const DanmakuTrack& track);

struct XmlImportResult {
  DanmakuTrack track;
  std::vector<std::string> warnings;
};

/// Inverse of the export mapping. Records become user posts without a
/// persona; times beyond the video are clamped with a warning. Throws
/// Error(MalformedXml).
XmlImportResult import_interop_xml(std::string_view xml, std::string video_id, double duration_s);

}  // namespace comet
