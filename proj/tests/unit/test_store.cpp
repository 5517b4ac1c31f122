#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <set>
#include <thread>

#include "../common/support.hpp"
#include "comet/error.hpp"
#include "comet/store.hpp"

using namespace comet;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("comet-store-" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

DanmakuTrack one_highlight() {
  DanmakuTrack t;
  t.video_id = "v";
  t.danmaku.push_back(make_danmaku("d0001", 'B', 8, DanmakuType::Highlight, "Latin consonants", Rgb::red()));
  return t;
}

}  // namespace

TEST(Store, Sha256) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Store, SaveAndLoadEverything) {
  TempDir dir;
  Catalog cat(dir.path());
  auto m = manifest_from_json(support::fixture("manifest_300s.json"));
  cat.save_manifest(m);
  EXPECT_TRUE(cat.has_video(m.id));
  EXPECT_EQ(cat.load_manifest(m.id), m);
  auto listed = cat.list_videos();
  ASSERT_EQ(listed.size(), 1u);
  EXPECT_EQ(listed[0].title, m.title);
  EXPECT_EQ(listed[0].duration_s, 300);

  auto personas = parse_personas(support::fixture("personas6.json"), m.id, 6);
  cat.save_personas(personas);
  EXPECT_EQ(cat.load_personas(m.id), personas);

  auto t = one_highlight();
  t.video_id = m.id;
  cat.save_track(t);
  EXPECT_EQ(cat.load_track(m.id), t);

  std::vector<LaneAssignment> plan = {{"d0001", LaneKind::Top, 0, 8, 12, 240, 0, false}};
  cat.save_schedule(m.id, plan);
  EXPECT_EQ(cat.load_schedule(m.id), plan);

  cat.save_report(m.id, "{\"violations\": []}");
  EXPECT_EQ(cat.load_report(m.id), "{\"violations\": []}");
  cat.save_job("job-1", "{}");
  EXPECT_EQ(cat.load_job("job-1"), "{}");

  EXPECT_FALSE(cat.cache_get("abc", "clip-1"));
  cat.cache_put("abc", "clip-1", "described");
  EXPECT_EQ(cat.cache_get("abc", "clip-1"), "described");
}

TEST(Store, MissingAndCorrupt) {
  TempDir dir;
  Catalog cat(dir.path());
  try {
    cat.load_track("nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotFound);
  }
  fs::create_directories(dir.path() / "videos" / "bad");
  write_file_atomic(dir.path() / "videos" / "bad" / "track.json", "{\"video_id\": ");
  try {
    cat.load_track("bad");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Corrupt);
  }
  auto unsorted = one_highlight();
  unsorted.danmaku.push_back(make_danmaku("d0002", 'A', 1, DanmakuType::QA, "q"));
  EXPECT_THROW(cat.save_track(unsorted), Error);
}

TEST(Store, AtomicWriteLeavesNoTemporaries) {
  TempDir dir;
  auto target = dir.path() / "a" / "file.txt";
  write_file_atomic(target, "one");
  write_file_atomic(target, "two");
  EXPECT_EQ(read_file(target), "two");
  int entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(target.parent_path())) ++entries;
  EXPECT_EQ(entries, 1);
}

TEST(Store, ConcurrentUserPostsAreAllKept) {
  TempDir dir;
  Catalog cat(dir.path());
  cat.save_track(one_highlight());
  std::vector<std::thread> threads;
  for (int w = 0; w < 8; ++w) {
    threads.emplace_back([&, w] {
      for (int i = 0; i < 10; ++i) {
        cat.append_user_danmaku("v", make_danmaku("", std::nullopt, w * 10 + i, DanmakuType::UserPosted, "hi"));
      }
    });
  }
  for (auto& t : threads) t.join();
  auto track = cat.load_track("v");
  EXPECT_EQ(track.danmaku.size(), 81u);
  std::set<std::string> ids;
  for (const auto& d : track.danmaku) ids.insert(d.id);
  EXPECT_EQ(ids.size(), 81u);
  EXPECT_TRUE(ids.count("u0080"));
  EXPECT_NO_THROW(check_track_invariants(track));
}

TEST(InteropXml, GoldenExport) {
  EXPECT_EQ(export_interop_xml(one_highlight()),
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<i><d p=\"8.00,5,25,16711680,0,B,1\">Latin consonants</d></i>");
  DanmakuTrack empty;
  EXPECT_EQ(export_interop_xml(empty), "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<i></i>");
  EXPECT_TRUE(import_interop_xml(export_interop_xml(empty), "v", 10).track.danmaku.empty());
}

TEST(InteropXml, ImportMapping) {
  const std::string xml =
      "<?xml version=\"1.0\"?><i>"
      "<d p=\"12.5,4,25,255,0,x,1\">bottom &amp; blue</d>"
      "<d p=\"3,1,25,16777215,0,x,2\">scroll</d>"
      "<d p=\"4,7,25,0,0,x,3\">advanced mode</d>"
      "<d p=\"5,1,25,99999999,0,x,4\">bad color</d>"
      "<d p=\"6,1,25,0,0,x,5\"></d>"
      "<d p=\"900,5,25,0,0,x,6\">late</d>"
      "</i>";
  auto r = import_interop_xml(xml, "v", 100);
  ASSERT_EQ(r.track.danmaku.size(), 3u);
  EXPECT_EQ(r.warnings.size(), 4u);
  EXPECT_EQ(r.track.danmaku[0].text, "scroll");
  EXPECT_EQ(r.track.danmaku[0].id, "u0001");
  EXPECT_EQ(r.track.danmaku[1].position, Position::Bottom);
  EXPECT_EQ(r.track.danmaku[1].color, Rgb::blue());
  EXPECT_EQ(r.track.danmaku[1].text, "bottom & blue");
  EXPECT_EQ(r.track.danmaku[1].time_s, 12.5);
  EXPECT_EQ(r.track.danmaku[2].time_s, 100);
  EXPECT_EQ(r.track.danmaku[2].position, Position::Top);
  for (const auto& d : r.track.danmaku) {
    EXPECT_EQ(d.type, DanmakuType::UserPosted);
    EXPECT_FALSE(d.persona);
  }
}

TEST(InteropXml, TruncatedDocument) {
  auto full = export_interop_xml(one_highlight());
  try {
    import_interop_xml(full.substr(0, full.size() - 10), "v", 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MalformedXml);
  }
}

TEST(InteropXml, RandomRoundTrips) {
  support::Rng rng(21);
  for (int i = 0; i < 1000; ++i) {
    auto t = support::random_xml_track(rng, 7200);
    auto back = import_interop_xml(export_interop_xml(t), t.video_id, 7200);
    ASSERT_EQ(back.track, t) << export_interop_xml(t);
    ASSERT_TRUE(back.warnings.empty());
  }
}
