#include <csignal>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "comet/error.hpp"
#include "comet/llm_client.hpp"
#include "comet/pipeline.hpp"
#include "comet/service.hpp"
#include "comet/store.hpp"
#include "comet/track_parser.hpp"
#include "comet/validator.hpp"

namespace {

using namespace comet;

constexpr int kExitClean = 0;
constexpr int kExitFailure = 1;
constexpr int kExitViolations = 2;

volatile std::sig_atomic_t g_stop = 0;

double track_end(const DanmakuTrack& track) {
  double end = 0;
  for (const auto& d : track.danmaku) end = std::max(end, d.time_s);
  return end;
}

DanmakuTrack read_any_track(const std::string& path, const std::string& personas_path, double duration_s,
                            const std::string& video_id) {
  const std::string text = read_file(path);
  std::size_t i = text.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
  char first = i == std::string::npos ? '\0' : text[i];
  if (first == '{') return track_from_json(text);
  if (first == '<') {
    auto r = import_interop_xml(text, video_id, duration_s);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    return r.track;
  }
  PersonaSet personas = mock_personas(26);
  if (!personas_path.empty()) {
    auto raw = read_file(personas_path);
    personas = parse_personas(raw, video_id, static_cast<int>(nlohmann::json::parse(raw).size()));
  }
  auto r = parse_track(text, personas, duration_s);
  for (const auto& w : r.warnings) {
    std::cerr << "warning: line " << w.line_no << " " << warning_kind_id(w.kind) << ": " << w.raw << "\n";
  }
  r.track.video_id = video_id;
  return r.track;
}

int run_generate(const std::string& manifest_path, const std::string& config_path, const std::string& backend,
                 std::uint64_t seed, const std::string& out_dir) {
  auto manifest = manifest_from_json(read_file(manifest_path));
  GenerationConfig config = config_path.empty() ? GenerationConfig{} : config_from_json(read_file(config_path));

  BackendKind kind = backend.empty() ? backend_kind_from_env() : (backend == "http" ? BackendKind::Http
                                                                                   : BackendKind::Mock);
  std::shared_ptr<LmmBackend> impl;
  if (kind == BackendKind::Mock) {
    impl = std::make_shared<MockBackend>(manifest, config, seed);
  } else {
    impl = std::make_shared<HttpBackend>(http_options_from_env());
  }
  LmmClient client(impl);
  Catalog catalog(out_dir);
  PipelineOptions options;
  options.catalog = &catalog;
  options.job_id = "cli-" + manifest.id;
  options.on_update = [](const GenerationJob& job) {
    std::cerr << "[" << job_state_id(job.state) << "] attempts=" << job.attempts << "\n";
  };
  auto result = run_job(manifest, config, client, options);
  std::cout << "track: " << (catalog.video_dir(manifest.id) / "track.json").string() << "\n";
  std::cout << "records: " << result.track.danmaku.size() << ", violations: " << result.report.violations.size()
            << "\n";
  return result.report.clean() ? kExitClean : kExitViolations;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Danmaku generation for lecture videos"};
  app.require_subcommand(1);

  std::string manifest_path, config_path, backend, out_dir = "comet-data";
  std::uint64_t seed = 0;
  auto* gen = app.add_subcommand("generate", "Run the full generation pipeline for one manifest");
  gen->add_option("--manifest", manifest_path, "Video manifest JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--config", config_path, "Generation config JSON")->check(CLI::ExistingFile);
  gen->add_option("--backend", backend, "LMM backend")->check(CLI::IsMember({"mock", "http"}));
  gen->add_option("--seed", seed, "Seed for the mock backend");
  gen->add_option("--out-dir", out_dir, "Catalog root");

  std::string track_path, personas_path, to, out_path;
  double duration = -1;
  auto* val = app.add_subcommand("validate", "Check a track against the generation rules");
  val->add_option("--track", track_path, "Track file (JSON, Markdown or XML)")->required()->check(CLI::ExistingFile);
  val->add_option("--duration", duration, "Video duration in seconds")->required();
  val->add_option("--config", config_path, "Generation config JSON")->check(CLI::ExistingFile);
  val->add_option("--personas", personas_path, "Personas JSON for Markdown input")->check(CLI::ExistingFile);

  auto* conv = app.add_subcommand("convert", "Convert a track between JSON, XML and Markdown");
  conv->add_option("--in", track_path, "Input track")->required()->check(CLI::ExistingFile);
  conv->add_option("--to", to, "Output format")->required()->check(CLI::IsMember({"json", "xml", "markdown"}));
  conv->add_option("--duration", duration, "Video duration for Markdown and XML input");
  conv->add_option("--personas", personas_path, "Personas JSON for Markdown input")->check(CLI::ExistingFile);
  conv->add_option("--out", out_path, "Output file (default stdout)");

  auto* stats = app.add_subcommand("stats", "Summarize a track");
  stats->add_option("--track", track_path, "Track file")->required()->check(CLI::ExistingFile);
  stats->add_option("--duration", duration, "Video duration in seconds");
  stats->add_option("--personas", personas_path, "Personas JSON for Markdown input")->check(CLI::ExistingFile);

  std::string root = "comet-data";
  auto* add = app.add_subcommand("add", "Register a manifest in a catalog");
  add->add_option("--manifest", manifest_path, "Video manifest JSON")->required()->check(CLI::ExistingFile);
  add->add_option("--root", root, "Catalog root");

  auto* serve = app.add_subcommand("serve", "Serve the catalog over HTTP (address from COMET_BIND_ADDR)");
  serve->add_option("--root", root, "Catalog root");

  CLI11_PARSE(app, argc, argv);

  try {
    const double in_duration = duration >= 0 ? duration : 86400.0;
    if (*gen) return run_generate(manifest_path, config_path, backend, seed, out_dir);

    if (*val) {
      auto track = read_any_track(track_path, personas_path, duration, "cli");
      GenerationConfig config = config_path.empty() ? track.config : config_from_json(read_file(config_path));
      auto report = validate(track, duration, config);
      std::cout << report_to_json(report);
      return report.clean() ? kExitClean : kExitViolations;
    }

    if (*conv) {
      auto track = read_any_track(track_path, personas_path, in_duration, "cli");
      std::string out = to == "json" ? track_to_json(track) : to == "xml" ? export_interop_xml(track) + "\n"
                                                                          : render_track(track);
      if (out_path.empty()) {
        std::cout << out;
      } else {
        write_file_atomic(out_path, out);
      }
      return kExitClean;
    }

    if (*stats) {
      auto track = read_any_track(track_path, personas_path, in_duration, "cli");
      double d = duration >= 0 ? duration : std::ceil(track_end(track));
      std::cout << stats_to_json(track_stats(track, d, track.config.length_unit));
      return kExitClean;
    }

    if (*add) {
      auto manifest = manifest_from_json(read_file(manifest_path));
      validate_manifest(manifest);
      Catalog(root).save_manifest(manifest);
      std::cout << manifest.id << "\n";
      return kExitClean;
    }

    if (*serve) {
      Catalog catalog(root);
      Service service(catalog);
      auto [host, port] = bind_addr_from_env();
      int bound = service.start(host, port);
      std::cerr << "listening on " << host << ":" << bound << "\n";
      std::signal(SIGINT, [](int) { g_stop = 1; });
      std::signal(SIGTERM, [](int) { g_stop = 1; });
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
      service.stop();
      return kExitClean;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
