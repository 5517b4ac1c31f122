#include "comet/validator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "comet/error.hpp"
#include "comet/text_units.hpp"

namespace comet {

using ojson = nlohmann::ordered_json;

namespace {

constexpr double kEps = 1e-9;

struct Window {
  double start = 0;
  double end = 0;
  double fraction = 1;
  bool full = true;
};

std::vector<Window> minute_windows(double duration_s) {
  std::vector<Window> out;
  if (!(duration_s > 0)) return out;
  const auto n = static_cast<int>(std::ceil(duration_s / 60.0 - kEps));
  for (int m = 0; m < n; ++m) {
    double s = 60.0 * m;
    double e = std::min(60.0 * (m + 1), duration_s);
    out.push_back(Window{s, e, (e - s) / 60.0, e - s >= 60.0 - kEps});
  }
  return out;
}

int window_of(double t, double duration_s, std::size_t n) {
  if (n == 0 || t < 0 || t > duration_s + kEps) return -1;
  auto idx = static_cast<std::size_t>(std::floor(t / 60.0));
  return static_cast<int>(std::min(idx, n - 1));
}

bool counts_toward_rates(const Danmaku& d) { return d.type != DanmakuType::UserPosted; }

std::string fmt(const char* pattern, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

struct WindowCounts {
  std::vector<std::vector<std::size_t>> content;
  std::vector<std::vector<std::size_t>> emotion;
  std::vector<std::vector<std::size_t>> highlight;
};

WindowCounts count_windows(const std::vector<Danmaku>& records, double duration_s, std::size_t n) {
  WindowCounts wc;
  wc.content.resize(n);
  wc.emotion.resize(n);
  wc.highlight.resize(n);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& d = records[i];
    if (!counts_toward_rates(d)) continue;
    int w = window_of(d.time_s, duration_s, n);
    if (w < 0) continue;
    if (d.category == Category::Content) wc.content[static_cast<std::size_t>(w)].push_back(i);
    if (d.category == Category::Emotion) wc.emotion[static_cast<std::size_t>(w)].push_back(i);
    if (d.type == DanmakuType::Highlight) wc.highlight[static_cast<std::size_t>(w)].push_back(i);
  }
  return wc;
}

std::vector<std::string> ids_of(const std::vector<Danmaku>& records, const std::vector<std::size_t>& idx) {
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(records[i].id);
  return out;
}

double clamp_time(double t, double duration_s) { return std::clamp(t, 0.0, std::max(duration_s, 0.0)); }

// Largest gap between consecutive records (and the video edges) when the
// record at `skip` is ignored.
double gap_without(const std::vector<Danmaku>& records, const std::vector<bool>& removed, std::size_t skip,
                   double duration_s) {
  double prev = 0;
  double worst = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (removed[i] || i == skip) continue;
    double t = clamp_time(records[i].time_s, duration_s);
    worst = std::max(worst, t - prev);
    prev = t;
  }
  return std::max(worst, duration_s - prev);
}

}  // namespace

std::string_view rule_id(Rule rule) {
  switch (rule) {
    case Rule::R1_Length: return "R1_Length";
    case Rule::R2_MaxGap: return "R2_MaxGap";
    case Rule::R3_ContentRate: return "R3_ContentRate";
    case Rule::R4_EmotionRate: return "R4_EmotionRate";
    case Rule::R5_HighlightMin: return "R5_HighlightMin";
    case Rule::R6_QaDelay: return "R6_QaDelay";
    case Rule::R7_Coverage: return "R7_Coverage";
    case Rule::R8_ReplyIntegrity: return "R8_ReplyIntegrity";
    case Rule::R9_TimeBounds: return "R9_TimeBounds";
  }
  return "R1_Length";
}

std::string_view repair_action_id(RepairAction action) {
  switch (action) {
    case RepairAction::Dropped: return "Dropped";
    case RepairAction::Moved: return "Moved";
    case RepairAction::Truncated: return "Truncated";
    case RepairAction::Inserted: return "Inserted";
    case RepairAction::KeptWithWarning: return "KeptWithWarning";
  }
  return "KeptWithWarning";
}

std::size_t ValidationReport::count(Rule rule) const {
  return static_cast<std::size_t>(
      std::count_if(violations.begin(), violations.end(), [&](const Violation& v) { return v.rule == rule; }));
}

int scaled_min(int per_minute, double fraction) {
  return static_cast<int>(std::floor(per_minute * fraction + kEps));
}

int scaled_max(int per_minute, double fraction) {
  return static_cast<int>(std::ceil(per_minute * fraction - kEps));
}

ValidationReport validate(const DanmakuTrack& track, double duration_s, const GenerationConfig& config) {
  ValidationReport report;
  const auto& records = track.danmaku;
  const auto windows = minute_windows(duration_s);
  const auto wc = count_windows(records, duration_s, windows.size());
  auto add = [&](Rule rule, double s, double e, std::string detail, std::vector<std::string> ids) {
    report.violations.push_back(Violation{rule, s, e, std::move(detail), std::move(ids)});
  };

  // R1
  for (const auto& d : records) {
    if (!counts_toward_rates(d)) continue;
    auto units = count_units(d.text, config.length_unit);
    if (units >= static_cast<std::size_t>(config.max_len_units)) {
      add(Rule::R1_Length, d.time_s, d.time_s,
          fmt("length %.0f is not below %.0f", static_cast<double>(units), config.max_len_units), {d.id});
    }
  }

  // R2
  {
    double prev_t = 0;
    std::string prev_id;
    auto check = [&](double t, const std::string& id) {
      double gap = t - prev_t;
      report.max_gap_s = std::max(report.max_gap_s, gap);
      if (gap > config.max_gap_s + kEps) {
        std::vector<std::string> ids;
        if (!prev_id.empty()) ids.push_back(prev_id);
        if (!id.empty()) ids.push_back(id);
        add(Rule::R2_MaxGap, prev_t, t, fmt("gap of %.2f s exceeds %.2f s", gap, config.max_gap_s), std::move(ids));
      }
      prev_t = t;
      prev_id = id;
    };
    for (const auto& d : records) check(clamp_time(d.time_s, duration_s), d.id);
    if (duration_s > 0) check(duration_s, "");
  }

  // R3, R4, R5
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto& win = windows[w];
    report.per_minute_stats.push_back(MinuteStats{static_cast<int>(w), static_cast<int>(wc.content[w].size()),
                                                  static_cast<int>(wc.emotion[w].size()),
                                                  static_cast<int>(wc.highlight[w].size())});
    if (config.category_enabled(Category::Content)) {
      int lo = scaled_min(config.content_per_min.lo, win.fraction);
      int hi = scaled_max(config.content_per_min.hi, win.fraction);
      auto n = static_cast<int>(wc.content[w].size());
      if (n < lo || n > hi) {
        add(Rule::R3_ContentRate, win.start, win.end, fmt("%.0f content danmaku outside [%.0f, %.0f]", n, lo, hi),
            ids_of(records, wc.content[w]));
      }
    }
    if (config.category_enabled(Category::Emotion)) {
      int lo = scaled_min(config.emotion_per_min.lo, win.fraction);
      int hi = scaled_max(config.emotion_per_min.hi, win.fraction);
      auto n = static_cast<int>(wc.emotion[w].size());
      if (n < lo || n > hi) {
        add(Rule::R4_EmotionRate, win.start, win.end, fmt("%.0f emotion danmaku outside [%.0f, %.0f]", n, lo, hi),
            ids_of(records, wc.emotion[w]));
      }
    }
    if (config.enabled(DanmakuType::Highlight)) {
      int lo = scaled_min(config.highlights_per_min_min, win.fraction);
      auto n = static_cast<int>(wc.highlight[w].size());
      if (n < lo) {
        add(Rule::R5_HighlightMin, win.start, win.end, fmt("%.0f highlights below minimum %.0f", n, lo),
            ids_of(records, wc.highlight[w]));
      }
    }
  }

  // R6, R8
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < records.size(); ++i) index.emplace(records[i].id, i);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& d = records[i];
    if (!d.reply_to) continue;
    auto it = index.find(*d.reply_to);
    if (it == index.end() || it->second >= i || records[it->second].time_s > d.time_s) {
      add(Rule::R8_ReplyIntegrity, d.time_s, d.time_s, "reply target missing or not earlier", {d.id});
      continue;
    }
    const auto& target = records[it->second];
    if (d.type == DanmakuType::QA && d.time_s - target.time_s > config.qa_answer_delay_s + kEps) {
      add(Rule::R6_QaDelay, target.time_s, d.time_s,
          fmt("answer %.2f s after question, limit %.2f s", d.time_s - target.time_s, config.qa_answer_delay_s),
          {target.id, d.id});
    }
  }

  // R7
  for (std::size_t w = 0; w < windows.size(); ++w) {
    if (!windows[w].full) continue;
    if (config.category_enabled(Category::Content) && wc.content[w].empty()) {
      add(Rule::R7_Coverage, windows[w].start, windows[w].end, "no content danmaku in this minute", {});
    }
    if (config.category_enabled(Category::Emotion) && wc.emotion[w].empty()) {
      add(Rule::R7_Coverage, windows[w].start, windows[w].end, "no emotion danmaku in this minute", {});
    }
  }

  // R9
  for (const auto& d : records) {
    if (d.time_s < 0 || d.time_s > duration_s + kEps) {
      add(Rule::R9_TimeBounds, d.time_s, d.time_s, fmt("time %.2f outside [0, %.2f]", d.time_s, duration_s), {d.id});
    }
  }

  std::stable_sort(report.violations.begin(), report.violations.end(), [](const Violation& a, const Violation& b) {
    if (a.rule != b.rule) return a.rule < b.rule;
    return a.window_start < b.window_start;
  });
  return report;
}

RepairResult repair(const DanmakuTrack& input, const ValidationReport& /*report*/, const GenerationConfig& config,
                    double duration_s, std::span<const Danmaku> pool) {
  DanmakuTrack track = input;
  std::vector<RepairEntry> log;

  // R1
  for (auto& d : track.danmaku) {
    if (!counts_toward_rates(d)) continue;
    if (count_units(d.text, config.length_unit) >= static_cast<std::size_t>(config.max_len_units)) {
      d.text = truncate_units(d.text, static_cast<std::size_t>(config.max_len_units), config.length_unit);
      log.push_back({RepairAction::Truncated, d.id, Rule::R1_Length});
    }
  }

  // R9
  for (auto& d : track.danmaku) {
    double t = clamp_time(d.time_s, duration_s);
    if (t != d.time_s) {
      d.time_s = t;
      log.push_back({RepairAction::Moved, d.id, Rule::R9_TimeBounds});
    }
  }
  sort_track(track);

  // Rate maxima.
  {
    auto& records = track.danmaku;
    const auto windows = minute_windows(duration_s);
    const auto wc = count_windows(records, duration_s, windows.size());
    std::vector<bool> removed(records.size(), false);

    auto drop_excess = [&](const std::vector<std::size_t>& members, int hi, Rule rule, std::size_t w) {
      int count = static_cast<int>(members.size());
      if (count <= hi) return;
      std::vector<std::size_t> order = members;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        int pa = type_priority(records[a].type);
        int pb = type_priority(records[b].type);
        if (pa != pb) return pa < pb;
        return records[a].time_s > records[b].time_s;
      });
      int highlights = 0;
      for (auto i : wc.highlight[w]) highlights += removed[i] ? 0 : 1;
      const int highlight_min =
          config.enabled(DanmakuType::Highlight) ? scaled_min(config.highlights_per_min_min, windows[w].fraction) : 0;
      for (auto i : order) {
        if (count <= hi) break;
        if (removed[i]) continue;
        bool is_highlight = records[i].type == DanmakuType::Highlight;
        if (is_highlight && highlights <= highlight_min) continue;
        if (gap_without(records, removed, i, duration_s) > config.max_gap_s + kEps) continue;
        removed[i] = true;
        --count;
        if (is_highlight) --highlights;
        log.push_back({RepairAction::Dropped, records[i].id, rule});
      }
    };

    for (std::size_t w = 0; w < windows.size(); ++w) {
      if (config.category_enabled(Category::Content)) {
        drop_excess(wc.content[w], scaled_max(config.content_per_min.hi, windows[w].fraction), Rule::R3_ContentRate, w);
      }
      if (config.category_enabled(Category::Emotion)) {
        drop_excess(wc.emotion[w], scaled_max(config.emotion_per_min.hi, windows[w].fraction), Rule::R4_EmotionRate, w);
      }
    }

    std::unordered_set<std::string> dropped_ids;
    std::vector<Danmaku> kept;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (removed[i]) {
        dropped_ids.insert(records[i].id);
      } else {
        kept.push_back(std::move(records[i]));
      }
    }
    for (auto& d : kept) {
      if (d.reply_to && dropped_ids.count(*d.reply_to)) d.reply_to.reset();
    }
    records = std::move(kept);
  }

  // Deficits and gaps, only when a pool of candidates is supplied.
  if (!pool.empty()) {
    std::set<std::string> used_ids;
    for (const auto& d : track.danmaku) used_ids.insert(d.id);
    std::vector<Danmaku> candidates;
    for (const auto& p : pool) {
      if (p.time_s < 0 || p.time_s > duration_s || p.type == DanmakuType::UserPosted) continue;
      Danmaku c = p;
      c.reply_to.reset();
      c.text = truncate_units(c.text, static_cast<std::size_t>(config.max_len_units), config.length_unit);
      if (!config.enabled(c.type)) continue;
      std::string id = c.id.empty() ? "pool" : c.id;
      for (int k = 2; used_ids.count(id); ++k) id = (c.id.empty() ? "pool" : c.id) + "-" + std::to_string(k);
      c.id = id;
      used_ids.insert(id);
      candidates.push_back(std::move(c));
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Danmaku& a, const Danmaku& b) { return a.time_s < b.time_s; });
    std::vector<bool> taken(candidates.size(), false);

    auto insert = [&](std::size_t ci, Rule rule) {
      taken[ci] = true;
      const Danmaku& c = candidates[ci];
      auto pos = std::upper_bound(track.danmaku.begin(), track.danmaku.end(), c.time_s,
                                  [](double t, const Danmaku& d) { return t < d.time_s; });
      track.danmaku.insert(pos, c);
      log.push_back({RepairAction::Inserted, c.id, rule});
    };

    const auto windows = minute_windows(duration_s);
    for (std::size_t w = 0; w < windows.size(); ++w) {
      const auto& win = windows[w];
      struct Need {
        Rule rule;
        int lo;
        int hi;
        bool enabled;
        std::function<bool(const Danmaku&)> member;
      };
      const Need needs[] = {
          {Rule::R5_HighlightMin, scaled_min(config.highlights_per_min_min, win.fraction),
           scaled_max(config.content_per_min.hi, win.fraction), config.enabled(DanmakuType::Highlight),
           [](const Danmaku& d) { return d.type == DanmakuType::Highlight; }},
          {Rule::R3_ContentRate, std::max(scaled_min(config.content_per_min.lo, win.fraction), win.full ? 1 : 0),
           scaled_max(config.content_per_min.hi, win.fraction), config.category_enabled(Category::Content),
           [](const Danmaku& d) { return d.category == Category::Content; }},
          {Rule::R4_EmotionRate, std::max(scaled_min(config.emotion_per_min.lo, win.fraction), win.full ? 1 : 0),
           scaled_max(config.emotion_per_min.hi, win.fraction), config.category_enabled(Category::Emotion),
           [](const Danmaku& d) { return d.category == Category::Emotion; }},
      };
      for (const auto& need : needs) {
        if (!need.enabled) continue;
        auto in_window = [&](const Danmaku& d) {
          return counts_toward_rates(d) && window_of(d.time_s, duration_s, windows.size()) == static_cast<int>(w);
        };
        auto current = [&](const std::function<bool(const Danmaku&)>& pred) {
          return static_cast<int>(std::count_if(track.danmaku.begin(), track.danmaku.end(),
                                                [&](const Danmaku& d) { return in_window(d) && pred(d); }));
        };
        for (std::size_t ci = 0; ci < candidates.size() && current(need.member) < need.lo; ++ci) {
          const Danmaku& c = candidates[ci];
          if (taken[ci] || !in_window(c) || !need.member(c)) continue;
          auto same_category = [&](const Danmaku& d) { return d.category == c.category; };
          int cap = c.category == Category::Content ? scaled_max(config.content_per_min.hi, win.fraction)
                                                    : scaled_max(config.emotion_per_min.hi, win.fraction);
          if (current(same_category) >= cap) continue;
          insert(ci, need.rule);
        }
      }
    }

    // Gaps: repeatedly fill the widest remaining gap with the candidate
    // nearest its midpoint.
    while (true) {
      double prev = 0;
      double best_gap = 0;
      double gap_start = 0;
      for (const auto& d : track.danmaku) {
        if (d.time_s - prev > best_gap) {
          best_gap = d.time_s - prev;
          gap_start = prev;
        }
        prev = d.time_s;
      }
      if (duration_s - prev > best_gap) {
        best_gap = duration_s - prev;
        gap_start = prev;
      }
      if (best_gap <= config.max_gap_s + kEps) break;
      const double mid = gap_start + best_gap / 2;
      std::optional<std::size_t> pick;
      const auto windows_n = windows.size();
      for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
        const auto& c = candidates[ci];
        if (taken[ci] || c.time_s <= gap_start || c.time_s >= gap_start + best_gap) continue;
        int w = window_of(c.time_s, duration_s, windows_n);
        if (w < 0) continue;
        int in_cat = static_cast<int>(std::count_if(track.danmaku.begin(), track.danmaku.end(), [&](const Danmaku& d) {
          return counts_toward_rates(d) && d.category == c.category &&
                 window_of(d.time_s, duration_s, windows_n) == w;
        }));
        const auto& win = windows[static_cast<std::size_t>(w)];
        int cap = c.category == Category::Content ? scaled_max(config.content_per_min.hi, win.fraction)
                                                  : scaled_max(config.emotion_per_min.hi, win.fraction);
        if (in_cat >= cap) continue;
        if (!pick || std::abs(c.time_s - mid) < std::abs(candidates[*pick].time_s - mid)) pick = ci;
      }
      if (!pick) break;
      insert(*pick, Rule::R2_MaxGap);
    }
  }

  RepairResult result;
  result.report = validate(track, duration_s, config);
  for (const auto& v : result.report.violations) {
    log.push_back({RepairAction::KeptWithWarning, v.ids.empty() ? std::string() : v.ids.front(), v.rule});
  }
  result.report.repaired = std::move(log);
  result.track = std::move(track);
  return result;
}

TrackStats track_stats(const DanmakuTrack& track, double duration_s, LengthUnit unit) {
  TrackStats s;
  s.total = static_cast<int>(track.danmaku.size());
  int content = 0;
  int emotion = 0;
  int user = 0;
  double units = 0;
  for (const auto& d : track.danmaku) {
    ++s.per_type[static_cast<std::size_t>(d.type)];
    switch (d.category) {
      case Category::Content: ++content; break;
      case Category::Emotion: ++emotion; break;
      case Category::User: ++user; break;
    }
    units += static_cast<double>(count_units(d.text, unit));
  }
  if (s.total > 0) {
    s.content_fraction = static_cast<double>(content) / s.total;
    s.emotion_fraction = static_cast<double>(emotion) / s.total;
    s.user_fraction = static_cast<double>(user) / s.total;
    s.mean_len_units = units / s.total;
  }
  if (duration_s > 0) s.rate_per_min = s.total / (duration_s / 60.0);
  return s;
}

std::string report_to_json(const ValidationReport& report) {
  ojson doc;
  doc["violations"] = ojson::array();
  for (const auto& v : report.violations) {
    ojson o;
    o["rule"] = rule_id(v.rule);
    o["window"] = {v.window_start, v.window_end};
    o["detail"] = v.detail;
    o["ids"] = v.ids;
    doc["violations"].push_back(std::move(o));
  }
  doc["per_minute_stats"] = ojson::array();
  for (const auto& m : report.per_minute_stats) {
    doc["per_minute_stats"].push_back(
        {{"minute", m.minute}, {"content", m.content}, {"emotion", m.emotion}, {"highlight", m.highlight}});
  }
  doc["max_gap_s"] = report.max_gap_s;
  doc["repaired"] = ojson::array();
  for (const auto& r : report.repaired) {
    ojson o;
    o["action"] = repair_action_id(r.action);
    o["id"] = r.id;
    o["rule"] = r.rule ? ojson(rule_id(*r.rule)) : ojson(nullptr);
    doc["repaired"].push_back(std::move(o));
  }
  return doc.dump(2) + "\n";
}

std::optional<Rule> rule_from_id(std::string_view id) {
  for (int r = 0; r <= static_cast<int>(Rule::R9_TimeBounds); ++r) {
    if (rule_id(static_cast<Rule>(r)) == id) return static_cast<Rule>(r);
  }
  return std::nullopt;
}

std::optional<RepairAction> repair_action_from_id(std::string_view id) {
  for (int a = 0; a <= static_cast<int>(RepairAction::KeptWithWarning); ++a) {
    if (repair_action_id(static_cast<RepairAction>(a)) == id) return static_cast<RepairAction>(a);
  }
  return std::nullopt;
}

ValidationReport report_from_json(std::string_view json_text) {
  ValidationReport report;
  try {
    auto doc = nlohmann::json::parse(json_text);
    for (const auto& o : doc.at("violations")) {
      auto rule = rule_from_id(o.at("rule").get<std::string>());
      if (!rule) throw Error(Errc::Corrupt, "unknown rule " + o.at("rule").get<std::string>());
      report.violations.push_back(Violation{*rule, o.at("window").at(0).get<double>(),
                                            o.at("window").at(1).get<double>(), o.at("detail").get<std::string>(),
                                            o.at("ids").get<std::vector<std::string>>()});
    }
    for (const auto& o : doc.at("per_minute_stats")) {
      report.per_minute_stats.push_back(MinuteStats{o.at("minute").get<int>(), o.at("content").get<int>(),
                                                    o.at("emotion").get<int>(), o.at("highlight").get<int>()});
    }
    report.max_gap_s = doc.at("max_gap_s").get<double>();
    for (const auto& o : doc.at("repaired")) {
      auto action = repair_action_from_id(o.at("action").get<std::string>());
      if (!action) throw Error(Errc::Corrupt, "unknown repair action");
      RepairEntry e{*action, o.at("id").get<std::string>(), std::nullopt};
      if (!o.at("rule").is_null()) {
        e.rule = rule_from_id(o.at("rule").get<std::string>());
        if (!e.rule) throw Error(Errc::Corrupt, "unknown rule in repair entry");
      }
      report.repaired.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Corrupt, e.what());
  }
  return report;
}

std::string stats_to_json(const TrackStats& s) {
  ojson doc;
  doc["total"] = s.total;
  ojson per = ojson::object();
  for (auto t : kGeneratedTypes) per[std::string(type_id(t))] = s.count(t);
  per[std::string(type_id(DanmakuType::UserPosted))] = s.count(DanmakuType::UserPosted);
  doc["per_type"] = std::move(per);
  doc["content_fraction"] = s.content_fraction;
  doc["emotion_fraction"] = s.emotion_fraction;
  doc["user_fraction"] = s.user_fraction;
  doc["mean_len_units"] = s.mean_len_units;
  doc["rate_per_min"] = s.rate_per_min;
  doc["human_reference_rate_per_min"] = kHumanReferenceRatePerMin;
  return doc.dump(2) + "\n";
}

}  // namespace comet
