#include "comet/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <json.hpp>

#include "comet/error.hpp"
#include "comet/text_units.hpp"

namespace comet {

namespace {

constexpr double kEps = 1e-9;
constexpr double kPinnedEdgeS = 30.0;

LaneKind kind_for(const Danmaku& d, double end_s) {
  if (d.position == Position::Bottom) return LaneKind::Bottom;
  if (d.position == Position::Top || d.type == DanmakuType::Highlight) return LaneKind::Top;
  if (d.type == DanmakuType::Summary && (d.time_s <= kPinnedEdgeS || d.time_s >= end_s - kPinnedEdgeS)) {
    return LaneKind::Top;
  }
  return LaneKind::Scroll;
}

}  // namespace

int ScreenConfig::text_width(std::string_view text) const {
  if (measure) return measure(text);
  const std::string plain = strip_tags(text);
  double w = 0;
  for (auto g : graphemes(plain)) {
    bool ascii = g.size() == 1 && static_cast<unsigned char>(g[0]) < 0x80;
    w += (ascii ? 0.6 : 1.0) * font_size;
  }
  return static_cast<int>(std::lround(w));
}

std::string_view lane_kind_id(LaneKind kind) {
  switch (kind) {
    case LaneKind::Scroll: return "scroll";
    case LaneKind::Top: return "top";
    case LaneKind::Bottom: return "bottom";
  }
  return "scroll";
}

bool collides(const LaneAssignment& first, const LaneAssignment& second, const ScreenConfig& screen) {
  const LaneAssignment& a = first.enter_s <= second.enter_s ? first : second;
  const LaneAssignment& b = first.enter_s <= second.enter_s ? second : first;
  const double W = screen.width_px;
  const double D = screen.scroll_duration_s;
  const double va = (W + a.width_px) / D;
  const double vb = (W + b.width_px) / D;
  const bool tail_clear = va * (b.enter_s - a.enter_s) >= a.width_px - kEps;
  const bool no_overtake = vb * (a.enter_s + D - b.enter_s) <= W + kEps;
  return !(tail_clear && no_overtake);
}

std::vector<LaneAssignment> layout(const DanmakuTrack& track, const ScreenConfig& screen, double duration_s) {
  double end_s = duration_s;
  if (end_s < 0) {
    end_s = 0;
    for (const auto& d : track.danmaku) end_s = std::max(end_s, d.time_s);
  }
  const int steps = static_cast<int>(std::lround(kLayoutMaxDelayS / kLayoutDelayStepS));

  std::vector<std::optional<LaneAssignment>> scroll_last(static_cast<std::size_t>(std::max(screen.lane_count, 0)));
  std::vector<double> top_free(static_cast<std::size_t>(std::max(screen.pinned_slots, 0)), -1e300);
  std::vector<double> bottom_free = top_free;

  std::vector<LaneAssignment> out;
  out.reserve(track.danmaku.size());
  for (const auto& d : track.danmaku) {
    LaneAssignment a;
    a.danmaku_id = d.id;
    a.kind = kind_for(d, end_s);
    a.width_px = screen.text_width(d.text);
    a.lane = -1;
    a.dropped = true;

    if (a.kind == LaneKind::Scroll) {
      a.speed_px_s = (screen.width_px + a.width_px) / screen.scroll_duration_s;
      for (int k = 0; k <= steps && a.dropped; ++k) {
        LaneAssignment cand = a;
        cand.enter_s = d.time_s + k * kLayoutDelayStepS;
        for (std::size_t lane = 0; lane < scroll_last.size(); ++lane) {
          const auto& last = scroll_last[lane];
          if (last && (last->enter_s > cand.enter_s || collides(*last, cand, screen))) continue;
          a = cand;
          a.lane = static_cast<int>(lane);
          a.dropped = false;
          scroll_last[lane] = a;
          break;
        }
      }
      if (a.dropped) a.enter_s = d.time_s;
      a.exit_s = a.enter_s + screen.scroll_duration_s;
    } else {
      auto& slots = a.kind == LaneKind::Top ? top_free : bottom_free;
      for (int k = 0; k <= steps && a.dropped; ++k) {
        double t = d.time_s + k * kLayoutDelayStepS;
        for (std::size_t slot = 0; slot < slots.size(); ++slot) {
          if (slots[slot] > t + kEps) continue;
          a.enter_s = t;
          a.lane = static_cast<int>(slot);
          a.dropped = false;
          slots[slot] = t + screen.pinned_duration_s;
          break;
        }
      }
      if (a.dropped) a.enter_s = d.time_s;
      a.exit_s = a.enter_s + screen.pinned_duration_s;
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::string schedule_to_json(const std::vector<LaneAssignment>& schedule) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& a : schedule) {
    nlohmann::ordered_json o;
    o["danmaku_id"] = a.danmaku_id;
    o["kind"] = lane_kind_id(a.kind);
    o["lane"] = a.dropped ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(a.lane);
    o["enter_s"] = a.enter_s;
    o["exit_s"] = a.exit_s;
    o["width_px"] = a.width_px;
    o["speed_px_s"] = a.speed_px_s;
    o["dropped"] = a.dropped;
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

std::vector<LaneAssignment> schedule_from_json(std::string_view json_text) {
  std::vector<LaneAssignment> out;
  try {
    auto arr = nlohmann::json::parse(json_text);
    if (!arr.is_array()) throw Error(Errc::Corrupt, "schedule must be a JSON array");
    for (const auto& o : arr) {
      LaneAssignment a;
      a.danmaku_id = o.at("danmaku_id").get<std::string>();
      auto kind = o.at("kind").get<std::string>();
      if (kind == "scroll") {
        a.kind = LaneKind::Scroll;
      } else if (kind == "top") {
        a.kind = LaneKind::Top;
      } else if (kind == "bottom") {
        a.kind = LaneKind::Bottom;
      } else {
        throw Error(Errc::Corrupt, "unknown lane kind " + kind);
      }
      a.dropped = o.at("dropped").get<bool>();
      a.lane = o.at("lane").is_null() ? -1 : o.at("lane").get<int>();
      a.enter_s = o.at("enter_s").get<double>();
      a.exit_s = o.at("exit_s").get<double>();
      a.width_px = o.at("width_px").get<int>();
      a.speed_px_s = o.at("speed_px_s").get<double>();
      out.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Corrupt, e.what());
  }
  return out;
}

}  // namespace comet
