#pragma once

// Multi-stage episode filtering: instruction -> subtask alignment -> visual
// -> action checks. The first rejecting stage decides the episode's reason.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "uact/episode_io.hpp"
#include "uact/error.hpp"
#include "uact/parallel.hpp"
#include "uact/schema.hpp"
#include "uact/types.hpp"

namespace uact {

enum class Decision { Keep, Reject, Refine };

inline const char* decision_name(Decision d) {
  switch (d) {
    case Decision::Keep: return "keep";
    case Decision::Reject: return "reject";
    case Decision::Refine: return "refine";
  }
  return "keep";
}

struct FilterVerdict {
  std::string episode_id;
  Decision decision = Decision::Keep;
  std::vector<std::string> reasons;           // reject: why; refine: what was patched
  std::vector<std::string> flags;             // informational, never changes the decision
  std::optional<EpisodeRecord> refinements;   // present iff decision == Refine

  static FilterVerdict keep(const EpisodeRecord& e) { return {e.id, Decision::Keep, {}, {}, std::nullopt}; }
  static FilterVerdict reject(const EpisodeRecord& e, std::vector<std::string> reasons) {
    return {e.id, Decision::Reject, std::move(reasons), {}, std::nullopt};
  }
};

// None of these thresholds come from measured data; they are starting points.
struct CleanConfig {
  std::size_t min_frames = 10;
  std::size_t max_frames = 10000;
  double max_step_translation = 0.10;  // meters per step
  double max_step_rotation = 0.5;      // radians per step
  double black_brightness_max = 0.02;
  double blur_sharpness_min = 0.1;
  double blur_fraction_max = 0.2;
  double rate_mismatch_tol = 0.15;
  double min_ascii_ratio = 0.85;
  std::size_t max_repeat_run = 8;

  void validate() const {
    const bool positive = min_frames > 0 && max_frames > 0 && max_step_translation > 0 && max_step_rotation > 0 &&
                          black_brightness_max > 0 && blur_sharpness_min > 0 && blur_fraction_max > 0 &&
                          rate_mismatch_tol > 0 && min_ascii_ratio > 0 && max_repeat_run > 0;
    if (!positive) throw Error("bad-config", "clean thresholds must all be positive");
    if (!(min_frames < max_frames)) throw Error("bad-config", "min_frames must be below max_frames");
  }
};

inline json clean_config_to_json(const CleanConfig& c) {
  return json{{"min_frames", c.min_frames},
              {"max_frames", c.max_frames},
              {"max_step_translation", c.max_step_translation},
              {"max_step_rotation", c.max_step_rotation},
              {"black_brightness_max", c.black_brightness_max},
              {"blur_sharpness_min", c.blur_sharpness_min},
              {"blur_fraction_max", c.blur_fraction_max},
              {"rate_mismatch_tol", c.rate_mismatch_tol},
              {"min_ascii_ratio", c.min_ascii_ratio},
              {"max_repeat_run", c.max_repeat_run}};
}

// Unknown keys are rejected so typos in config files surface.
inline CleanConfig clean_config_from_json(const json& j, CleanConfig c = {}) {
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "min_frames") c.min_frames = value.get<std::size_t>();
      else if (key == "max_frames") c.max_frames = value.get<std::size_t>();
      else if (key == "max_step_translation") c.max_step_translation = value.get<double>();
      else if (key == "max_step_rotation") c.max_step_rotation = value.get<double>();
      else if (key == "black_brightness_max") c.black_brightness_max = value.get<double>();
      else if (key == "blur_sharpness_min") c.blur_sharpness_min = value.get<double>();
      else if (key == "blur_fraction_max") c.blur_fraction_max = value.get<double>();
      else if (key == "rate_mismatch_tol") c.rate_mismatch_tol = value.get<double>();
      else if (key == "min_ascii_ratio") c.min_ascii_ratio = value.get<double>();
      else if (key == "max_repeat_run") c.max_repeat_run = value.get<std::size_t>();
      else throw Error("bad-config", "unknown clean option '" + key + "'");
    } catch (const json::exception&) {
      throw Error("bad-config", "clean option '" + key + "' has the wrong type");
    }
  }
  c.validate();
  return c;
}

// Pluggable language handling. The defaults never flag text as non-English
// and translate as the identity, so the pipeline runs fully offline.
struct CleanHooks {
  std::function<bool(std::string_view)> is_non_english = [](std::string_view) { return false; };
  std::function<std::string(std::string_view)> translate = [](std::string_view s) { return std::string(s); };
};

namespace detail {

// Decodes UTF-8; malformed sequences decode to U+FFFD one byte at a time.
inline std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) len = 1, cp = b0;
    else if ((b0 & 0xE0) == 0xC0) len = 2, cp = b0 & 0x1F;
    else if ((b0 & 0xF0) == 0xE0) len = 3, cp = b0 & 0x0F;
    else if ((b0 & 0xF8) == 0xF0) len = 4, cp = b0 & 0x07;
    bool valid = len > 0 && i + len <= s.size();
    for (int k = 1; valid && k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) valid = false;
      else cp = (cp << 6) | (b & 0x3F);
    }
    if (!valid) {
      out.push_back(0xFFFD);
      ++i;
    } else {
      out.push_back(cp);
      i += static_cast<std::size_t>(len);
    }
  }
  return out;
}

// Printable ASCII, ordinary whitespace, Latin-1/Latin Extended letters and
// typographic punctuation (dashes, curly quotes, ellipsis).
inline bool is_common_char(char32_t c) {
  if (c >= 0x20 && c <= 0x7E) return true;
  if (c == '\t' || c == '\n') return true;
  if (c >= 0xA0 && c <= 0x24F) return true;
  if (c >= 0x2010 && c <= 0x2027) return true;
  return false;
}

inline bool is_blank(std::string_view s) { return s.find_first_not_of(" \t\r\n\v\f") == std::string_view::npos; }

inline double quat_angle_between(const Quat& a, const Quat& b) {
  const double d = std::abs(a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z);
  return 2.0 * std::acos(std::min(1.0, d));
}

inline double quat_angle(const Quat& q) { return quat_angle_between(q, Quat{}); }

}  // namespace detail

inline double common_char_ratio(std::string_view text) {
  const auto cps = detail::decode_utf8(text);
  if (cps.empty()) return 0.0;
  const auto ok = std::count_if(cps.begin(), cps.end(), detail::is_common_char);
  return static_cast<double>(ok) / static_cast<double>(cps.size());
}

inline std::size_t longest_repeat_run(std::string_view text) {
  const auto cps = detail::decode_utf8(text);
  std::size_t best = 0, run = 0;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    run = (i > 0 && cps[i] == cps[i - 1]) ? run + 1 : 1;
    best = std::max(best, run);
  }
  return best;
}

inline FilterVerdict filter_instruction(const EpisodeRecord& e, const CleanConfig& cfg, const CleanHooks& hooks = {}) {
  if (detail::is_blank(e.instruction)) return FilterVerdict::reject(e, {"empty-instruction"});
  if (common_char_ratio(e.instruction) < cfg.min_ascii_ratio || longest_repeat_run(e.instruction) > cfg.max_repeat_run) {
    return FilterVerdict::reject(e, {"garbled"});
  }
  if (hooks.is_non_english && hooks.is_non_english(e.instruction)) {
    EpisodeRecord patched = e;
    patched.instruction = hooks.translate ? hooks.translate(e.instruction) : e.instruction;
    add_flag(patched, "needs-translation");
    if (patched == e) return FilterVerdict::keep(e);
    return {e.id, Decision::Refine, {"needs-translation"}, {}, std::move(patched)};
  }
  return FilterVerdict::keep(e);
}

// Clips spans to the frame range, sorts them, truncates the earlier of two
// overlapping spans and drops spans that end up empty.
inline FilterVerdict align_subtasks(const EpisodeRecord& e) {
  if (e.subtasks.empty()) return FilterVerdict::keep(e);
  const auto n = static_cast<std::int64_t>(e.frames.size());
  std::vector<SubtaskSpan> spans;
  for (auto s : e.subtasks) {
    s.start = std::max<std::int64_t>(s.start, 0);
    s.end = std::min<std::int64_t>(s.end, n);
    if (s.start < s.end) spans.push_back(std::move(s));
  }
  if (spans.empty()) return FilterVerdict::reject(e, {"misaligned-subtasks"});
  std::stable_sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) {
    return a.start != b.start ? a.start < b.start : a.end < b.end;
  });
  std::vector<SubtaskSpan> aligned;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    SubtaskSpan s = spans[i];
    if (i + 1 < spans.size()) s.end = std::min(s.end, spans[i + 1].start);
    if (s.start < s.end) aligned.push_back(std::move(s));
  }
  if (aligned == e.subtasks) return FilterVerdict::keep(e);
  EpisodeRecord patched = e;
  patched.subtasks = std::move(aligned);
  return {e.id, Decision::Refine, {"subtasks-realigned"}, {}, std::move(patched)};
}

// Occlusion is not measured; brightness and sharpness stand in for it.
inline FilterVerdict filter_visual(const EpisodeRecord& e, const CleanConfig& cfg) {
  std::size_t with_sharpness = 0, blurred = 0;
  bool any_stats = false;
  for (const auto& f : e.frames) {
    if (f.brightness) {
      any_stats = true;
      if (*f.brightness < cfg.black_brightness_max) return FilterVerdict::reject(e, {"black-frame"});
    }
    if (f.sharpness) {
      any_stats = true;
      ++with_sharpness;
      if (*f.sharpness < cfg.blur_sharpness_min) ++blurred;
    }
  }
  if (with_sharpness > 0 &&
      static_cast<double>(blurred) / static_cast<double>(with_sharpness) > cfg.blur_fraction_max) {
    return FilterVerdict::reject(e, {"blurred"});
  }
  if (!e.viewpoint_ok) return FilterVerdict::reject(e, {"ineffective-viewpoint"});
  FilterVerdict v = FilterVerdict::keep(e);
  if (!any_stats) v.flags.push_back("no-visual-stats");
  return v;
}

inline FilterVerdict filter_actions(const EpisodeRecord& e, const ActionSchemaDescriptor& schema,
                                    const CleanConfig& cfg) {
  std::vector<std::string> reasons;
  if (e.frames.size() < cfg.min_frames || e.frames.size() > cfg.max_frames) reasons.push_back("abnormal-length");

  bool spike = false;
  for (Arm arm : e.arms) {
    const auto slot = [&](std::size_t t) -> const ArmState& { return *(arm == Arm::Left ? e.frames[t].left : e.frames[t].right); };
    for (std::size_t t = 0; t < e.frames.size() && !spike; ++t) {
      const ArmState& cur = slot(t);
      if (e.mode == ActionMode::Delta) {
        spike = cur.pose.position.norm() > cfg.max_step_translation ||
                detail::quat_angle(cur.pose.orientation) > cfg.max_step_rotation;
      } else if (t + 1 < e.frames.size()) {
        const ArmState& next = slot(t + 1);
        spike = (next.pose.position - cur.pose.position).norm() > cfg.max_step_translation ||
                detail::quat_angle_between(cur.pose.orientation, next.pose.orientation) > cfg.max_step_rotation;
      }
    }
  }
  if (spike) reasons.push_back("action-spike");
  if (std::abs(e.action_rate / e.fps - 1.0) > cfg.rate_mismatch_tol) reasons.push_back("rate-mismatch");
  if (schema.ambiguous()) reasons.push_back("ambiguous-action");

  if (!reasons.empty()) return FilterVerdict::reject(e, std::move(reasons));
  return FilterVerdict::keep(e);
}

struct CleanRejection {
  std::string id;
  std::string reason;
  bool operator==(const CleanRejection&) const = default;
};

struct CleanReport {
  std::size_t input = 0;
  std::size_t kept = 0;      // episodes in the output, refined ones included
  std::size_t rejected = 0;
  std::size_t refined = 0;
  double discard_fraction = 0.0;  // rejected / input; refinement is not discard
  std::map<std::string, std::size_t> reasons;  // first reason of each rejection
  std::map<std::string, std::size_t> refinements;
  std::map<std::string, std::size_t> flags;
  std::vector<CleanRejection> rejections;  // sorted by id
  bool operator==(const CleanReport&) const = default;
};

inline json clean_report_to_json(const CleanReport& r) {
  json rej = json::array();
  for (const auto& x : r.rejections) rej.push_back({{"id", x.id}, {"reason", x.reason}});
  return json{{"report", "clean"},
              {"version", 1},
              {"input", r.input},
              {"kept", r.kept},
              {"rejected", r.rejected},
              {"refined", r.refined},
              {"discard_fraction", r.discard_fraction},
              {"reasons", r.reasons},
              {"refinements", r.refinements},
              {"flags", r.flags},
              {"rejections", rej}};
}

inline CleanReport clean_report_from_json(const json& j) {
  if (j.at("report") != "clean" || j.at("version") != 1) throw Error("report-version", "not a clean report v1");
  CleanReport r;
  r.input = j.at("input");
  r.kept = j.at("kept");
  r.rejected = j.at("rejected");
  r.refined = j.at("refined");
  r.discard_fraction = j.at("discard_fraction");
  r.reasons = j.at("reasons").get<std::map<std::string, std::size_t>>();
  r.refinements = j.at("refinements").get<std::map<std::string, std::size_t>>();
  r.flags = j.at("flags").get<std::map<std::string, std::size_t>>();
  for (const auto& x : j.at("rejections")) r.rejections.push_back({x.at("id"), x.at("reason")});
  std::size_t sum = 0;
  for (const auto& [k, v] : r.reasons) sum += v;
  if (sum != r.rejected || r.kept + r.rejected != r.input) {
    throw Error("report-inconsistent", "clean report counts do not add up");
  }
  return r;
}

struct EpisodeOutcome {
  std::optional<EpisodeRecord> episode;  // final form when kept
  std::vector<FilterVerdict> verdicts;   // one per stage that ran
};

// Runs the stages on one episode; refinements from a stage feed the next one.
inline EpisodeOutcome clean_episode(const EpisodeRecord& e, const SchemaRegistry& schemas, const CleanConfig& cfg,
                                    const CleanHooks& hooks = {}) {
  EpisodeOutcome out;
  EpisodeRecord current = e;
  const auto apply = [&](FilterVerdict v) {
    const Decision d = v.decision;
    if (d == Decision::Refine) current = *v.refinements;
    out.verdicts.push_back(std::move(v));
    return d != Decision::Reject;
  };
  if (!apply(filter_instruction(current, cfg, hooks))) return out;
  if (!apply(align_subtasks(current))) return out;
  if (!apply(filter_visual(current, cfg))) return out;
  const auto it = schemas.find(current.dataset);
  if (it == schemas.end()) {
    out.verdicts.push_back(FilterVerdict::reject(current, {"unknown-schema"}));
    return out;
  }
  if (!apply(filter_actions(current, it->second, cfg))) return out;
  out.episode = std::move(current);
  return out;
}

inline std::pair<std::vector<EpisodeRecord>, CleanReport> run_pipeline(const std::vector<EpisodeRecord>& corpus,
                                                                       const SchemaRegistry& schemas,
                                                                       const CleanConfig& cfg,
                                                                       const CleanHooks& hooks = {}) {
  cfg.validate();
  std::vector<EpisodeOutcome> outcomes(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) { outcomes[i] = clean_episode(corpus[i], schemas, cfg, hooks); });

  CleanReport report;
  report.input = corpus.size();
  std::vector<EpisodeRecord> kept;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto& o = outcomes[i];
    for (const auto& v : o.verdicts) {
      for (const auto& f : v.flags) ++report.flags[f];
    }
    if (!o.episode) {
      const auto& last = o.verdicts.back();
      ++report.reasons[last.reasons.front()];
      report.rejections.push_back({corpus[i].id, last.reasons.front()});
      continue;
    }
    bool refined = false;
    for (const auto& v : o.verdicts) {
      if (v.decision == Decision::Refine) {
        refined = true;
        for (const auto& r : v.reasons) ++report.refinements[r];
      }
    }
    if (refined) ++report.refined;
    kept.push_back(std::move(*o.episode));
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(report.rejections.begin(), report.rejections.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  report.kept = kept.size();
  report.rejected = report.rejections.size();
  report.discard_fraction =
      report.input == 0 ? 0.0 : static_cast<double>(report.rejected) / static_cast<double>(report.input);
  return {std::move(kept), std::move(report)};
}

}  // namespace uact
