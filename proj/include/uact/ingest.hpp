#pragma once

// Raw interchange documents -> EpisodeRecords, driven by schema descriptors.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "uact/episode_io.hpp"
#include "uact/error.hpp"
#include "uact/parallel.hpp"
#include "uact/rotation.hpp"
#include "uact/schema.hpp"
#include "uact/types.hpp"
#include "uact/validate.hpp"

namespace uact {

struct FrameStats {
  double brightness = 0.0;
  double sharpness = 0.0;
};

// Brightness is the mean gray level; sharpness is the variance of the
// 4-neighbour second difference (discrete Laplacian) over interior pixels.
// Pixels are row-major gray levels in [0, 1].
inline FrameStats frame_stats_from_gray(const std::vector<double>& pixels, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0 || pixels.size() != width * height) {
    throw Error("bad-gray-image", "gray image size does not match width*height");
  }
  FrameStats st;
  double sum = 0.0;
  for (double p : pixels) sum += p;
  st.brightness = sum / static_cast<double>(pixels.size());
  if (width < 3 || height < 3) return st;
  std::vector<double> lap;
  lap.reserve((width - 2) * (height - 2));
  for (std::size_t y = 1; y + 1 < height; ++y) {
    for (std::size_t x = 1; x + 1 < width; ++x) {
      const auto at = [&](std::size_t xx, std::size_t yy) { return pixels[yy * width + xx]; };
      lap.push_back(at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1) - 4.0 * at(x, y));
    }
  }
  double mean = 0.0;
  for (double v : lap) mean += v;
  mean /= static_cast<double>(lap.size());
  double var = 0.0;
  for (double v : lap) var += (v - mean) * (v - mean);
  st.sharpness = var / static_cast<double>(lap.size());
  return st;
}

namespace detail {

inline Quat rotation_block_to_quat(RotationRepr repr, const std::array<double, 9>& r) {
  switch (repr) {
    case RotationRepr::QuatWXYZ:
    case RotationRepr::QuatXYZW: {
      const Quat q = repr == RotationRepr::QuatWXYZ ? Quat{r[0], r[1], r[2], r[3]} : Quat{r[3], r[0], r[1], r[2]};
      if (q.norm() < 1e-9) throw Error("degenerate-quaternion", "quaternion has zero norm");
      return q.normalized();
    }
    case RotationRepr::EulerXYZ:
      return matrix_to_quat(euler_to_matrix(Vec3(r[0], r[1], r[2]), EulerConvention::XYZ));
    case RotationRepr::EulerZYX:
      return matrix_to_quat(euler_to_matrix(Vec3(r[0], r[1], r[2]), EulerConvention::ZYX));
    case RotationRepr::RotMat9: {
      Mat3 m;
      m << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
      if (!is_rotation_matrix(m)) throw Error("non-orthonormal-rotation", "rotation matrix is not orthonormal");
      return matrix_to_quat(m);
    }
    case RotationRepr::AxisAngle:
      return rotvec_to_quat(Vec3(r[0], r[1], r[2]));
    case RotationRepr::Unspecified:
      return Quat{};
  }
  return Quat{};
}

template <typename T>
T field_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? fallback : it->get<T>();
}

}  // namespace detail

// Maps a raw document onto an EpisodeRecord. Throws uact::Error on any
// defect; subtask span problems are left for the alignment filter.
inline EpisodeRecord ingest_episode(const json& raw, const ActionSchemaDescriptor& schema) {
  EpisodeRecord e;
  try {
    e.id = raw.at("id").get<std::string>();
    e.dataset = raw.at("dataset").get<std::string>();
    e.embodiment = raw.at("embodiment").get<std::string>();
    e.task = raw.at("task").get<std::string>();
    e.skill = detail::field_or<std::string>(raw, "skill", "");
    if (e.skill.empty()) e.skill = e.task;
    e.fps = raw.at("fps").get<double>();
    e.action_rate = raw.at("action_rate").get<double>();
    e.instruction = detail::field_or<std::string>(raw, "instruction", "");
    e.viewpoint_ok = detail::field_or<bool>(raw, "viewpoint_ok", true);
    if (raw.contains("subtasks")) {
      for (const auto& s : raw["subtasks"]) {
        e.subtasks.push_back({s.at("start").get<std::int64_t>(), s.at("end").get<std::int64_t>(),
                              detail::field_or<std::string>(s, "text", "")});
      }
    }
  } catch (const json::exception& ex) {
    throw Error("bad-document", std::string("malformed episode header: ") + ex.what());
  }
  if (e.dataset != schema.dataset) {
    throw Error("dataset-mismatch", "episode dataset '" + e.dataset + "' does not match schema '" + schema.dataset + "'");
  }
  e.arms = schema.arms;
  e.mode = schema.mode;
  e.action_dim = schema.dimension_count();

  const json* frames = nullptr;
  try {
    frames = &raw.at("frames");
  } catch (const json::exception&) {
    throw Error("no-frames", "episode has no frames");
  }
  if (!frames->is_array() || frames->empty()) throw Error("no-frames", "episode has no frames");

  const double glo = schema.gripper_range.lo;
  const double gspan = schema.gripper_range.hi - schema.gripper_range.lo;
  std::int64_t position = 0;
  for (const auto& jf : *frames) {
    FrameRecord f;
    try {
      f.index = detail::field_or<std::int64_t>(jf, "index", position);
      f.raw_action = jf.at("action").get<std::vector<double>>();
      if (jf.contains("brightness")) f.brightness = jf["brightness"].get<double>();
      if (jf.contains("sharpness")) f.sharpness = jf["sharpness"].get<double>();
      if (jf.contains("gray") && (!f.brightness || !f.sharpness)) {
        const auto& g = jf["gray"];
        const auto st = frame_stats_from_gray(g.at("pixels").get<std::vector<double>>(),
                                              g.at("width").get<std::size_t>(), g.at("height").get<std::size_t>());
        if (!f.brightness) f.brightness = st.brightness;
        if (!f.sharpness) f.sharpness = st.sharpness;
      }
    } catch (const json::exception& ex) {
      throw Error("bad-document", "frame " + std::to_string(position) + ": " + ex.what());
    }
    ++position;
    if (f.raw_action.size() != schema.dimension_count()) {
      throw Error("dim-count-mismatch", "frame " + std::to_string(f.index) + " has " +
                                            std::to_string(f.raw_action.size()) + " action dims, schema declares " +
                                            std::to_string(schema.dimension_count()));
    }
    for (double v : f.raw_action) {
      if (!std::isfinite(v)) throw Error("non-finite", "frame " + std::to_string(f.index) + " has non-finite action");
    }
    if ((f.brightness && !std::isfinite(*f.brightness)) || (f.sharpness && !std::isfinite(*f.sharpness))) {
      throw Error("non-finite", "frame " + std::to_string(f.index) + " has non-finite statistics");
    }

    for (Arm arm : schema.arms) {
      Vec3 trans = Vec3::Zero();
      std::array<double, 9> rot{};
      double grip = 0.0;
      for (const auto& d : schema.dims) {
        if (d.arm != arm) continue;
        const double v = f.raw_action[static_cast<std::size_t>(d.index)];
        if (d.role == DimRole::TransX) trans[0] = v;
        else if (d.role == DimRole::TransY) trans[1] = v;
        else if (d.role == DimRole::TransZ) trans[2] = v;
        else if (d.role == DimRole::Gripper) grip = v;
        else rot[static_cast<std::size_t>(rotation_slot(d.role))] = v;
      }
      ArmState s;
      s.pose = Pose{trans, detail::rotation_block_to_quat(schema.rotation_repr, rot)};
      s.gripper = std::clamp((grip - glo) / gspan, 0.0, 1.0);
      (arm == Arm::Left ? f.left : f.right) = s;
    }
    e.frames.push_back(std::move(f));
  }

  const auto report = validate_episode(e);
  for (const auto& issue : report.issues) {
    if (issue.code.rfind("subtask-", 0) == 0) continue;
    throw Error(issue.code, "ingested episode invalid: " + issue.detail);
  }
  return e;
}

struct IngestFailure {
  std::string id;
  std::string reason;
  bool operator==(const IngestFailure&) const = default;
};

struct IngestReport {
  std::size_t ok = 0;
  std::size_t failed = 0;
  std::vector<IngestFailure> failures;  // sorted by (id, reason)
  std::map<std::string, std::size_t> reasons;
  bool operator==(const IngestReport&) const = default;
};

inline json ingest_report_to_json(const IngestReport& r) {
  json failures = json::array();
  for (const auto& f : r.failures) failures.push_back({{"id", f.id}, {"reason", f.reason}});
  return json{{"report", "ingest"}, {"version", 1},        {"ok", r.ok},
              {"failed", r.failed}, {"failures", failures}, {"reasons", r.reasons}};
}

inline IngestReport ingest_report_from_json(const json& j) {
  if (j.at("report") != "ingest" || j.at("version") != 1) throw Error("report-version", "not an ingest report v1");
  IngestReport r;
  r.ok = j.at("ok").get<std::size_t>();
  r.failed = j.at("failed").get<std::size_t>();
  for (const auto& f : j.at("failures")) r.failures.push_back({f.at("id"), f.at("reason")});
  r.reasons = j.at("reasons").get<std::map<std::string, std::size_t>>();
  if (r.failures.size() != r.failed) throw Error("report-inconsistent", "failure list length != failed");
  return r;
}

// Ingests every document independently; a failure never aborts the batch.
// Records come back sorted by id. Ids that occur more than once all fail
// with "duplicate-id", which keeps the outcome independent of input order.
inline std::pair<std::vector<EpisodeRecord>, IngestReport> ingest_corpus(const std::vector<std::string>& documents,
                                                                        const SchemaRegistry& schemas) {
  struct Outcome {
    std::string id;
    std::optional<EpisodeRecord> record;
    std::string reason;
  };
  std::vector<Outcome> outcomes(documents.size());
  parallel_for(documents.size(), [&](std::size_t i) {
    Outcome& out = outcomes[i];
    json raw;
    try {
      raw = json::parse(documents[i]);
    } catch (const json::exception&) {
      out.id = "<document " + std::to_string(i + 1) + ">";
      out.reason = "invalid-json";
      return;
    }
    out.id = raw.is_object() && raw.contains("id") && raw["id"].is_string() ? raw["id"].get<std::string>()
                                                                              : "<document " + std::to_string(i + 1) + ">";
    const std::string dataset =
        raw.is_object() && raw.contains("dataset") && raw["dataset"].is_string() ? raw["dataset"].get<std::string>() : "";
    const auto it = schemas.find(dataset);
    if (it == schemas.end()) {
      out.reason = "unknown-schema";
      return;
    }
    try {
      out.record = ingest_episode(raw, it->second);
    } catch (const Error& ex) {
      out.reason = ex.code();
    } catch (const std::exception&) {
      out.reason = "bad-document";
    }
  });

  std::map<std::string, std::size_t> id_count;
  for (const auto& o : outcomes) ++id_count[o.id];

  std::vector<EpisodeRecord> records;
  IngestReport report;
  for (auto& o : outcomes) {
    if (o.record && id_count[o.id] > 1) {
      o.record.reset();
      o.reason = "duplicate-id";
    }
    if (o.record) {
      records.push_back(std::move(*o.record));
    } else {
      report.failures.push_back({o.id, o.reason});
      ++report.reasons[o.reason];
    }
  }
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(report.failures.begin(), report.failures.end(),
            [](const auto& a, const auto& b) { return std::tie(a.id, a.reason) < std::tie(b.id, b.reason); });
  report.ok = records.size();
  report.failed = report.failures.size();
  return {std::move(records), std::move(report)};
}

}  // namespace uact
