#pragma once

// AML checkpoint ("AMLM" v1), little-endian:
//
//   magic          "AMLM"
//   version        u16 = 1
//   activation     u8   (0 tanh, 1 relu)
//   paradigm       u8   (0 a-pred, 1 v-pred)
//   horizon        u32
//   action_dim     u32
//   state_dim      u32
//   context_vocab  u32
//   context_width  u32
//   time_features  u32
//   layer_count    u32  number of entries in the layer-dims list
//   layer dims     layer_count x u32, input width first, output width last
//   param_count    u64
//   params         param_count x f64
//
// The training trace travels as a JSON sidecar.

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "uact/aml.hpp"
#include "uact/bytes.hpp"
#include "uact/episode_io.hpp"
#include "uact/error.hpp"

namespace uact::aml {

inline constexpr std::uint16_t kCheckpointVersion = 1;

inline std::string encode_checkpoint(const AmlModel& m) {
  uact::detail::ByteWriter w;
  w.bytes("AMLM", 4);
  w.u16(kCheckpointVersion);
  w.u8(static_cast<std::uint8_t>(m.shape.activation));
  w.u8(static_cast<std::uint8_t>(m.shape.paradigm));
  for (int v : {m.shape.horizon, m.shape.action_dim, m.shape.state_dim, m.shape.context_vocab, m.shape.context_width,
                m.shape.time_features}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
  const auto dims = m.layer_dims();
  w.u32(static_cast<std::uint32_t>(dims.size()));
  for (int d : dims) w.u32(static_cast<std::uint32_t>(d));
  w.u64(m.params.size());
  for (double p : m.params) w.f64(p);
  return w.data();
}

inline AmlModel decode_checkpoint(std::string_view bytes, const std::string& what = "checkpoint") {
  uact::detail::ByteReader r(bytes, what);
  if (r.str(4) != "AMLM") throw Error("bad-magic", what + ": not an AMLM checkpoint");
  if (r.u16() != kCheckpointVersion) throw Error("bad-version", what + ": unsupported checkpoint version");
  AmlModel m;
  const auto act = r.u8(), par = r.u8();
  if (act > 1 || par > 1) throw Error("bad-checkpoint", what + ": unknown activation or paradigm");
  m.shape.activation = static_cast<Activation>(act);
  m.shape.paradigm = static_cast<Paradigm>(par);
  m.shape.horizon = static_cast<int>(r.u32());
  m.shape.action_dim = static_cast<int>(r.u32());
  m.shape.state_dim = static_cast<int>(r.u32());
  m.shape.context_vocab = static_cast<int>(r.u32());
  m.shape.context_width = static_cast<int>(r.u32());
  m.shape.time_features = static_cast<int>(r.u32());
  const auto layers = r.u32();
  if (layers < 3 || layers > 64) throw Error("bad-checkpoint", what + ": implausible layer count");
  std::vector<int> dims;
  for (std::uint32_t i = 0; i < layers; ++i) dims.push_back(static_cast<int>(r.u32()));
  m.shape.hidden.assign(dims.begin() + 1, dims.end() - 1);
  try {
    validate_shape(m.shape);
  } catch (const Error& e) {
    throw Error("bad-checkpoint", what + ": " + e.what());
  }
  if (m.layer_dims() != dims) throw Error("bad-checkpoint", what + ": layer dims disagree with the model shape");
  const auto count = r.u64();
  if (count != m.parameter_count()) throw Error("bad-checkpoint", what + ": parameter count mismatch");
  m.params.resize(count);
  for (auto& p : m.params) {
    p = r.f64();
    if (!std::isfinite(p)) throw Error("bad-checkpoint", what + ": non-finite parameter");
  }
  if (!r.done()) throw Error("trailing-bytes", what + ": trailing bytes after parameters");
  return m;
}

inline void save_checkpoint(const std::string& path, const AmlModel& m) { write_text_file(path, encode_checkpoint(m)); }

inline AmlModel load_checkpoint(const std::string& path) {
  return decode_checkpoint(uact::detail::read_binary_file(path), path);
}

inline nlohmann::json trace_to_json(const TrainTrace& t, const TrainConfig& cfg, const ModelShape& s) {
  return {{"report", "aml-train"},
          {"version", 1},
          {"paradigm", paradigm_name(s.paradigm)},
          {"steps", cfg.steps},
          {"seed", cfg.seed},
          {"learning_rate", cfg.learning_rate},
          {"batch_size", cfg.batch_size},
          {"tau_max", cfg.tau_max},
          {"grad_clip", cfg.grad_clip},
          {"loss", t.loss},
          {"action_mse", t.action_mse}};
}

inline TrainTrace trace_from_json(const nlohmann::json& j) {
  if (j.value("report", "") != "aml-train" || j.value("version", 0) != 1) {
    throw Error("bad-report", "not an aml-train v1 trace");
  }
  TrainTrace t;
  t.loss = j.at("loss").get<std::vector<double>>();
  t.action_mse = j.at("action_mse").get<std::vector<double>>();
  if (t.loss.size() != t.action_mse.size() || t.loss.size() != j.at("steps").get<std::size_t>()) {
    throw Error("bad-report", "trace length disagrees with step count");
  }
  return t;
}

}  // namespace uact::aml
