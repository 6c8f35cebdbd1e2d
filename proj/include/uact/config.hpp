#pragma once

// Pipeline configuration: one JSON document with optional sections
//
//   { "paths":    { "raw", "schemas", "out" },
//     "clean":    { CleanConfig fields },
//     "chunk":    { "H", "stride", "translation_frame", "per_shard" },
//     "sampling": { "strategy", "seed", "draws", "single_arm_budget", "budget_mode", "batch_size" },
//     "train":    { TrainConfig fields, plus model shape: "hidden", "activation", "paradigm",
//                   "context_width", "time_features" },
//     "synthetic":{ "episodes", "defect_rate", "seed", "min_length", "max_length" } }
//
// Missing fields keep their defaults; unknown keys are errors.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uact/aml.hpp"
#include "uact/clean.hpp"
#include "uact/error.hpp"
#include "uact/sampler.hpp"
#include "uact/standardize.hpp"
#include "uact/synthetic.hpp"

namespace uact {

struct PathConfig {
  std::string raw;
  std::string schemas;
  std::string out;
};

struct ChunkConfig {
  int horizon = 16;
  int stride = 16;
  TranslationFrame translation_frame = TranslationFrame::Body;
  std::size_t per_shard = 4096;

  void validate() const {
    if (horizon < 1 || stride < 1 || per_shard == 0) throw Error("bad-config", "chunk H, stride and per_shard must be positive");
  }
};

struct SamplingConfig {
  Strategy strategy = Strategy::TaskUniform;
  std::optional<std::uint64_t> seed;
  std::size_t draws = 1000;
  double single_arm_budget = 0.5;
  BudgetMode budget_mode = BudgetMode::Expectation;
  std::size_t batch_size = 0;

  void validate() const {
    if (!(single_arm_budget >= 0.0 && single_arm_budget <= 1.0)) throw Error("bad-config", "single_arm_budget must lie in [0, 1]");
    if (budget_mode == BudgetMode::PerBatch && batch_size == 0) throw Error("bad-config", "per-batch budget needs batch_size");
  }
};

struct AmlConfig {
  aml::TrainConfig train;
  aml::ModelShape shape;
  bool seed_given = false;
};

struct PipelineConfig {
  PathConfig paths;
  CleanConfig clean;
  ChunkConfig chunk;
  SamplingConfig sampling;
  AmlConfig aml;
  synth::SynthConfig synthetic;
  bool synthetic_seed_given = false;
};

namespace detail {

template <typename T>
T config_get(const json& v, const std::string& where) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw Error("bad-config", "option '" + where + "' has the wrong type");
  }
}

inline void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw Error("bad-config", "section '" + where + "' must be an object");
}

}  // namespace detail

inline TranslationFrame parse_translation_frame(const std::string& s) {
  if (s == "body") return TranslationFrame::Body;
  if (s == "base") return TranslationFrame::Base;
  throw Error("bad-config", "translation_frame must be 'body' or 'base'");
}

inline const char* translation_frame_name(TranslationFrame f) { return f == TranslationFrame::Body ? "body" : "base"; }

inline BudgetMode parse_budget_mode(const std::string& s) {
  if (s == "expectation") return BudgetMode::Expectation;
  if (s == "per-batch" || s == "per_batch") return BudgetMode::PerBatch;
  throw Error("bad-config", "budget_mode must be 'expectation' or 'per-batch'");
}

inline aml::TauDistribution parse_tau_distribution(const std::string& s) {
  if (s == "uniform") return aml::TauDistribution::Uniform;
  if (s == "beta") return aml::TauDistribution::Beta;
  throw Error("bad-config", "tau_distribution must be 'uniform' or 'beta'");
}

inline void apply_train_json(AmlConfig& a, const json& j) {
  detail::require_object(j, "train");
  using detail::config_get;
  for (const auto& [k, v] : j.items()) {
    const std::string w = "train." + k;
    if (k == "learning_rate") a.train.learning_rate = config_get<double>(v, w);
    else if (k == "batch_size") a.train.batch_size = config_get<std::size_t>(v, w);
    else if (k == "steps") a.train.steps = config_get<std::size_t>(v, w);
    else if (k == "tau_max") a.train.tau_max = config_get<double>(v, w);
    else if (k == "tau_distribution") a.train.tau_distribution = parse_tau_distribution(config_get<std::string>(v, w));
    else if (k == "beta_a") a.train.beta_a = config_get<double>(v, w);
    else if (k == "beta_b") a.train.beta_b = config_get<double>(v, w);
    else if (k == "seed") {
      a.train.seed = config_get<std::uint64_t>(v, w);
      a.seed_given = true;
    }
    else if (k == "denoising_steps") a.train.denoising_steps = config_get<int>(v, w);
    else if (k == "grad_clip") a.train.grad_clip = config_get<double>(v, w);
    else if (k == "hidden") a.shape.hidden = config_get<std::vector<int>>(v, w);
    else if (k == "activation") a.shape.activation = aml::parse_activation(config_get<std::string>(v, w));
    else if (k == "paradigm") a.shape.paradigm = aml::parse_paradigm(config_get<std::string>(v, w));
    else if (k == "context_width") a.shape.context_width = config_get<int>(v, w);
    else if (k == "time_features") a.shape.time_features = config_get<int>(v, w);
    else throw Error("bad-config", "unknown option '" + w + "'");
  }
}

inline PipelineConfig pipeline_config_from_json(const json& j) {
  using detail::config_get;
  detail::require_object(j, "<root>");
  PipelineConfig c;
  for (const auto& [section, body] : j.items()) {
    if (section == "paths") {
      detail::require_object(body, section);
      for (const auto& [k, v] : body.items()) {
        if (k == "raw") c.paths.raw = config_get<std::string>(v, "paths.raw");
        else if (k == "schemas") c.paths.schemas = config_get<std::string>(v, "paths.schemas");
        else if (k == "out") c.paths.out = config_get<std::string>(v, "paths.out");
        else throw Error("bad-config", "unknown option 'paths." + k + "'");
      }
    } else if (section == "clean") {
      detail::require_object(body, section);
      c.clean = clean_config_from_json(body);
    } else if (section == "chunk") {
      detail::require_object(body, section);
      for (const auto& [k, v] : body.items()) {
        const std::string w = "chunk." + k;
        if (k == "H") c.chunk.horizon = config_get<int>(v, w);
        else if (k == "stride") c.chunk.stride = config_get<int>(v, w);
        else if (k == "translation_frame") c.chunk.translation_frame = parse_translation_frame(config_get<std::string>(v, w));
        else if (k == "per_shard") c.chunk.per_shard = config_get<std::size_t>(v, w);
        else throw Error("bad-config", "unknown option '" + w + "'");
      }
    } else if (section == "sampling") {
      detail::require_object(body, section);
      for (const auto& [k, v] : body.items()) {
        const std::string w = "sampling." + k;
        if (k == "strategy") c.sampling.strategy = parse_strategy(config_get<std::string>(v, w));
        else if (k == "seed") c.sampling.seed = config_get<std::uint64_t>(v, w);
        else if (k == "draws") c.sampling.draws = config_get<std::size_t>(v, w);
        else if (k == "single_arm_budget") c.sampling.single_arm_budget = config_get<double>(v, w);
        else if (k == "budget_mode") c.sampling.budget_mode = parse_budget_mode(config_get<std::string>(v, w));
        else if (k == "batch_size") c.sampling.batch_size = config_get<std::size_t>(v, w);
        else throw Error("bad-config", "unknown option '" + w + "'");
      }
    } else if (section == "train") {
      apply_train_json(c.aml, body);
    } else if (section == "synthetic") {
      detail::require_object(body, section);
      for (const auto& [k, v] : body.items()) {
        const std::string w = "synthetic." + k;
        if (k == "episodes") c.synthetic.episodes = config_get<std::size_t>(v, w);
        else if (k == "defect_rate") c.synthetic.defect_rate = config_get<double>(v, w);
        else if (k == "seed") {
          c.synthetic.seed = config_get<std::uint64_t>(v, w);
          c.synthetic_seed_given = true;
        }
        else if (k == "min_length") c.synthetic.min_length = config_get<int>(v, w);
        else if (k == "max_length") c.synthetic.max_length = config_get<int>(v, w);
        else throw Error("bad-config", "unknown option '" + w + "'");
      }
    } else {
      throw Error("bad-config", "unknown config section '" + section + "'");
    }
  }
  return c;
}

inline void validate_pipeline_config(const PipelineConfig& c) {
  c.clean.validate();
  c.chunk.validate();
  c.sampling.validate();
  c.aml.train.validate();
  aml::validate_shape(c.aml.shape);
  c.synthetic.validate();
}

}  // namespace uact
