// uact: batch driver for ingest, cleaning, standardization, sampling and the
// flow-matching toy engine. Exit codes: 0 ok, 1 config/validation error,
// 2 I/O error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "uact/aml.hpp"
#include "uact/checkpoint.hpp"
#include "uact/clean.hpp"
#include "uact/config.hpp"
#include "uact/episode_io.hpp"
#include "uact/ingest.hpp"
#include "uact/manifest.hpp"
#include "uact/sampler.hpp"
#include "uact/schema.hpp"
#include "uact/shard.hpp"
#include "uact/standardize.hpp"
#include "uact/synthetic.hpp"
#include "uact/toy.hpp"

namespace fs = std::filesystem;
using uact::json;

namespace {

constexpr const char* kPrecedence =
    "Configuration precedence: command-line flags > --config file > built-in defaults.\n"
    "Randomized commands (gen, sample, aml-train, aml-sample, gradcheck, pipeline) require a seed,\n"
    "given by --seed or by the matching config field.\n"
    "Exit codes: 0 success, 1 validation/config error, 2 I/O error, 3 numerical failure.\n"
    "UACT_THREADS caps the number of worker threads.";

void require_input(const std::string& path, const std::string& what) {
  if (path.empty()) throw uact::Error("missing-input", "no " + what + " path given");
  if (!fs::exists(path)) throw uact::Error("missing-input", what + " '" + path + "' does not exist");
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) throw uact::Error("missing-output", "no output directory given");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw uact::IoError("cannot create output directory '" + dir + "'");
}

void ensure_parent(const std::string& file) {
  const auto parent = fs::path(file).parent_path();
  if (!parent.empty()) ensure_dir(parent.string());
}

std::string join(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

// Parsed --config plus the per-command flag storage.
struct Ctx {
  std::string config_path;
  uact::PipelineConfig cfg;

  void load() {
    if (config_path.empty()) return;
    require_input(config_path, "config file");
    cfg = uact::pipeline_config_from_json(uact::read_json_file(config_path));
  }
};

template <typename T>
void override(CLI::Option* opt, const T& value, T& target) {
  if (opt && opt->count() > 0) target = value;
}

// ---------------------------------------------------------------------------
// Pipeline stages shared by the single commands and `pipeline`.

json run_gen(const uact::synth::SynthConfig& sc, const std::string& out) {
  ensure_dir(out);
  const auto corpus = uact::synth::generate_corpus(sc);
  std::string raw;
  for (const auto& d : corpus.documents) raw += d + "\n";
  uact::write_text_file(join(out, "raw.jsonl"), raw);
  uact::write_text_file(join(out, "schemas.jsonl"), corpus.schemas);
  const json defects = uact::synth::defects_to_json(sc, corpus);
  uact::write_json_file(join(out, "defects.json"), defects);
  return defects;
}

uact::SchemaRegistry load_schemas(const std::string& path) {
  require_input(path, "schema registry");
  return uact::load_schema_registry(path);
}

json run_ingest(const std::string& raw, const std::string& schemas, const std::string& out) {
  require_input(raw, "raw corpus");
  const auto registry = load_schemas(schemas);
  ensure_dir(out);
  const auto docs = uact::read_lines(raw);
  std::vector<std::string> nonblank;
  for (const auto& d : docs) {
    if (d.find_first_not_of(" \t\r") != std::string::npos) nonblank.push_back(d);
  }
  auto [records, report] = uact::ingest_corpus(nonblank, registry);
  uact::write_episode_store(join(out, "ingested.jsonl"), records);
  const json rj = uact::ingest_report_to_json(report);
  uact::write_json_file(join(out, "ingest_report.json"), rj);
  if (report.ok == 0 && !nonblank.empty()) throw uact::Error("nothing-ingested", "no episode could be ingested");
  return rj;
}

json run_clean(const std::string& episodes, const std::string& schemas, const uact::CleanConfig& cc,
               const std::string& out) {
  require_input(episodes, "episode store");
  const auto registry = load_schemas(schemas);
  ensure_dir(out);
  const auto corpus = uact::read_episode_store(episodes);
  auto [kept, report] = uact::run_pipeline(corpus, registry, cc);
  uact::write_episode_store(join(out, "cleaned.jsonl"), kept);
  uact::write_json_file(join(out, "manifest.json"), uact::manifest_to_json(uact::build_manifest(kept)));
  const json rj = uact::clean_report_to_json(report);
  uact::write_json_file(join(out, "clean_report.json"), rj);
  return rj;
}

json run_standardize(const std::string& episodes, const uact::ChunkConfig& ch, const std::string& out) {
  require_input(episodes, "episode store");
  ch.validate();
  ensure_dir(out);
  const auto corpus = uact::read_episode_store(episodes);
  std::vector<std::vector<uact::ActionChunk>> per(corpus.size());
  std::vector<std::string> errors(corpus.size());
  uact::parallel_for(corpus.size(), [&](std::size_t i) {
    try {
      per[i] = uact::chunk_episode(corpus[i], ch.horizon, ch.stride, ch.translation_frame);
    } catch (const uact::Error& e) {
      errors[i] = e.code();
    }
  });
  std::vector<uact::ActionChunk> chunks;
  json failures = json::array();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!errors[i].empty()) failures.push_back({{"id", corpus[i].id}, {"reason", errors[i]}});
    for (auto& c : per[i]) chunks.push_back(std::move(c));
  }
  const json sidecar = uact::write_shards(out, "chunks", chunks, ch.horizon, ch.per_shard);
  json norm = nullptr;
  if (chunks.size() >= 2) {
    norm = uact::norm_stats_to_json(uact::fit_norm(chunks));
    uact::write_json_file(join(out, "norm.json"), norm);
  }
  std::size_t single = 0;
  for (const auto& c : chunks) {
    if (!c.arm_mask[0]) ++single;
  }
  const json rj{{"report", "standardize"},
                {"version", 1},
                {"episodes", corpus.size()},
                {"chunks", chunks.size()},
                {"single_arm_chunks", single},
                {"H", ch.horizon},
                {"stride", ch.stride},
                {"translation_frame", uact::translation_frame_name(ch.translation_frame)},
                {"shards", sidecar.at("shards").size()},
                {"normalization", norm.is_null() ? "none" : "norm.json"},
                {"failures", failures}};
  uact::write_json_file(join(out, "standardize_report.json"), rj);
  return rj;
}

uact::StrataIndex load_index(const std::string& manifest) {
  require_input(manifest, "manifest");
  return uact::strata_from_manifest(uact::manifest_from_json(uact::read_json_file(manifest)));
}

json run_sample(const std::string& manifest, const uact::SamplingConfig& sc, const std::string& out_file) {
  sc.validate();
  if (!sc.seed) throw uact::Error("missing-seed", "sample requires --seed (or sampling.seed in the config)");
  const auto idx = load_index(manifest);
  const auto plan = uact::make_plan(idx, sc.strategy, sc.single_arm_budget, *sc.seed, sc.draws, sc.budget_mode,
                                    sc.batch_size);
  const json pj = uact::plan_to_json(plan);
  ensure_parent(out_file);
  uact::write_json_file(out_file, pj);
  return pj;
}

json run_analyze(const std::string& plan_file, const std::string& manifest, const std::string& out_file) {
  require_input(plan_file, "plan");
  const auto plan = uact::plan_from_json(uact::read_json_file(plan_file));
  const auto idx = load_index(manifest);
  const json mj = uact::plan_metrics(plan, idx);
  ensure_parent(out_file);
  uact::write_json_file(out_file, mj);
  return mj;
}

// Context id for real chunks: 0 right arm only, 1 left only, 2 both.
int context_of(const uact::ActionChunk& c) {
  if (c.arm_mask[0] && c.arm_mask[1]) return 2;
  return c.arm_mask[0] ? 1 : 0;
}

struct TrainData {
  std::vector<uact::aml::TrainingItem> items;
  std::string source;
};

TrainData chunk_training_data(const std::string& sidecar, const std::string& norm_file) {
  require_input(sidecar, "shard sidecar");
  auto chunks = uact::read_shards(sidecar);
  if (!norm_file.empty()) {
    require_input(norm_file, "normalization stats");
    const auto st = uact::norm_stats_from_json(uact::read_json_file(norm_file));
    for (auto& c : chunks) c = uact::apply_norm(std::move(c), st);
  }
  TrainData d;
  d.source = "chunks";
  for (const auto& c : chunks) {
    uact::aml::TrainingItem it;
    it.chunk = uact::aml::Matrix(c.actions);
    it.context.context_id = context_of(c);
    it.context.state = Eigen::Map<const Eigen::VectorXd>(c.state.data(), uact::kUnifiedDims);
    d.items.push_back(std::move(it));
  }
  return d;
}

TrainData toy_training_data(const std::string& toy, std::size_t count, int horizon, std::uint64_t seed) {
  TrainData d;
  d.source = toy;
  if (toy == "circle") d.items = uact::aml::toy::circle_dataset(count, seed);
  else if (toy == "arc") d.items = uact::aml::toy::arc_dataset(count, horizon, seed);
  else throw uact::Error("bad-config", "unknown toy distribution '" + toy + "' (circle or arc)");
  return d;
}

json run_aml_train(const TrainData& data, uact::AmlConfig ac, const std::string& out) {
  if (!ac.seed_given) throw uact::Error("missing-seed", "aml-train requires --seed (or train.seed in the config)");
  if (data.items.empty()) throw uact::Error("empty-dataset", "no training chunks");
  ac.shape.horizon = static_cast<int>(data.items.front().chunk.rows());
  ac.shape.action_dim = static_cast<int>(data.items.front().chunk.cols());
  ac.shape.state_dim = static_cast<int>(data.items.front().context.state.size());
  if (data.source == "chunks") ac.shape.context_vocab = 3;
  ac.train.validate();
  ensure_dir(out);
  const auto model = uact::aml::make_model(ac.shape, ac.train.seed);
  const auto res = uact::aml::train(model, data.items, ac.train);
  uact::aml::save_checkpoint(join(out, "model.amlm"), res.model);
  json trace = uact::aml::trace_to_json(res.trace, ac.train, ac.shape);
  trace["source"] = data.source;
  trace["parameters"] = res.model.parameter_count();
  uact::write_json_file(join(out, "trace.json"), trace);
  return {{"report", "aml-train"},
          {"version", 1},
          {"source", data.source},
          {"parameters", res.model.parameter_count()},
          {"initial_loss", res.trace.loss.empty() ? 0.0 : res.trace.loss.front()},
          {"final_loss", res.trace.loss.empty() ? 0.0 : res.trace.loss.back()}};
}

json run_aml_sample(const std::string& model_file, std::uint64_t seed, std::size_t count, int steps, int context,
                    double tau_max, const std::string& toy, const std::string& out_file) {
  require_input(model_file, "model checkpoint");
  const auto m = uact::aml::load_checkpoint(model_file);
  if (context < 0 || context >= m.shape.context_vocab) throw uact::Error("bad-config", "context id outside the model vocabulary");
  uact::aml::Conditioning c;
  c.context_id = context;
  c.state = Eigen::VectorXd::Zero(m.shape.state_dim);
  const std::vector<uact::aml::Conditioning> ctx(count, c);
  const auto samples = uact::aml::euler_sample(m, ctx, steps, seed, tau_max);
  json arr = json::array();
  for (const auto& s : samples) {
    json rows = json::array();
    for (int r = 0; r < s.rows(); ++r) {
      json row = json::array();
      for (int k = 0; k < s.cols(); ++k) row.push_back(s(r, k));
      rows.push_back(row);
    }
    arr.push_back(rows);
  }
  json out{{"report", "aml-sample"},
           {"version", 1},
           {"paradigm", uact::aml::paradigm_name(m.shape.paradigm)},
           {"seed", seed},
           {"steps", steps},
           {"count", count},
           {"samples", arr}};
  if (!samples.empty() && toy == "circle") out["mean_radial_error"] = uact::aml::toy::mean_radial_error(samples);
  if (!samples.empty() && toy == "arc") out["mean_arc_error"] = uact::aml::toy::mean_arc_error(samples);
  ensure_parent(out_file);
  uact::write_json_file(out_file, out);
  return out;
}

std::vector<int> parse_widths(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (...) {
      throw uact::Error("bad-config", "hidden widths must be comma-separated integers");
    }
  }
  if (out.empty()) throw uact::Error("bad-config", "hidden widths must not be empty");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uact: robot trajectory standardization, cleaning, sampling and flow-matching toolkit"};
  app.footer(kPrecedence);
  app.require_subcommand(1);
  Ctx ctx;
  std::function<json()> action;

  const auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", ctx.config_path, "pipeline config file (JSON)");
    sub->footer(kPrecedence);
  };

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic corpus with injected defects");
  add_config(gen);
  std::uint64_t gen_seed = 0;
  std::size_t gen_episodes = 0;
  double gen_rate = 0;
  int gen_min = 0, gen_max = 0;
  std::string gen_out;
  auto* gen_seed_o = gen->add_option("--seed", gen_seed, "generator seed");
  auto* gen_ep_o = gen->add_option("--episodes", gen_episodes, "episode count (default 100)");
  auto* gen_rate_o = gen->add_option("--defect-rate", gen_rate, "fraction of defective episodes (default 0.16)");
  auto* gen_min_o = gen->add_option("--min-length", gen_min, "shortest clean episode in frames (default 40)");
  auto* gen_max_o = gen->add_option("--max-length", gen_max, "longest clean episode in frames (default 80)");
  auto* gen_out_o = gen->add_option("--out", gen_out, "output directory (raw.jsonl, schemas.jsonl, defects.json)");
  gen->callback([&] {
    action = [&] {
      ctx.load();
      auto sc = ctx.cfg.synthetic;
      bool seeded = ctx.cfg.synthetic_seed_given;
      if (gen_seed_o->count()) {
        sc.seed = gen_seed;
        seeded = true;
      }
      if (!seeded) throw uact::Error("missing-seed", "gen requires --seed (or synthetic.seed in the config)");
      override(gen_ep_o, gen_episodes, sc.episodes);
      override(gen_rate_o, gen_rate, sc.defect_rate);
      override(gen_min_o, gen_min, sc.min_length);
      override(gen_max_o, gen_max, sc.max_length);
      std::string out = ctx.cfg.paths.out;
      override(gen_out_o, gen_out, out);
      return run_gen(sc, out);
    };
  });

  // ingest
  auto* ing = app.add_subcommand("ingest", "parse raw documents against schema descriptors");
  add_config(ing);
  std::string ing_raw, ing_schemas, ing_out;
  auto* ing_raw_o = ing->add_option("--raw", ing_raw, "raw corpus (JSONL)");
  auto* ing_sch_o = ing->add_option("--schemas", ing_schemas, "schema registry (JSONL)");
  auto* ing_out_o = ing->add_option("--out", ing_out, "output directory (ingested.jsonl, ingest_report.json)");
  ing->callback([&] {
    action = [&] {
      ctx.load();
      auto p = ctx.cfg.paths;
      override(ing_raw_o, ing_raw, p.raw);
      override(ing_sch_o, ing_schemas, p.schemas);
      override(ing_out_o, ing_out, p.out);
      return run_ingest(p.raw, p.schemas, p.out);
    };
  });

  // clean
  auto* cln = app.add_subcommand("clean", "run the filtering and refinement pipeline");
  add_config(cln);
  std::string cln_eps, cln_schemas, cln_out;
  std::size_t cln_min = 0, cln_max = 0;
  double cln_tr = 0, cln_rot = 0;
  auto* cln_eps_o = cln->add_option("--episodes", cln_eps, "episode store (default <out>/ingested.jsonl)");
  auto* cln_sch_o = cln->add_option("--schemas", cln_schemas, "schema registry (JSONL)");
  auto* cln_out_o = cln->add_option("--out", cln_out, "output directory (cleaned.jsonl, manifest.json, clean_report.json)");
  auto* cln_min_o = cln->add_option("--min-frames", cln_min, "shortest accepted episode (default 10)");
  auto* cln_max_o = cln->add_option("--max-frames", cln_max, "longest accepted episode (default 10000)");
  auto* cln_tr_o = cln->add_option("--max-step-translation", cln_tr, "per-step translation bound, meters (default 0.10)");
  auto* cln_rot_o = cln->add_option("--max-step-rotation", cln_rot, "per-step rotation bound, radians (default 0.5)");
  cln->callback([&] {
    action = [&] {
      ctx.load();
      auto p = ctx.cfg.paths;
      auto cc = ctx.cfg.clean;
      override(cln_sch_o, cln_schemas, p.schemas);
      override(cln_out_o, cln_out, p.out);
      std::string eps = p.out.empty() ? "" : join(p.out, "ingested.jsonl");
      override(cln_eps_o, cln_eps, eps);
      override(cln_min_o, cln_min, cc.min_frames);
      override(cln_max_o, cln_max, cc.max_frames);
      override(cln_tr_o, cln_tr, cc.max_step_translation);
      override(cln_rot_o, cln_rot, cc.max_step_rotation);
      cc.validate();
      return run_clean(eps, p.schemas, cc, p.out);
    };
  });

  // standardize
  auto* std_ = app.add_subcommand("standardize", "convert to unified delta actions and write chunk shards");
  add_config(std_);
  std::string st_eps, st_out, st_frame;
  int st_h = 0, st_stride = 0;
  std::size_t st_per = 0;
  auto* st_eps_o = std_->add_option("--episodes", st_eps, "episode store (default <out>/cleaned.jsonl)");
  auto* st_out_o = std_->add_option("--out", st_out, "output directory (chunks-*.uact, chunks.json, norm.json)");
  auto* st_h_o = std_->add_option("--H", st_h, "chunk length (default 16)");
  auto* st_stride_o = std_->add_option("--stride", st_stride, "window stride (default 16)");
  auto* st_frame_o = std_->add_option("--translation-frame", st_frame, "body or base (default body)");
  auto* st_per_o = std_->add_option("--per-shard", st_per, "chunks per shard file (default 4096)");
  std_->callback([&] {
    action = [&] {
      ctx.load();
      auto ch = ctx.cfg.chunk;
      std::string out = ctx.cfg.paths.out;
      override(st_out_o, st_out, out);
      std::string eps = out.empty() ? "" : join(out, "cleaned.jsonl");
      override(st_eps_o, st_eps, eps);
      override(st_h_o, st_h, ch.horizon);
      override(st_stride_o, st_stride, ch.stride);
      override(st_per_o, st_per, ch.per_shard);
      if (st_frame_o->count()) ch.translation_frame = uact::parse_translation_frame(st_frame);
      return run_standardize(eps, ch, out);
    };
  });

  // sample
  auto* smp = app.add_subcommand("sample", "draw a stratified sampling plan");
  add_config(smp);
  std::string sm_manifest, sm_out, sm_strategy, sm_mode;
  std::uint64_t sm_seed = 0;
  std::size_t sm_draws = 0, sm_batch = 0;
  double sm_budget = 0;
  auto* sm_man_o = smp->add_option("--manifest", sm_manifest, "corpus manifest (default <out>/manifest.json)");
  auto* sm_out_o = smp->add_option("--out", sm_out, "output directory (plan.json)");
  auto* sm_str_o = smp->add_option("--strategy", sm_strategy,
                                   "trajectory-uniform, task-uniform, embodiment-uniform or dual-weighted (default task-uniform)");
  auto* sm_seed_o = smp->add_option("--seed", sm_seed, "sampling seed");
  auto* sm_draws_o = smp->add_option("--draws", sm_draws, "number of draws (default 1000)");
  auto* sm_budget_o = smp->add_option("--budget", sm_budget, "single-arm share of the budget (default 0.5)");
  auto* sm_mode_o = smp->add_option("--budget-mode", sm_mode, "expectation or per-batch (default expectation)");
  auto* sm_batch_o = smp->add_option("--batch-size", sm_batch, "batch size for per-batch budgeting");
  smp->callback([&] {
    action = [&] {
      ctx.load();
      auto sc = ctx.cfg.sampling;
      std::string out = ctx.cfg.paths.out;
      override(sm_out_o, sm_out, out);
      std::string man = out.empty() ? "" : join(out, "manifest.json");
      override(sm_man_o, sm_manifest, man);
      if (out.empty()) throw uact::Error("missing-output", "no output directory given");
      const std::string plan = join(out, "plan.json");
      if (sm_str_o->count()) sc.strategy = uact::parse_strategy(sm_strategy);
      if (sm_seed_o->count()) sc.seed = sm_seed;
      override(sm_draws_o, sm_draws, sc.draws);
      override(sm_budget_o, sm_budget, sc.single_arm_budget);
      if (sm_mode_o->count()) sc.budget_mode = uact::parse_budget_mode(sm_mode);
      override(sm_batch_o, sm_batch, sc.batch_size);
      const json p = run_sample(man, sc, plan);
      return json{{"report", "sample"}, {"strategy", p.at("strategy")}, {"draws", p.at("draws").size()}};
    };
  });

  // analyze
  auto* ana = app.add_subcommand("analyze", "compute Gini, Lorenz, rank-probability and Coverage@T for a plan");
  add_config(ana);
  std::string an_plan, an_manifest, an_out;
  auto* an_plan_o = ana->add_option("--plan", an_plan, "plan file (default <out>/plan.json)");
  auto* an_man_o = ana->add_option("--manifest", an_manifest, "corpus manifest (default <out>/manifest.json)");
  auto* an_out_o = ana->add_option("--out", an_out, "output directory (metrics.json)");
  ana->callback([&] {
    action = [&] {
      ctx.load();
      std::string out = ctx.cfg.paths.out;
      override(an_out_o, an_out, out);
      std::string plan = out.empty() ? "" : join(out, "plan.json");
      std::string man = out.empty() ? "" : join(out, "manifest.json");
      override(an_plan_o, an_plan, plan);
      override(an_man_o, an_manifest, man);
      if (out.empty()) throw uact::Error("missing-output", "no output directory given");
      const std::string metrics = join(out, "metrics.json");
      const json m = run_analyze(plan, man, metrics);
      return json{{"report", "analyze"}, {"skill_gini", m.at("skill_gini")}, {"total_skills", m.at("total_skills")}};
    };
  });

  // aml-train
  auto* trn = app.add_subcommand("aml-train", "train the clean-action flow model (or the velocity baseline)");
  add_config(trn);
  std::string tr_chunks, tr_norm, tr_toy, tr_out, tr_hidden, tr_paradigm, tr_act, tr_taudist;
  std::uint64_t tr_seed = 0;
  std::size_t tr_steps = 0, tr_batch = 0, tr_count = 2000;
  double tr_lr = 0, tr_taumax = 0, tr_clip = 0;
  int tr_h = 16, tr_cw = 0;
  auto* tr_chunks_o = trn->add_option("--chunks", tr_chunks, "shard sidecar to train on (default <out>/chunks.json)");
  auto* tr_norm_o = trn->add_option("--norm", tr_norm, "normalization stats applied to the chunks (default <out>/norm.json if present)");
  auto* tr_toy_o = trn->add_option("--toy", tr_toy, "train on a toy distribution instead: circle or arc");
  trn->add_option("--toy-count", tr_count, "toy dataset size (default 2000)");
  trn->add_option("--toy-H", tr_h, "chunk length of the arc toy (default 16)");
  auto* tr_out_o = trn->add_option("--out", tr_out, "output directory (model.amlm, trace.json)");
  auto* tr_seed_o = trn->add_option("--seed", tr_seed, "initialization and batch seed");
  auto* tr_steps_o = trn->add_option("--steps", tr_steps, "gradient steps (default 1000)");
  auto* tr_batch_o = trn->add_option("--batch-size", tr_batch, "batch size (default 64)");
  auto* tr_lr_o = trn->add_option("--lr", tr_lr, "learning rate (default 1e-3)");
  auto* tr_taumax_o = trn->add_option("--tau-max", tr_taumax, "largest training tau (default 0.999)");
  auto* tr_taudist_o = trn->add_option("--tau-distribution", tr_taudist, "uniform or beta (default uniform)");
  auto* tr_clip_o = trn->add_option("--grad-clip", tr_clip, "global gradient-norm cap, 0 = off (default 0)");
  auto* tr_hidden_o = trn->add_option("--hidden", tr_hidden, "hidden widths, comma separated (default 64,64)");
  auto* tr_par_o = trn->add_option("--paradigm", tr_paradigm, "a-pred or v-pred (default a-pred)");
  auto* tr_act_o = trn->add_option("--activation", tr_act, "tanh or relu (default tanh)");
  auto* tr_cw_o = trn->add_option("--context-width", tr_cw, "context embedding width (default 4 for chunks, 0 for toys)");
  trn->callback([&] {
    action = [&] {
      ctx.load();
      auto ac = ctx.cfg.aml;
      if (tr_seed_o->count()) {
        ac.train.seed = tr_seed;
        ac.seed_given = true;
      }
      override(tr_steps_o, tr_steps, ac.train.steps);
      override(tr_batch_o, tr_batch, ac.train.batch_size);
      override(tr_lr_o, tr_lr, ac.train.learning_rate);
      override(tr_taumax_o, tr_taumax, ac.train.tau_max);
      override(tr_clip_o, tr_clip, ac.train.grad_clip);
      if (tr_taudist_o->count()) ac.train.tau_distribution = uact::parse_tau_distribution(tr_taudist);
      if (tr_hidden_o->count()) ac.shape.hidden = parse_widths(tr_hidden);
      if (tr_par_o->count()) ac.shape.paradigm = uact::aml::parse_paradigm(tr_paradigm);
      if (tr_act_o->count()) ac.shape.activation = uact::aml::parse_activation(tr_act);
      std::string out = ctx.cfg.paths.out;
      override(tr_out_o, tr_out, out);
      TrainData data;
      if (tr_toy_o->count()) {
        data = toy_training_data(tr_toy, tr_count, tr_h, ac.train.seed);
      } else {
        std::string sidecar = out.empty() ? "" : join(out, "chunks.json");
        override(tr_chunks_o, tr_chunks, sidecar);
        std::string norm = out.empty() || !fs::exists(join(out, "norm.json")) ? "" : join(out, "norm.json");
        override(tr_norm_o, tr_norm, norm);
        data = chunk_training_data(sidecar, norm);
        if (ac.shape.context_width == 0) ac.shape.context_width = 4;
      }
      override(tr_cw_o, tr_cw, ac.shape.context_width);
      return run_aml_train(data, ac, out);
    };
  });

  // aml-sample
  auto* sam = app.add_subcommand("aml-sample", "integrate the flow ODE from noise with a trained model");
  add_config(sam);
  std::string sa_model, sa_out, sa_toy;
  std::uint64_t sa_seed = 0;
  std::size_t sa_count = 16;
  int sa_steps = 0, sa_ctx = 0;
  auto* sa_model_o = sam->add_option("--model", sa_model, "checkpoint (default <out>/model.amlm)");
  auto* sa_out_o = sam->add_option("--out", sa_out, "output directory (samples.json)");
  auto* sa_seed_o = sam->add_option("--seed", sa_seed, "noise seed");
  sam->add_option("--count", sa_count, "number of chunks to draw (default 16)");
  auto* sa_steps_o = sam->add_option("--steps", sa_steps, "denoising steps (default 4)");
  sam->add_option("--context", sa_ctx, "context id (default 0)");
  sam->add_option("--toy", sa_toy, "report the toy manifold error: circle or arc");
  sam->callback([&] {
    action = [&] {
      ctx.load();
      if (!sa_seed_o->count()) throw uact::Error("missing-seed", "aml-sample requires --seed");
      std::string out = ctx.cfg.paths.out;
      override(sa_out_o, sa_out, out);
      std::string model = out.empty() ? "" : join(out, "model.amlm");
      override(sa_model_o, sa_model, model);
      int steps = ctx.cfg.aml.train.denoising_steps;
      override(sa_steps_o, sa_steps, steps);
      if (steps < 1) throw uact::Error("bad-config", "--steps must be >= 1");
      if (out.empty()) throw uact::Error("missing-output", "no output directory given");
      const std::string samples = join(out, "samples.json");
      const json s = run_aml_sample(model, sa_seed, sa_count, steps, sa_ctx, ctx.cfg.aml.train.tau_max, sa_toy, samples);
      json summary{{"report", "aml-sample"}, {"count", sa_count}, {"steps", steps}};
      if (s.contains("mean_radial_error")) summary["mean_radial_error"] = s["mean_radial_error"];
      if (s.contains("mean_arc_error")) summary["mean_arc_error"] = s["mean_arc_error"];
      return summary;
    };
  });

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "compare analytic gradients with central finite differences");
  add_config(gc);
  std::uint64_t gc_seed = 0;
  std::string gc_hidden = "6,5", gc_paradigm = "a-pred", gc_act = "tanh", gc_out;
  int gc_h = 3, gc_d = 2, gc_state = 2, gc_vocab = 3, gc_cw = 2;
  std::size_t gc_batch = 6;
  double gc_step = 1e-5, gc_tol = 1e-5, gc_floor = 1e-7;
  auto* gc_seed_o = gc->add_option("--seed", gc_seed, "model and batch seed");
  gc->add_option("--hidden", gc_hidden, "hidden widths (default 6,5: three weight layers)");
  gc->add_option("--paradigm", gc_paradigm, "a-pred or v-pred (default a-pred)");
  gc->add_option("--activation", gc_act, "tanh or relu (default tanh)");
  gc->add_option("--H", gc_h, "chunk length (default 3)");
  gc->add_option("--D", gc_d, "action width (default 2)");
  gc->add_option("--state-dim", gc_state, "state width (default 2)");
  gc->add_option("--context-vocab", gc_vocab, "context ids (default 3)");
  gc->add_option("--context-width", gc_cw, "context embedding width (default 2)");
  gc->add_option("--batch", gc_batch, "batch size (default 6)");
  gc->add_option("--step", gc_step, "finite-difference step (default 1e-5)");
  gc->add_option("--tolerance", gc_tol, "relative tolerance (default 1e-5)");
  gc->add_option("--floor", gc_floor, "denominator floor of the relative error (default 1e-7)");
  gc->add_option("--out", gc_out, "optional report file");
  gc->callback([&] {
    action = [&] {
      ctx.load();
      std::uint64_t seed = ctx.cfg.aml.train.seed;
      if (gc_seed_o->count()) seed = gc_seed;
      else if (!ctx.cfg.aml.seed_given) throw uact::Error("missing-seed", "gradcheck requires --seed");
      uact::aml::ModelShape s;
      s.horizon = gc_h;
      s.action_dim = gc_d;
      s.state_dim = gc_state;
      s.context_vocab = gc_vocab;
      s.context_width = gc_cw;
      s.hidden = parse_widths(gc_hidden);
      s.paradigm = uact::aml::parse_paradigm(gc_paradigm);
      s.activation = uact::aml::parse_activation(gc_act);
      auto m = uact::aml::make_model(s, seed);
      // Perturb biases away from zero so every parameter carries gradient.
      const uact::CounterRng prng(seed, 0x6763u);
      for (std::size_t i = 0; i < m.params.size(); ++i) m.params[i] += 0.1 * prng.normal(i);
      std::vector<uact::aml::FlowSample> batch;
      std::vector<uact::aml::Conditioning> c;
      const uact::CounterRng rng(seed, 0x6762u);
      for (std::size_t b = 0; b < gc_batch; ++b) {
        const auto a = uact::aml::normal_matrix(rng, b, gc_h, gc_d);
        const double tau = 0.9 * rng.uniform(b, 1);
        batch.push_back(uact::aml::make_flow_sample(a, seed * 1000003ull + b, tau));
        uact::aml::Conditioning k;
        k.context_id = static_cast<int>(rng.below(static_cast<std::uint64_t>(gc_vocab), b, 2));
        k.state = Eigen::VectorXd(gc_state);
        for (int q = 0; q < gc_state; ++q) k.state[q] = rng.normal(b, 3 + static_cast<std::uint32_t>(q));
        c.push_back(std::move(k));
      }
      const auto r = uact::aml::gradient_check(m, batch, c, gc_step, gc_tol, gc_floor);
      json rep{{"report", "gradcheck"},
               {"version", 1},
               {"parameters", r.parameters},
               {"failures", r.failures},
               {"max_relative_error", r.max_relative_error},
               {"worst_index", r.worst_index},
               {"tolerance", gc_tol},
               {"step", gc_step},
               {"floor", gc_floor}};
      if (!gc_out.empty()) uact::write_json_file(gc_out, rep);
      if (r.failures > 0) {
        std::cout << rep.dump() << "\n";
        throw uact::NumericalError(std::to_string(r.failures) + " parameters exceed the gradient tolerance", -1);
      }
      return rep;
    };
  });

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "run gen? -> ingest -> clean -> standardize -> sample -> analyze -> aml-train -> aml-sample from one config");
  std::string pipe_out;
  pipe->add_option("--config", ctx.config_path, "pipeline config file (JSON)")->required();
  auto* pipe_out_o = pipe->add_option("--out", pipe_out, "output directory (overrides paths.out)");
  pipe->footer(kPrecedence);
  pipe->callback([&] {
    action = [&] {
      ctx.load();
      auto& c = ctx.cfg;
      override(pipe_out_o, pipe_out, c.paths.out);
      uact::validate_pipeline_config(c);
      if (!c.sampling.seed) throw uact::Error("missing-seed", "pipeline requires sampling.seed");
      if (c.aml.train.steps > 0 && !c.aml.seed_given) throw uact::Error("missing-seed", "pipeline requires train.seed");
      ensure_dir(c.paths.out);
      json summary{{"report", "pipeline"}, {"version", 1}};
      std::string raw = c.paths.raw, schemas = c.paths.schemas;
      if (raw.empty()) {
        if (!c.synthetic_seed_given) throw uact::Error("missing-seed", "no paths.raw given and no synthetic.seed to generate one");
        const json d = run_gen(c.synthetic, c.paths.out);
        summary["gen"] = {{"episodes", d.at("episodes")}, {"defects", d.at("defects").size()}};
        raw = join(c.paths.out, "raw.jsonl");
        schemas = join(c.paths.out, "schemas.jsonl");
      }
      summary["ingest"] = run_ingest(raw, schemas, c.paths.out);
      summary["ingest"].erase("failures");
      summary["clean"] = run_clean(join(c.paths.out, "ingested.jsonl"), schemas, c.clean, c.paths.out);
      summary["clean"].erase("rejections");
      summary["standardize"] = run_standardize(join(c.paths.out, "cleaned.jsonl"), c.chunk, c.paths.out);
      const json plan = run_sample(join(c.paths.out, "manifest.json"), c.sampling, join(c.paths.out, "plan.json"));
      summary["sample"] = {{"strategy", plan.at("strategy")}, {"draws", plan.at("draws").size()}};
      const json metrics = run_analyze(join(c.paths.out, "plan.json"), join(c.paths.out, "manifest.json"),
                                       join(c.paths.out, "metrics.json"));
      summary["analyze"] = {{"skill_gini", metrics.at("skill_gini")}, {"total_skills", metrics.at("total_skills")}};
      if (c.aml.train.steps > 0) {
        auto ac = c.aml;
        if (ac.shape.context_width == 0) ac.shape.context_width = 4;
        const std::string norm = fs::exists(join(c.paths.out, "norm.json")) ? join(c.paths.out, "norm.json") : "";
        summary["aml_train"] = run_aml_train(chunk_training_data(join(c.paths.out, "chunks.json"), norm), ac, c.paths.out);
        const json s = run_aml_sample(join(c.paths.out, "model.amlm"), ac.train.seed, 8, ac.train.denoising_steps, 0,
                                      ac.train.tau_max, "", join(c.paths.out, "samples.json"));
        summary["aml_sample"] = {{"count", s.at("count")}, {"steps", s.at("steps")}};
      }
      uact::write_json_file(join(c.paths.out, "pipeline_report.json"), summary);
      return summary;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const json summary = action();
    std::cout << summary.dump() << "\n";
    return 0;
  } catch (const uact::IoError& e) {
    std::cerr << "uact: I/O error: " << e.what() << "\n";
    return 2;
  } catch (const uact::NumericalError& e) {
    std::cerr << "uact: numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const uact::Error& e) {
    std::cerr << "uact: " << e.code() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "uact: error: " << e.what() << "\n";
    return 1;
  }
}
