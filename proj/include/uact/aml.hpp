#pragma once

// Flow matching with clean-action prediction.
//
// Noisy chunk:    A_tau = tau * A + (1 - tau) * eps,   eps ~ N(0, I)
// Network:        A_hat = V(A_tau, tau, context, state)
// Velocities:     v_hat = (A_hat - A_tau) / (1 - tau),  v = (A - A_tau) / (1 - tau) = A - eps
// Loss:           mean_batch ||v_hat - v||^2  ==  mean_batch w(tau) ||A_hat - A||^2,  w = 1 / (1 - tau)^2
// Sampling:       A_0 ~ N(0, I);  A_{tau + dt} = A_tau + dt * v_hat  on a uniform tau grid.
//
// The velocity-prediction baseline shares everything except that the
// network output is v_hat itself.
//
// V is a small MLP whose parameters live in one flat vector; gradients are
// derived by hand (no autodiff).

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "uact/counter_rng.hpp"
#include "uact/error.hpp"

namespace uact::aml {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation : std::uint8_t { Tanh = 0, Relu = 1 };
enum class Paradigm : std::uint8_t { ActionPrediction = 0, VelocityPrediction = 1 };

inline const char* paradigm_name(Paradigm p) { return p == Paradigm::ActionPrediction ? "a-pred" : "v-pred"; }

inline Paradigm parse_paradigm(std::string_view s) {
  if (s == "a-pred" || s == "action") return Paradigm::ActionPrediction;
  if (s == "v-pred" || s == "velocity") return Paradigm::VelocityPrediction;
  throw Error("unknown-paradigm", "unknown prediction paradigm '" + std::string(s) + "'");
}

inline Activation parse_activation(std::string_view s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  throw Error("unknown-activation", "unknown activation '" + std::string(s) + "'");
}

struct ModelShape {
  int horizon = 16;        // H
  int action_dim = 14;     // D
  int state_dim = 0;       // width of the raw state q
  int context_vocab = 1;   // number of discrete context ids
  int context_width = 0;   // learned embedding width per id
  int time_features = 4;   // tau, then sin/cos pairs at increasing frequency
  std::vector<int> hidden{64, 64};
  Activation activation = Activation::Tanh;
  Paradigm paradigm = Paradigm::ActionPrediction;

  int chunk_size() const { return horizon * action_dim; }
  int input_dim() const { return chunk_size() + time_features + context_width + state_dim; }
  bool operator==(const ModelShape&) const = default;
};

// Flat parameter layout: [embedding (width x vocab)] then per layer
// [W (out x in), b (out)], all column-major.
struct AmlModel {
  ModelShape shape;
  std::vector<double> params;

  std::vector<int> layer_dims() const {
    std::vector<int> dims{shape.input_dim()};
    for (int h : shape.hidden) dims.push_back(h);
    dims.push_back(shape.chunk_size());
    return dims;
  }
  std::size_t embedding_size() const {
    return static_cast<std::size_t>(shape.context_width) * static_cast<std::size_t>(shape.context_vocab);
  }
  std::size_t parameter_count() const {
    const auto dims = layer_dims();
    std::size_t n = embedding_size();
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      n += static_cast<std::size_t>(dims[l + 1]) * static_cast<std::size_t>(dims[l] + 1);
    }
    return n;
  }
  bool operator==(const AmlModel&) const = default;
};

namespace detail {

struct LayerView {
  std::size_t w_offset;
  std::size_t b_offset;
  int in;
  int out;
};

inline std::vector<LayerView> layer_views(const AmlModel& m) {
  const auto dims = m.layer_dims();
  std::vector<LayerView> v;
  std::size_t off = m.embedding_size();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l], out = dims[l + 1];
    v.push_back({off, off + static_cast<std::size_t>(in) * out, in, out});
    off += static_cast<std::size_t>(in + 1) * out;
  }
  return v;
}

inline Eigen::Map<const Matrix> weight(const std::vector<double>& p, const LayerView& l) {
  return {p.data() + l.w_offset, l.out, l.in};
}
inline Eigen::Map<const Vector> bias(const std::vector<double>& p, const LayerView& l) {
  return {p.data() + l.b_offset, l.out};
}

}  // namespace detail

inline void validate_shape(const ModelShape& s) {
  if (s.horizon < 1 || s.action_dim < 1 || s.state_dim < 0 || s.context_vocab < 1 || s.context_width < 0 ||
      s.time_features < 1 || s.hidden.empty()) {
    throw Error("bad-model-shape", "invalid model shape");
  }
  for (int h : s.hidden) {
    if (h < 1) throw Error("bad-model-shape", "hidden widths must be positive");
  }
}

// Weights ~ N(0, 1/fan_in), biases 0, embeddings ~ N(0, 1).
inline AmlModel make_model(const ModelShape& shape, std::uint64_t seed) {
  validate_shape(shape);
  AmlModel m;
  m.shape = shape;
  m.params.assign(m.parameter_count(), 0.0);
  const CounterRng rng(seed, 0x41u);
  for (std::size_t i = 0; i < m.embedding_size(); ++i) m.params[i] = rng.normal(i);
  for (const auto& l : detail::layer_views(m)) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(l.in));
    for (std::size_t i = 0; i < static_cast<std::size_t>(l.in) * l.out; ++i) {
      m.params[l.w_offset + i] = scale * rng.normal(l.w_offset + i);
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Flow samples

struct FlowSample {
  Matrix clean;  // A, H x D
  Matrix noise;  // eps
  double tau = 0.0;
  Matrix noisy;  // A_tau
};

inline Matrix interpolate(const Matrix& clean, const Matrix& noise, double tau) {
  return tau * clean + (1.0 - tau) * noise;
}

inline FlowSample make_flow_sample(const Matrix& clean, const Matrix& noise, double tau, double tau_max = 0.999) {
  if (!(tau >= 0.0 && tau <= tau_max)) throw Error("tau-out-of-range", "tau must lie in [0, tau_max]");
  if (clean.rows() != noise.rows() || clean.cols() != noise.cols()) {
    throw Error("dimension-mismatch", "clean chunk and noise differ in shape");
  }
  return {clean, noise, tau, interpolate(clean, noise, tau)};
}

// Gaussian noise of the given shape from one counter-based stream.
inline Matrix normal_matrix(const CounterRng& rng, std::uint64_t index, int rows, int cols) {
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = rng.normal(index, 16u + static_cast<std::uint32_t>(c * rows + r));
  }
  return m;
}

inline FlowSample make_flow_sample(const Matrix& clean, std::uint64_t seed, double tau, double tau_max = 0.999) {
  return make_flow_sample(clean, normal_matrix(CounterRng(seed, 0x42u), 0, static_cast<int>(clean.rows()),
                                               static_cast<int>(clean.cols())),
                          tau, tau_max);
}

inline Matrix velocity_target(const FlowSample& s) {
  if (!(s.tau < 1.0)) throw Error("tau-out-of-range", "velocity undefined at tau = 1");
  return (s.clean - s.noisy) / (1.0 - s.tau);
}

inline double loss_weight(double tau) { return 1.0 / ((1.0 - tau) * (1.0 - tau)); }

// ---------------------------------------------------------------------------
// Forward / backward

struct Conditioning {
  int context_id = 0;
  Vector state;  // empty when the model has state_dim 0
};

inline void time_features(double tau, int count, double* out) {
  out[0] = tau;
  for (int k = 1; k < count; ++k) {
    const double freq = std::numbers::pi * static_cast<double>((k + 1) / 2);
    out[k] = (k % 2 == 1) ? std::sin(freq * tau) : std::cos(freq * tau);
  }
}

// Column b of the returned matrix is the network input for sample b.
inline Matrix assemble_inputs(const AmlModel& m, const std::vector<const Matrix*>& noisy,
                              const std::vector<double>& taus, const std::vector<Conditioning>& ctx) {
  const auto& s = m.shape;
  const int batch = static_cast<int>(noisy.size());
  if (static_cast<int>(taus.size()) != batch || static_cast<int>(ctx.size()) != batch) {
    throw Error("dimension-mismatch", "batch components differ in length");
  }
  Matrix x(s.input_dim(), batch);
  for (int b = 0; b < batch; ++b) {
    const Matrix& a = *noisy[b];
    if (a.rows() != s.horizon || a.cols() != s.action_dim) {
      throw Error("dimension-mismatch", "noisy chunk shape does not match the model");
    }
    int row = 0;
    for (int h = 0; h < s.horizon; ++h) {
      for (int d = 0; d < s.action_dim; ++d) x(row++, b) = a(h, d);
    }
    time_features(taus[b], s.time_features, &x(row, b));
    row += s.time_features;
    const int id = ctx[b].context_id;
    if (id < 0 || id >= s.context_vocab) throw Error("dimension-mismatch", "context id outside vocabulary");
    for (int k = 0; k < s.context_width; ++k) x(row++, b) = m.params[static_cast<std::size_t>(id) * s.context_width + k];
    if (ctx[b].state.size() != s.state_dim) throw Error("dimension-mismatch", "state width does not match the model");
    for (int k = 0; k < s.state_dim; ++k) x(row++, b) = ctx[b].state[k];
  }
  return x;
}

struct ForwardCache {
  std::vector<Matrix> activations;  // activations[0] = input, last = output
};

inline Matrix activate(const Matrix& z, Activation act) {
  return act == Activation::Tanh ? Matrix(z.array().tanh()) : Matrix(z.array().max(0.0));
}

inline Matrix forward(const AmlModel& m, const Matrix& input, ForwardCache* cache = nullptr) {
  const auto views = detail::layer_views(m);
  Matrix h = input;
  if (cache) cache->activations = {h};
  for (std::size_t l = 0; l < views.size(); ++l) {
    Matrix z = detail::weight(m.params, views[l]) * h;
    z.colwise() += detail::bias(m.params, views[l]);
    h = (l + 1 == views.size()) ? z : activate(z, m.shape.activation);
    if (cache) cache->activations.push_back(h);
  }
  return h;
}

// Reverse pass: accumulates d(loss)/d(params) into `grad` given
// d(loss)/d(output) for every column, including the embedding rows.
inline void backward(const AmlModel& m, const ForwardCache& cache, const Matrix& output_grad,
                     const std::vector<Conditioning>& ctx, std::vector<double>& grad) {
  const auto views = detail::layer_views(m);
  grad.assign(m.params.size(), 0.0);
  Matrix delta = output_grad;
  for (std::size_t li = views.size(); li-- > 0;) {
    const auto& l = views[li];
    const Matrix& in = cache.activations[li];
    Eigen::Map<Matrix>(grad.data() + l.w_offset, l.out, l.in) += delta * in.transpose();
    Eigen::Map<Vector>(grad.data() + l.b_offset, l.out) += delta.rowwise().sum();
    Matrix upstream = detail::weight(m.params, l).transpose() * delta;
    if (li > 0) {
      const Matrix& a = cache.activations[li];
      if (m.shape.activation == Activation::Tanh) {
        upstream.array() *= 1.0 - a.array().square();
      } else {
        upstream.array() *= (a.array() > 0.0).cast<double>();
      }
    }
    delta = std::move(upstream);
  }
  const auto& s = m.shape;
  const int offset = s.chunk_size() + s.time_features;
  for (int b = 0; b < static_cast<int>(ctx.size()); ++b) {
    const std::size_t base = static_cast<std::size_t>(ctx[b].context_id) * s.context_width;
    for (int k = 0; k < s.context_width; ++k) grad[base + k] += delta(offset + k, b);
  }
}

inline Matrix column_to_chunk(const Matrix& out, int col, int horizon, int action_dim) {
  Matrix c(horizon, action_dim);
  int row = 0;
  for (int h = 0; h < horizon; ++h) {
    for (int d = 0; d < action_dim; ++d) c(h, d) = out(row++, col);
  }
  return c;
}

struct Prediction {
  Matrix clean;     // A_hat
  Matrix velocity;  // v_hat
};

// Both paradigms expose A_hat and v_hat; they differ in which one the
// network emits and which one is derived.
inline Prediction prediction_from_output(Paradigm p, const Matrix& net, const Matrix& noisy, double tau) {
  if (!(tau < 1.0)) throw Error("tau-out-of-range", "velocity undefined at tau = 1");
  if (p == Paradigm::ActionPrediction) return {net, (net - noisy) / (1.0 - tau)};
  return {noisy + (1.0 - tau) * net, net};
}

inline Prediction predict_velocity(const AmlModel& m, const FlowSample& s, const Conditioning& ctx) {
  const Matrix x = assemble_inputs(m, {&s.noisy}, {s.tau}, {ctx});
  const Matrix out = forward(m, x);
  return prediction_from_output(m.shape.paradigm, column_to_chunk(out, 0, m.shape.horizon, m.shape.action_dim),
                                s.noisy, s.tau);
}

struct LossResult {
  double loss = 0.0;           // mean ||v_hat - v||^2
  double action_mse = 0.0;     // mean ||A_hat - A||^2, unweighted
  std::vector<double> per_sample_velocity;  // ||v_hat - v||^2
  std::vector<double> per_sample_action;    // ||A_hat - A||^2
  std::vector<double> gradient;
};

inline LossResult loss(const AmlModel& m, const std::vector<FlowSample>& batch, const std::vector<Conditioning>& ctx,
                       bool with_gradient = true) {
  if (batch.empty()) throw Error("empty-batch", "loss needs at least one sample");
  std::vector<const Matrix*> noisy;
  std::vector<double> taus;
  for (const auto& s : batch) {
    if (!(s.tau < 1.0)) throw Error("tau-out-of-range", "tau must be < 1");
    noisy.push_back(&s.noisy);
    taus.push_back(s.tau);
  }
  ForwardCache cache;
  const Matrix x = assemble_inputs(m, noisy, taus, ctx);
  const Matrix out = forward(m, x, with_gradient ? &cache : nullptr);
  const auto& sh = m.shape;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  LossResult r;
  Matrix out_grad(out.rows(), out.cols());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& s = batch[b];
    const Matrix net = column_to_chunk(out, static_cast<int>(b), sh.horizon, sh.action_dim);
    const Prediction p = prediction_from_output(sh.paradigm, net, s.noisy, s.tau);
    const Matrix ev = p.velocity - velocity_target(s);
    const double lv = ev.squaredNorm();
    const double la = (p.clean - s.clean).squaredNorm();
    r.per_sample_velocity.push_back(lv);
    r.per_sample_action.push_back(la);
    r.loss += lv * inv_b;
    r.action_mse += la * inv_b;
    // d loss / d net: a-pred carries the extra 1/(1 - tau) of v_hat = (A_hat - A_tau)/(1 - tau).
    const double scale = 2.0 * inv_b / (sh.paradigm == Paradigm::ActionPrediction ? (1.0 - s.tau) : 1.0);
    int row = 0;
    for (int h = 0; h < sh.horizon; ++h) {
      for (int d = 0; d < sh.action_dim; ++d) out_grad(row++, static_cast<Eigen::Index>(b)) = scale * ev(h, d);
    }
  }
  if (with_gradient) backward(m, cache, out_grad, ctx, r.gradient);
  return r;
}

// ---------------------------------------------------------------------------
// Gradient check

struct GradCheckResult {
  std::size_t parameters = 0;
  std::size_t failures = 0;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
};

// Central differences with step h; relative error |a - n| / max(|a|, |n|, floor).
inline GradCheckResult gradient_check(const AmlModel& m, const std::vector<FlowSample>& batch,
                                      const std::vector<Conditioning>& ctx, double step = 1e-5,
                                      double tolerance = 1e-5, double floor = 1e-7) {
  const auto analytic = loss(m, batch, ctx).gradient;
  AmlModel probe = m;
  GradCheckResult res;
  res.parameters = m.params.size();
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    const double orig = probe.params[i];
    probe.params[i] = orig + step;
    const double up = loss(probe, batch, ctx, false).loss;
    probe.params[i] = orig - step;
    const double down = loss(probe, batch, ctx, false).loss;
    probe.params[i] = orig;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    const double rel = std::abs(analytic[i] - numeric) / denom;
    if (rel > res.max_relative_error) {
      res.max_relative_error = rel;
      res.worst_index = i;
    }
    if (rel > tolerance) ++res.failures;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Training

enum class TauDistribution : std::uint8_t { Uniform, Beta };

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t steps = 1000;
  double tau_max = 0.999;
  TauDistribution tau_distribution = TauDistribution::Uniform;
  double beta_a = 1.5;  // Beta(a, b) on [0, 1], rescaled onto [0, tau_max]
  double beta_b = 1.0;
  std::uint64_t seed = 0;
  int denoising_steps = 4;
  // Global gradient-norm cap applied before each step; 0 disables it.
  double grad_clip = 0.0;

  void validate() const {
    if (!(tau_max > 0.0 && tau_max < 1.0)) throw Error("bad-config", "tau_max must lie in (0, 1)");
    if (batch_size == 0 || denoising_steps < 1) throw Error("bad-config", "batch size and denoising steps must be positive");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw Error("bad-config", "learning rate must be >= 0");
    if (!(grad_clip >= 0.0)) throw Error("bad-config", "grad_clip must be >= 0");
    if (tau_distribution == TauDistribution::Beta && !(beta_a > 0.0 && beta_b > 0.0)) {
      throw Error("bad-config", "beta parameters must be positive");
    }
  }
};

struct TrainingItem {
  Matrix chunk;  // H x D
  Conditioning context;
};

struct TrainTrace {
  std::vector<double> loss;          // velocity-space objective, every step
  std::vector<double> action_mse;    // unweighted ||A_hat - A||^2
};

namespace detail {

// Marsaglia-Tsang gamma sampler on a counter stream; `lane` advances per
// attempt so the draw stays a pure function of (seed, index).
inline double gamma_sample(const CounterRng& rng, std::uint64_t index, double shape, std::uint32_t lane_base) {
  if (shape < 1.0) {
    const double u = 1.0 - rng.uniform(index, lane_base + 999u);
    return gamma_sample(rng, index, shape + 1.0, lane_base) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (std::uint32_t attempt = 0;; attempt += 2) {
    const double x = rng.normal(index, lane_base + attempt);
    const double v = (1.0 + c * x) * (1.0 + c * x) * (1.0 + c * x);
    if (v <= 0.0) continue;
    const double u = 1.0 - rng.uniform(index, lane_base + attempt + 1);
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

}  // namespace detail

inline double sample_tau(const TrainConfig& cfg, const CounterRng& rng, std::uint64_t index) {
  if (cfg.tau_distribution == TauDistribution::Uniform) return cfg.tau_max * rng.uniform(index, 1);
  const double x = detail::gamma_sample(rng, index, cfg.beta_a, 100000u);
  const double y = detail::gamma_sample(rng, index, cfg.beta_b, 200000u);
  return cfg.tau_max * (x / (x + y));
}

// The batch for `step` depends only on (seed, step, slot).
inline std::vector<FlowSample> training_batch(const std::vector<TrainingItem>& data, const TrainConfig& cfg,
                                              std::size_t step, std::vector<Conditioning>& ctx) {
  const CounterRng rng(cfg.seed, 0x54u);
  std::vector<FlowSample> batch;
  batch.reserve(cfg.batch_size);
  ctx.clear();
  for (std::size_t slot = 0; slot < cfg.batch_size; ++slot) {
    const std::uint64_t key = static_cast<std::uint64_t>(step) * cfg.batch_size + slot;
    const auto& item = data[rng.below(data.size(), key, 0)];
    const double tau = sample_tau(cfg, rng, key);
    const Matrix noise = normal_matrix(rng, key, static_cast<int>(item.chunk.rows()), static_cast<int>(item.chunk.cols()));
    batch.push_back(make_flow_sample(item.chunk, noise, tau, cfg.tau_max));
    ctx.push_back(item.context);
  }
  return batch;
}

struct TrainResult {
  AmlModel model;
  TrainTrace trace;
};

// Plain gradient descent with a fixed step. Throws NumericalError naming the
// step when the loss stops being finite.
inline TrainResult train(AmlModel model, const std::vector<TrainingItem>& data, const TrainConfig& cfg,
                         const std::function<void(std::size_t, double)>& on_step = {}) {
  cfg.validate();
  if (data.empty()) throw Error("empty-dataset", "training needs at least one chunk");
  TrainResult res;
  std::vector<Conditioning> ctx;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const auto batch = training_batch(data, cfg, step, ctx);
    const auto r = loss(model, batch, ctx);
    if (!std::isfinite(r.loss)) {
      throw NumericalError("loss diverged at step " + std::to_string(step), static_cast<long>(step));
    }
    res.trace.loss.push_back(r.loss);
    res.trace.action_mse.push_back(r.action_mse);
    if (cfg.learning_rate != 0.0) {
      double scale = cfg.learning_rate;
      if (cfg.grad_clip > 0.0) {
        double sq = 0.0;
        for (double g : r.gradient) sq += g * g;
        const double norm = std::sqrt(sq);
        if (norm > cfg.grad_clip) scale *= cfg.grad_clip / norm;
      }
      for (std::size_t i = 0; i < model.params.size(); ++i) model.params[i] -= scale * r.gradient[i];
    }
    if (on_step) on_step(step, r.loss);
  }
  res.model = std::move(model);
  return res;
}

// ---------------------------------------------------------------------------
// Sampling

// Euler integration from noise. `net(noisy_batch, taus)` returns the network
// output per sample (A_hat for a-pred, v_hat for v-pred). tau runs over
// 0, 1/steps, ..., (steps-1)/steps; the velocity formula uses min(tau, tau_max).
template <typename Net>
std::vector<Matrix> euler_integrate(Net&& net, std::vector<Matrix> state, int steps, Paradigm paradigm,
                                    double tau_max = 0.999, std::vector<std::vector<Matrix>>* path = nullptr) {
  if (steps < 1) throw Error("bad-config", "need at least one denoising step");
  const double dt = 1.0 / static_cast<double>(steps);
  if (path) path->assign(1, state);
  for (int i = 0; i < steps; ++i) {
    const double tau = std::min(static_cast<double>(i) * dt, tau_max);
    const std::vector<Matrix> out = net(state, tau);
    for (std::size_t b = 0; b < state.size(); ++b) {
      const Prediction p = prediction_from_output(paradigm, out[b], state[b], tau);
      state[b] += dt * p.velocity;
    }
    if (path) path->push_back(state);
  }
  return state;
}

inline std::vector<Matrix> model_net(const AmlModel& m, const std::vector<Matrix>& noisy, double tau,
                                     const std::vector<Conditioning>& ctx) {
  std::vector<const Matrix*> ptrs;
  for (const auto& a : noisy) ptrs.push_back(&a);
  const Matrix x = assemble_inputs(m, ptrs, std::vector<double>(noisy.size(), tau), ctx);
  const Matrix out = forward(m, x);
  std::vector<Matrix> res;
  for (int b = 0; b < static_cast<int>(noisy.size()); ++b) {
    res.push_back(column_to_chunk(out, b, m.shape.horizon, m.shape.action_dim));
  }
  return res;
}

inline Matrix initial_noise(const ModelShape& s, std::uint64_t seed, std::uint64_t sample_index) {
  return normal_matrix(CounterRng(seed, 0x53u), sample_index, s.horizon, s.action_dim);
}

// Draws `ctx.size()` chunks; sample b starts from noise keyed by (seed, b).
inline std::vector<Matrix> euler_sample(const AmlModel& m, const std::vector<Conditioning>& ctx, int steps,
                                        std::uint64_t seed, double tau_max = 0.999) {
  std::vector<Matrix> start;
  for (std::size_t b = 0; b < ctx.size(); ++b) start.push_back(initial_noise(m.shape, seed, b));
  return euler_integrate([&](const std::vector<Matrix>& a, double tau) { return model_net(m, a, tau, ctx); },
                         std::move(start), steps, m.shape.paradigm, tau_max);
}

inline Matrix euler_sample(const AmlModel& m, const Conditioning& ctx, int steps, std::uint64_t seed,
                           double tau_max = 0.999) {
  return euler_sample(m, std::vector<Conditioning>{ctx}, steps, seed, tau_max).front();
}

}  // namespace uact::aml
