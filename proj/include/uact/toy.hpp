#pragma once

// Toy action distributions for exercising the flow engine.
//
// circle: H = 1, D = 2, points on the unit circle.
// arc:    H steps, D = 2, a_t = (cos(phi + pi t / H), sin(phi + pi t / H))
//         with a uniform latent phase phi; a 1-D manifold inside R^(2H).

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "uact/aml.hpp"
#include "uact/counter_rng.hpp"
#include "uact/error.hpp"

namespace uact::aml::toy {

inline Matrix arc_chunk(double phi, int horizon) {
  Matrix c(horizon, 2);
  for (int t = 0; t < horizon; ++t) {
    const double a = phi + std::numbers::pi * t / static_cast<double>(horizon);
    c(t, 0) = std::cos(a);
    c(t, 1) = std::sin(a);
  }
  return c;
}

// With horizon 1 the arc is the unit circle.
inline std::vector<TrainingItem> arc_dataset(std::size_t count, int horizon, std::uint64_t seed) {
  const CounterRng rng(seed, 0x7431u);
  std::vector<TrainingItem> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back({arc_chunk(2.0 * std::numbers::pi * rng.uniform(i), horizon), {}});
  }
  return out;
}

inline std::vector<TrainingItem> circle_dataset(std::size_t count, std::uint64_t seed) {
  return arc_dataset(count, 1, seed);
}

inline double mean_radial_error(const std::vector<Matrix>& samples) {
  if (samples.empty()) throw Error("empty-batch", "no samples");
  double s = 0.0;
  for (const auto& m : samples) s += std::abs(m.row(0).norm() - 1.0);
  return s / static_cast<double>(samples.size());
}

// RMS per-step distance to the closest arc chunk: grid search over phi,
// then golden-section refinement around the best cell.
inline double arc_distance(const Matrix& sample, int grid = 720) {
  const int h = static_cast<int>(sample.rows());
  const auto dist = [&](double phi) { return (sample - arc_chunk(phi, h)).squaredNorm() / h; };
  const double cell = 2.0 * std::numbers::pi / grid;
  double best = std::numeric_limits<double>::infinity(), best_phi = 0.0;
  for (int k = 0; k < grid; ++k) {
    const double d = dist(k * cell);
    if (d < best) {
      best = d;
      best_phi = k * cell;
    }
  }
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = best_phi - cell, b = best_phi + cell;
  double c = b - g * (b - a), d = a + g * (b - a);
  for (int it = 0; it < 60; ++it) {
    if (dist(c) < dist(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  return std::sqrt(std::min(best, dist(0.5 * (a + b))));
}

inline double mean_arc_error(const std::vector<Matrix>& samples) {
  if (samples.empty()) throw Error("empty-batch", "no samples");
  double s = 0.0;
  for (const auto& m : samples) s += arc_distance(m);
  return s / static_cast<double>(samples.size());
}

// E[A | A_tau] under the empirical training distribution. This is what a
// perfectly fitted clean-action predictor converges to, so sampling with it
// bounds what any trained model can reach at a given step count.
inline Matrix posterior_mean(const std::vector<TrainingItem>& data, const Matrix& noisy, double tau) {
  const double var = 2.0 * (1.0 - tau) * (1.0 - tau);
  std::vector<double> logw(data.size());
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < data.size(); ++i) {
    logw[i] = -(noisy - tau * data[i].chunk).squaredNorm() / var;
    hi = std::max(hi, logw[i]);
  }
  Matrix acc = Matrix::Zero(noisy.rows(), noisy.cols());
  double z = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double w = std::exp(logw[i] - hi);
    acc += w * data[i].chunk;
    z += w;
  }
  return acc / z;
}

}  // namespace uact::aml::toy
