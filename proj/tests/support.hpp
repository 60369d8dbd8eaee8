#pragma once

// Helpers shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "lsnn/loss.hpp"

namespace lsnn::test_support {

inline MlpParameters random_params(const std::vector<int>& dims, std::uint64_t seed, double scale = 1.0) {
  MlpParameters p = MlpParameters::zeros(dims);
  std::mt19937_64 rng(seed);
  Vector flat = p.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat[i] = uniform(rng, -scale, scale);
  p.assign(flat);
  return p;
}

// ReLU on/off pattern of every hidden unit over a set of nodes.
inline std::vector<bool> activation_pattern(const MlpParameters& p, const Matrix& nodes) {
  std::vector<bool> on;
  Matrix a = nodes;
  for (int k = 0; k + 1 < p.layers(); ++k) {
    Matrix pre = (p.weights[k] * a).colwise() - p.biases[k];
    for (Eigen::Index i = 0; i < pre.size(); ++i) on.push_back(pre.data()[i] > 0.0);
    a = pre.cwiseMax(0.0);
  }
  return on;
}

struct GradientCheck {
  double worst = 0.0;  // max relative component error
  int checked = 0;
  int crossed = 0;  // components skipped because every step crossed a kink
};

// Reverse-mode gradient against central differences, one component at a
// time. With the activation pattern fixed the loss is a polynomial of degree
// at most 6 in any single parameter, so a five-point stencil with a moderate
// step is accurate and keeps cancellation error small next to tiny
// components. The step halves from 1e-3 until no node changes pattern.
inline GradientCheck check_gradient(const BlockLoss& loss, const MlpParameters& p) {
  MlpParameters g = MlpParameters::zeros(p.layer_dims);
  loss.value_and_gradient(p, g);
  const Vector grad = g.flatten();
  const Vector theta = p.flatten();
  const auto pattern = activation_pattern(p, loss.nodes());
  GradientCheck out;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    double fd = 0.0;
    bool kink = true;
    for (double step = 1e-3; kink && step >= 1e-5; step *= 0.5) {
      double f[4];
      kink = false;
      const double offsets[4] = {-2.0, -1.0, 1.0, 2.0};
      for (int k = 0; k < 4 && !kink; ++k) {
        MlpParameters q = p;
        Vector th = theta;
        th[i] += offsets[k] * step;
        q.assign(th);
        kink = activation_pattern(q, loss.nodes()) != pattern;
        f[k] = loss.value(q);
      }
      if (!kink) fd = (8.0 * (f[2] - f[1]) - (f[3] - f[0])) / (12.0 * step);
    }
    if (kink) {
      ++out.crossed;
      continue;
    }
    const double scale = std::max(std::abs(fd), std::abs(grad[i]));
    // Units that are dead on every node have identically zero derivatives.
    if (scale == 0.0) continue;
    ++out.checked;
    out.worst = std::max(out.worst, std::abs(fd - grad[i]) / scale);
  }
  return out;
}

}  // namespace lsnn::test_support
