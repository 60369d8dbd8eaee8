#pragma once

// Fully connected ReLU network
//   N(z) = w^(l) . (N^(l-1) o ... o N^(1))(z) - b^(l),  N^(k)(y) = max(0, W^(k) y - b^(k)),
// with batched forward/reverse passes used by the loss assembly.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lsnn/error.hpp"
#include "lsnn/geometry.hpp"
#include "lsnn/rng.hpp"

namespace lsnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

inline void validate_layer_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) throw InvalidArgument("network: need at least input and output layer");
  for (int n : dims) {
    if (n < 1) throw InvalidArgument("network: layer widths must be >= 1");
  }
  if (dims.back() != 1) throw InvalidArgument("network: output layer must have width 1");
}

// Number of parameters: sum_k n_k (n_{k-1} + 1).
inline std::size_t parameter_count(const std::vector<int>& dims) {
  std::size_t n = 0;
  for (std::size_t k = 1; k < dims.size(); ++k) {
    n += static_cast<std::size_t>(dims[k]) * (dims[k - 1] + 1);
  }
  return n;
}

struct MlpParameters {
  std::vector<int> layer_dims;  // n_0 = d + 1, ..., n_l = 1
  std::vector<Matrix> weights;  // weights[k] is n_{k+1} x n_k
  std::vector<Vector> biases;   // biases[k] has length n_{k+1}

  static MlpParameters zeros(const std::vector<int>& dims) {
    validate_layer_dims(dims);
    MlpParameters p;
    p.layer_dims = dims;
    for (std::size_t k = 1; k < dims.size(); ++k) {
      p.weights.push_back(Matrix::Zero(dims[k], dims[k - 1]));
      p.biases.push_back(Vector::Zero(dims[k]));
    }
    return p;
  }

  int input_dim() const { return layer_dims.front(); }
  int layers() const { return static_cast<int>(weights.size()); }
  std::size_t size() const { return parameter_count(layer_dims); }

  // Layer by layer: weights row-major, then biases.
  Vector flatten() const {
    Vector out(static_cast<Eigen::Index>(size()));
    Eigen::Index i = 0;
    for (int k = 0; k < layers(); ++k) {
      for (Eigen::Index r = 0; r < weights[k].rows(); ++r) {
        for (Eigen::Index c = 0; c < weights[k].cols(); ++c) out[i++] = weights[k](r, c);
      }
      for (Eigen::Index r = 0; r < biases[k].size(); ++r) out[i++] = biases[k][r];
    }
    return out;
  }

  void assign(const Vector& flat) {
    if (flat.size() != static_cast<Eigen::Index>(size())) {
      throw InvalidArgument("network: flat parameter vector has wrong length");
    }
    Eigen::Index i = 0;
    for (int k = 0; k < layers(); ++k) {
      for (Eigen::Index r = 0; r < weights[k].rows(); ++r) {
        for (Eigen::Index c = 0; c < weights[k].cols(); ++c) weights[k](r, c) = flat[i++];
      }
      for (Eigen::Index r = 0; r < biases[k].size(); ++r) biases[k][r] = flat[i++];
    }
  }

  bool all_finite() const {
    for (int k = 0; k < layers(); ++k) {
      if (!weights[k].allFinite() || !biases[k].allFinite()) return false;
    }
    return true;
  }

  void set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
  }
};

// Per-point evaluation (oracles, tests, traces).
inline double eval(const MlpParameters& p, std::span<const double> z) {
  if (static_cast<int>(z.size()) != p.input_dim()) {
    throw InvalidArgument("network: input has length " + std::to_string(z.size()) + ", expected " +
                          std::to_string(p.input_dim()));
  }
  Vector y = Eigen::Map<const Vector>(z.data(), static_cast<Eigen::Index>(z.size()));
  for (int k = 0; k + 1 < p.layers(); ++k) {
    y = (p.weights[k] * y - p.biases[k]).cwiseMax(0.0);
  }
  return (p.weights.back() * y)(0) - p.biases.back()(0);
}

// Activations kept for the reverse pass. act[0] is the input batch (n_0 x B).
struct MlpTape {
  std::vector<Matrix> act;
  RowVector out;
};

// Forward pass over a batch of points stored column-wise.
inline void forward(const MlpParameters& p, const Matrix& batch, MlpTape& tape) {
  if (batch.rows() != p.input_dim()) throw InvalidArgument("network: batch row count mismatch");
  const int L = p.layers();
  tape.act.resize(L);
  tape.act[0] = batch;
  for (int k = 0; k + 1 < L; ++k) {
    Matrix& a = tape.act[k + 1];
    a.noalias() = p.weights[k] * tape.act[k];
    a = (a.colwise() - p.biases[k]).cwiseMax(0.0);
  }
  tape.out.noalias() = p.weights[L - 1] * tape.act[L - 1];
  tape.out.array() -= p.biases[L - 1](0);
}

inline RowVector eval_batch(const MlpParameters& p, const Matrix& batch) {
  MlpTape tape;
  forward(p, batch, tape);
  return tape.out;
}

// Accumulates d/dtheta of sum_j seed_j * N(z_j) into `grad` (same shape as p).
// The ReLU derivative at exactly zero is taken as 0.
inline void backward(const MlpParameters& p, const MlpTape& tape, const RowVector& seed,
                     MlpParameters& grad) {
  const int L = p.layers();
  Matrix g = seed;
  Matrix next;
  for (int k = L - 1; k >= 0; --k) {
    grad.weights[k].noalias() += g * tape.act[k].transpose();
    grad.biases[k] -= g.rowwise().sum();
    if (k > 0) {
      next.noalias() = p.weights[k].transpose() * g;
      g = (tape.act[k].array() > 0.0).select(next, 0.0);
    }
  }
}

// First hidden layer: hyperplanes w_i . z = b_i with unit normals spread over
// the half-sphere (time component >= 0) and each passing through a uniformly
// drawn interior point of `region`. Deeper layers: U(-r, r) weights with
// r = sqrt(6 / (n_{k-1} + n_k)) and zero biases.
inline MlpParameters init_first_block(const std::vector<int>& dims, const SpaceTimeBox& region,
                                      std::uint64_t seed) {
  MlpParameters p = MlpParameters::zeros(dims);
  if (region.axes != dims.front()) throw InvalidArgument("network: region dimension mismatch");
  std::mt19937_64 rng = SeedSplitter(seed).stream("init");
  const int n0 = dims[0];
  const int n1 = dims[1];
  const bool has_hidden = dims.size() > 2;
  if (has_hidden) {
    for (int i = 0; i < n1; ++i) {
      Vector dir(n0);
      if (n0 == 1) {
        dir[0] = 1.0;
      } else if (n0 == 2) {
        // Stratified angles in [0, pi).
        const double theta = (i + uniform01(rng)) * M_PI / n1;
        dir[0] = std::cos(theta);
        dir[1] = std::sin(theta);
      } else {
        for (int a = 0; a < n0; ++a) {
          // Box-Muller keeps the draw independent of std::normal_distribution.
          const double u1 = 1.0 - uniform01(rng);
          const double u2 = uniform01(rng);
          dir[a] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        }
        dir.normalize();
        if (dir[n0 - 1] < 0.0) dir = -dir;
      }
      Vector point(n0);
      for (int a = 0; a < n0; ++a) {
        point[a] = uniform(rng, region.lo[a], region.hi[a]);
      }
      p.weights[0].row(i) = dir.transpose();
      p.biases[0][i] = dir.dot(point);
    }
  }
  for (int k = has_hidden ? 1 : 0; k < p.layers(); ++k) {
    const double r = std::sqrt(6.0 / (p.weights[k].cols() + p.weights[k].rows()));
    for (Eigen::Index row = 0; row < p.weights[k].rows(); ++row) {
      for (Eigen::Index c = 0; c < p.weights[k].cols(); ++c) {
        p.weights[k](row, c) = uniform(rng, -r, r);
      }
    }
  }
  return p;
}

inline MlpParameters warm_start(const MlpParameters& prev) { return prev; }

}  // namespace lsnn
