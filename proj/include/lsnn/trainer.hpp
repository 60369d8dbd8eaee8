#pragma once

// ADAM training of one block and the block-marching driver.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lsnn/divergence.hpp"
#include "lsnn/error.hpp"
#include "lsnn/geometry.hpp"
#include "lsnn/loss.hpp"
#include "lsnn/network.hpp"

namespace lsnn {

// Piecewise-constant learning rate: pieces sorted by start iteration, the
// first one starting at 0.
class LrSchedule {
 public:
  struct Piece {
    long start;
    double rate;
  };

  LrSchedule() = default;
  explicit LrSchedule(std::vector<Piece> pieces) : pieces_(std::move(pieces)) { validate(); }

  static LrSchedule constant(double rate) { return LrSchedule({{0, rate}}); }

  // rate * factor^(floor(i / every)) for i < iterations.
  static LrSchedule step_decay(double rate, double factor, long every, long iterations) {
    if (every < 1) throw InvalidArgument("lr schedule: decay interval must be >= 1");
    std::vector<Piece> p;
    double r = rate;
    for (long s = 0; s < std::max(iterations, 1L); s += every) {
      p.push_back({s, r});
      r *= factor;
    }
    return LrSchedule(std::move(p));
  }

  void validate() const {
    if (pieces_.empty() || pieces_.front().start != 0) {
      throw InvalidArgument("lr schedule: must start at iteration 0");
    }
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      if (!(pieces_[i].rate > 0.0) || !std::isfinite(pieces_[i].rate)) {
        throw InvalidArgument("lr schedule: rates must be > 0");
      }
      if (i > 0 && pieces_[i].start <= pieces_[i - 1].start) {
        throw InvalidArgument("lr schedule: start iterations must increase");
      }
    }
  }

  double rate(long iteration) const {
    double r = pieces_.front().rate;
    for (const auto& p : pieces_) {
      if (p.start > iteration) break;
      r = p.rate;
    }
    return r;
  }

  const std::vector<Piece>& pieces() const { return pieces_; }

 private:
  std::vector<Piece> pieces_{{0, 1e-3}};
};

struct TrainingConfig {
  long iterations = 1000;
  LrSchedule lr_schedule;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  long history_every = 100;
  std::function<void(long iteration, double loss)> progress;  // called at history samples

  void validate() const {
    if (iterations < 1) throw InvalidArgument("training: iterations must be >= 1");
    if (history_every < 1) throw InvalidArgument("training: history_every must be >= 1");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
      throw InvalidArgument("training: ADAM betas must lie in [0, 1)");
    }
    if (!(adam_epsilon > 0.0)) throw InvalidArgument("training: ADAM epsilon must be > 0");
    lr_schedule.validate();
  }
};

struct AdamState {
  Vector m;
  Vector v;
  long step = 0;

  explicit AdamState(std::size_t n = 0)
      : m(Vector::Zero(static_cast<Eigen::Index>(n))), v(Vector::Zero(static_cast<Eigen::Index>(n))) {}
};

inline void adam_step(Vector& theta, const Vector& grad, AdamState& state, double rate,
                      double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8) {
  if (grad.size() != theta.size() || state.m.size() != theta.size()) {
    throw InvalidArgument("adam: size mismatch");
  }
  if (!grad.allFinite()) throw NonFiniteError("adam: non-finite gradient", state.step);
  state.step += 1;
  state.m = beta1 * state.m + (1.0 - beta1) * grad;
  state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  theta.array() -= rate * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + epsilon);
}

struct HistoryEntry {
  long iteration;
  double loss;
  double learning_rate;
};

struct BlockSolveResult {
  int block = 1;
  MlpParameters params;  // best seen
  std::vector<HistoryEntry> history;
  double final_loss = 0.0;
  double initial_loss = 0.0;
  double wall_time = 0.0;  // seconds; reported on the console only

  std::vector<double> loss_history() const {
    std::vector<double> out;
    for (const auto& h : history) out.push_back(h.loss);
    return out;
  }
};

inline std::string history_csv(const BlockSolveResult& r) {
  std::ostringstream os;
  os << "iteration,loss,learning_rate\n" << std::setprecision(17);
  for (const auto& h : r.history) os << h.iteration << ',' << h.loss << ',' << h.learning_rate << '\n';
  return os.str();
}

// Runs cfg.iterations ADAM steps on the block loss and returns the parameters
// with the lowest loss seen (including the state after the last step).
// Throws NonFiniteError carrying the iteration index if the loss diverges.
inline BlockSolveResult solve_block(const BlockSpec& block, const MlpParameters& init,
                                    const BlockLossSpec& spec, const FluxModel& model,
                                    const TrainingConfig& cfg) {
  cfg.validate();
  if (init.input_dim() != block.dim() + 1) throw InvalidArgument("solve_block: network input dimension");
  const auto start = std::chrono::steady_clock::now();
  const BlockLoss loss(spec, model);

  BlockSolveResult res;
  res.block = block.index;
  MlpParameters params = init;
  MlpParameters grad = MlpParameters::zeros(init.layer_dims);
  Vector theta = params.flatten();
  AdamState state(theta.size());
  double best = std::numeric_limits<double>::infinity();
  MlpParameters best_params = params;

  for (long it = 0; it < cfg.iterations; ++it) {
    const double value = loss.value_and_gradient(params, grad);
    if (!std::isfinite(value)) {
      throw NonFiniteError("training diverged in block " + std::to_string(block.index), it);
    }
    if (it == 0) res.initial_loss = value;
    if (value < best) {
      best = value;
      best_params = params;
    }
    const double rate = cfg.lr_schedule.rate(it);
    if (it % cfg.history_every == 0) {
      res.history.push_back({it, value, rate});
      if (cfg.progress) cfg.progress(it, value);
    }
    try {
      adam_step(theta, grad.flatten(), state, rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);
    } catch (const NonFiniteError&) {
      throw NonFiniteError("non-finite gradient in block " + std::to_string(block.index), it);
    }
    params.assign(theta);
  }
  const double last = loss.value(params);
  if (!std::isfinite(last)) {
    throw NonFiniteError("training diverged in block " + std::to_string(block.index), cfg.iterations);
  }
  if (last < best) {
    best = last;
    best_params = params;
  }
  res.params = std::move(best_params);
  res.final_loss = best;
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

// Problem-level settings shared by all blocks.
struct MarchConfig {
  std::vector<double> h{0.01};
  double delta = 0.01;
  RuleKind mesh_rule = RuleKind::midpoint;
  DivergenceConfig div_cfg;
  double alpha = 1.0;
  CompositeRule boundary_rule{RuleKind::trapezoidal, 1};
  PointFunction initial_data;  // u_0, evaluated at t = 0
  PointFunction inflow_data;   // g on inflow faces
  bool classify = false;       // refine cells flagged by classify_cells (1-D only)
  double sharpness_threshold = -1.0;
};

struct MarchResult {
  std::vector<BlockSolveResult> blocks;
  bool failed = false;
  int failed_block = 0;
  long failed_iteration = -1;
  std::string failure;
};

inline BlockLossSpec make_block_loss_spec(const BlockSpec& block, const MarchConfig& mc,
                                          const FluxModel& model, PointFunction interface_data) {
  IntegrationMesh mesh = build_mesh(block, mc.h, mc.delta, mc.mesh_rule, mc.div_cfg.sub_m, mc.div_cfg.sub_n);
  if (mc.classify && block.dim() == 1) {
    const auto trace = [&](double x) {
      std::array<double, kMaxAxes> z{};
      z[0] = x;
      z[1] = block.t_lo;
      return interface_data(z);
    };
    mesh.set_refined(classify_cells(mesh, model, trace, mc.sharpness_threshold));
  }
  return BlockLossSpec{std::move(mesh), mc.div_cfg, mc.alpha, std::move(interface_data),
                       mc.inflow_data, mc.boundary_rule};
}

// Marches k = 1..n_b. Block 1 starts from init_first_block and u_0; block k > 1
// is warm-started from block k-1 and uses its trace at t_lo as interface data.
// `block_cfg(k)` supplies the training settings of block k.
inline MarchResult solve_all_blocks(const std::vector<BlockSpec>& blocks,
                                    const std::vector<int>& layer_dims, const FluxModel& model,
                                    const std::function<TrainingConfig(int)>& block_cfg,
                                    const MarchConfig& mc, std::uint64_t seed,
                                    const std::function<void(const BlockSolveResult&)>& on_block = {}) {
  if (!mc.initial_data) throw InvalidArgument("solve_all_blocks: initial data missing");
  MarchResult out;
  MlpParameters current;
  for (const BlockSpec& block : blocks) {
    PointFunction interface;
    MlpParameters init;
    if (block.index == 1) {
      interface = mc.initial_data;
      init = init_first_block(layer_dims, block.box(), seed);
    } else {
      const MlpParameters prev = out.blocks.back().params;
      const int d = block.dim();
      const double t_lo = block.t_lo;
      interface = [prev, d, t_lo](const std::array<double, kMaxAxes>& z) {
        std::array<double, kMaxAxes> q = z;
        q[d] = t_lo;
        return eval(prev, std::span<const double>(q.data(), static_cast<std::size_t>(d + 1)));
      };
      init = warm_start(prev);
    }
    try {
      const BlockLossSpec spec = make_block_loss_spec(block, mc, model, interface);
      TrainingConfig cfg = block_cfg(block.index);
      cfg.seed = seed;
      out.blocks.push_back(solve_block(block, init, spec, model, cfg));
    } catch (const NonFiniteError& e) {
      out.failed = true;
      out.failed_block = block.index;
      out.failed_iteration = e.iteration();
      out.failure = e.what();
      return out;
    }
    if (on_block) on_block(out.blocks.back());
  }
  return out;
}

inline MarchResult solve_all_blocks(const SpaceTimeDomain& domain, int n_b,
                                    const std::vector<Face>& inflow_faces,
                                    const std::vector<int>& layer_dims, const FluxModel& model,
                                    const std::function<TrainingConfig(int)>& block_cfg,
                                    const MarchConfig& mc, std::uint64_t seed,
                                    const std::function<void(const BlockSolveResult&)>& on_block = {}) {
  return solve_all_blocks(build_blocks(domain, n_b, inflow_faces), layer_dims, model, block_cfg, mc, seed,
                          on_block);
}

}  // namespace lsnn
