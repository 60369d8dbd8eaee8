#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "lsnn/oracles.hpp"
#include "lsnn/trainer.hpp"

using namespace lsnn;

namespace {

PointFunction step_data() {
  return [](const std::array<double, kMaxAxes>& z) { return z[0] < 0.0 ? 1.0 : 0.0; };
}

MarchConfig coarse_shock_march() {
  MarchConfig mc;
  mc.h = {0.04};
  mc.delta = 0.04;
  mc.alpha = 20.0;
  mc.initial_data = step_data();
  mc.inflow_data = [](const std::array<double, kMaxAxes>& z) { return riemann_burgers(1.0, 0.0)(z[0], z[1]); };
  return mc;
}

TrainingConfig training(long iterations, double rate) {
  TrainingConfig cfg;
  cfg.iterations = iterations;
  cfg.lr_schedule = LrSchedule::constant(rate);
  cfg.history_every = 10;
  return cfg;
}

}  // namespace

TEST(Adam, ScalarHandExample) {
  Vector theta = Vector::Zero(1), grad = Vector::Ones(1);
  AdamState s(1);
  adam_step(theta, grad, s, 0.1);
  EXPECT_DOUBLE_EQ(theta[0], -0.1 / (1.0 + 1e-8));
  EXPECT_EQ(s.step, 1);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Vector theta(3);
  theta << 1.0, -2.0, 0.5;
  const Vector before = theta;
  AdamState s(3);
  adam_step(theta, Vector::Zero(3), s, 0.1);
  EXPECT_EQ(theta, before);
  EXPECT_EQ(s.step, 1);
}

TEST(Adam, NonFiniteGradientAborts) {
  Vector theta = Vector::Zero(2), grad(2);
  grad << 1.0, std::nan("");
  AdamState s(2);
  EXPECT_THROW(adam_step(theta, grad, s, 0.1), NonFiniteError);
  EXPECT_THROW(adam_step(theta, Vector::Zero(3), s, 0.1), InvalidArgument);
}

// Two steps by hand: m2 = 0.9*0.1*g1 + 0.1*g2, v2 = 0.999*0.001*g1^2 + 0.001*g2^2.
TEST(Adam, SecondStepBiasCorrection) {
  Vector theta = Vector::Zero(1);
  AdamState s(1);
  adam_step(theta, Vector::Constant(1, 2.0), s, 0.01);
  const double after_one = theta[0];
  adam_step(theta, Vector::Constant(1, -1.0), s, 0.01);
  const double m = (0.9 * 0.1 * 2.0 + 0.1 * -1.0) / (1.0 - 0.81);
  const double v = (0.999 * 0.001 * 4.0 + 0.001 * 1.0) / (1.0 - 0.999 * 0.999);
  EXPECT_NEAR(theta[0], after_one - 0.01 * m / (std::sqrt(v) + 1e-8), 1e-15);
}

TEST(Schedule, PiecewiseConstant) {
  const LrSchedule s({{0, 0.003}, {30000, 0.001}});
  EXPECT_EQ(s.rate(0), 0.003);
  EXPECT_EQ(s.rate(29999), 0.003);
  EXPECT_EQ(s.rate(30000), 0.001);
  const auto d = LrSchedule::step_decay(0.005, 0.5, 25000, 50000);
  ASSERT_EQ(d.pieces().size(), 2u);
  EXPECT_EQ(d.rate(24999), 0.005);
  EXPECT_EQ(d.rate(25000), 0.0025);
  EXPECT_THROW(LrSchedule({{1, 0.1}}), InvalidArgument);
  EXPECT_THROW(LrSchedule({{0, 0.1}, {0, 0.2}}), InvalidArgument);
  EXPECT_THROW(LrSchedule({{0, -0.1}}), InvalidArgument);
}

TEST(SolveBlock, PreSolvedProblemStaysSolved) {
  const PointFunction c = [](const std::array<double, kMaxAxes>&) { return 0.25; };
  const BlockSpec b{1, 0.0, 0.2, {-1.0}, {1.0}, {parse_face("x_lo")}};
  const BlockLossSpec spec{build_mesh(b, {0.1}, 0.05, RuleKind::midpoint, {2}, 2), DivergenceConfig{}, 20.0, c, c};
  MlpParameters p = init_first_block({2, 10, 10, 1}, b.box(), 1);
  p.weights.back().setZero();
  p.biases.back()[0] = -0.25;
  const auto res = solve_block(b, p, spec, builtin_flux("burgers1d"), training(50, 0.003));
  EXPECT_LE(res.final_loss, 1e-20);
  EXPECT_EQ(res.params.flatten(), p.flatten());
}

TEST(SolveBlock, DeterministicAndBestSeen) {
  const auto blocks = build_blocks(SpaceTimeDomain{{-1.0}, {1.0}, 0.6}, 3, {parse_face("x_lo"), parse_face("x_hi")});
  const MarchConfig mc = coarse_shock_march();
  const FluxModel model = builtin_flux("burgers1d");
  const BlockLossSpec spec = make_block_loss_spec(blocks[0], mc, model, mc.initial_data);
  const auto init = init_first_block({2, 10, 10, 1}, blocks[0].box(), 3);
  const auto a = solve_block(blocks[0], init, spec, model, training(300, 0.003));
  const auto b = solve_block(blocks[0], init, spec, model, training(300, 0.003));
  EXPECT_EQ(a.params.flatten(), b.params.flatten());
  EXPECT_EQ(a.final_loss, b.final_loss);
  EXPECT_EQ(a.loss_history(), b.loss_history());
  // final_loss is the loss at the returned parameters and no worse than any sample.
  const double recomputed = block_loss(a.params, spec, model);
  EXPECT_NEAR(a.final_loss, recomputed, 1e-10 * recomputed);
  for (double h : a.loss_history()) EXPECT_LE(a.final_loss, h);
  EXPECT_LT(a.final_loss, a.initial_loss);
  EXPECT_EQ(a.history.front().iteration, 0);
  EXPECT_EQ(a.history.size(), 30u);
}

TEST(SolveBlock, WorkerCountDoesNotChangeResults) {
  const auto blocks = build_blocks(SpaceTimeDomain{{-1.0}, {1.0}, 0.2}, 1, {parse_face("x_lo")});
  MarchConfig mc = coarse_shock_march();
  mc.h = {0.005};
  mc.delta = 0.01;
  const FluxModel model = builtin_flux("burgers1d");
  const BlockLossSpec spec = make_block_loss_spec(blocks[0], mc, model, mc.initial_data);
  const BlockLoss loss(spec, model);
  ASSERT_GT(loss.node_count(), 2 * BlockLoss::kChunk);
  const auto p = init_first_block({2, 10, 10, 1}, blocks[0].box(), 4);
  MlpParameters g1 = MlpParameters::zeros(p.layer_dims), g4 = g1;
  setenv("LSNN_WORKERS", "1", 1);
  const double v1 = loss.value_and_gradient(p, g1);
  setenv("LSNN_WORKERS", "4", 1);
  const double v4 = loss.value_and_gradient(p, g4);
  unsetenv("LSNN_WORKERS");
  EXPECT_EQ(v1, v4);
  EXPECT_EQ(g1.flatten(), g4.flatten());
}

TEST(March, SingleBlockReducesToSolveBlock) {
  const auto blocks = build_blocks(SpaceTimeDomain{{-1.0}, {1.0}, 0.2}, 1, {parse_face("x_lo"), parse_face("x_hi")});
  const MarchConfig mc = coarse_shock_march();
  const FluxModel model = builtin_flux("burgers1d");
  const auto cfg = training(100, 0.003);
  const auto march = solve_all_blocks(blocks, {2, 10, 10, 1}, model, [&](int) { return cfg; }, mc, 8);
  ASSERT_EQ(march.blocks.size(), 1u);
  EXPECT_FALSE(march.failed);
  const auto direct = solve_block(blocks[0], init_first_block({2, 10, 10, 1}, blocks[0].box(), 8),
                                  make_block_loss_spec(blocks[0], mc, model, mc.initial_data), model, cfg);
  EXPECT_EQ(march.blocks[0].params.flatten(), direct.params.flatten());
}

TEST(March, BlocksChainThroughTraces) {
  const SpaceTimeDomain domain{{-1.0}, {1.0}, 0.6};
  const MarchConfig mc = coarse_shock_march();
  const FluxModel model = builtin_flux("burgers1d");
  int seen = 0;
  const auto march = solve_all_blocks(domain, 3, {parse_face("x_lo"), parse_face("x_hi")}, {2, 10, 10, 1},
                                      model, [&](int) { return training(50, 0.003); }, mc, 2,
                                      [&](const BlockSolveResult& r) { EXPECT_EQ(r.block, ++seen); });
  ASSERT_EQ(march.blocks.size(), 3u);
  EXPECT_EQ(seen, 3);
  // Block 2 starts from block 1's parameters, so its interface term starts at zero.
  const auto blocks = build_blocks(domain, 3, {parse_face("x_lo"), parse_face("x_hi")});
  const MlpParameters prev = march.blocks[0].params;
  const PointFunction trace = [&](const std::array<double, kMaxAxes>& z) {
    const double q[] = {z[0], blocks[1].t_lo};
    return eval(prev, q);
  };
  const BlockLossSpec spec = make_block_loss_spec(blocks[1], mc, model, trace);
  EXPECT_LE(BlockLoss(spec, model).terms(warm_start(prev)).interface, 1e-28);
}

TEST(March, DivergenceStopsWithFailureMarker) {
  const SpaceTimeDomain domain{{-1.0}, {1.0}, 0.4};
  MarchConfig mc = coarse_shock_march();
  mc.inflow_data = [](const std::array<double, kMaxAxes>& z) { return z[1] > 0.25 ? std::nan("") : 1.0; };
  const auto march = solve_all_blocks(domain, 2, {parse_face("x_lo")}, {2, 10, 10, 1}, builtin_flux("burgers1d"),
                                      [](int) { return training(20, 0.003); }, mc, 1);
  EXPECT_TRUE(march.failed);
  EXPECT_EQ(march.failed_block, 2);
  EXPECT_EQ(march.failed_iteration, 0);
  EXPECT_EQ(march.blocks.size(), 1u);
}

// Warm starting beats a fresh initialisation on block 2 of the shock problem
// for a majority of 5 seeds.
TEST(March, WarmStartLowersInitialLoss) {
  const SpaceTimeDomain domain{{-1.0}, {1.0}, 0.6};
  const auto blocks = build_blocks(domain, 3, {parse_face("x_lo"), parse_face("x_hi")});
  const MarchConfig mc = coarse_shock_march();
  const FluxModel model = builtin_flux("burgers1d");
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto first = solve_block(blocks[0], init_first_block({2, 10, 10, 1}, blocks[0].box(), seed),
                                   make_block_loss_spec(blocks[0], mc, model, mc.initial_data), model,
                                   training(1500, 0.003));
    const MlpParameters prev = first.params;
    const PointFunction trace = [&](const std::array<double, kMaxAxes>& z) {
      const double q[] = {z[0], blocks[1].t_lo};
      return eval(prev, q);
    };
    const BlockLoss loss(make_block_loss_spec(blocks[1], mc, model, trace), model);
    const double warm = loss.value(warm_start(prev));
    const double fresh = loss.value(init_first_block({2, 10, 10, 1}, blocks[1].box(), seed));
    wins += warm <= fresh;
  }
  EXPECT_GE(wins, 3);
}
