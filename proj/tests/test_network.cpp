#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "lsnn/checkpoint.hpp"
#include "lsnn/network.hpp"

using namespace lsnn;

namespace {

double eval2(const MlpParameters& p, double x, double t) {
  const double z[] = {x, t};
  return eval(p, z);
}

MlpParameters random_params(const std::vector<int>& dims, std::uint64_t seed) {
  MlpParameters p = MlpParameters::zeros(dims);
  std::mt19937_64 rng(seed);
  Vector flat = p.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat[i] = uniform(rng, -1.0, 1.0);
  p.assign(flat);
  return p;
}

}  // namespace

TEST(Network, ZeroParametersGiveMinusOutputBias) {
  MlpParameters p = MlpParameters::zeros({2, 10, 10, 1});
  p.biases.back()[0] = 0.75;
  EXPECT_EQ(eval2(p, 0.3, -4.0), -0.75);
  EXPECT_EQ(eval2(p, -1.0, 0.2), -0.75);
}

TEST(Network, ReluKillsNegativePreActivation) {
  MlpParameters p = MlpParameters::zeros({2, 1, 1});
  p.weights[0] << 1.0, 0.0;
  p.weights[1] << 1.0;
  EXPECT_EQ(eval2(p, -3.0, 5.0), 0.0);
  EXPECT_EQ(eval2(p, 3.0, 5.0), 3.0);
}

TEST(Network, IdentityFromTwoRelus) {
  MlpParameters p = MlpParameters::zeros({2, 2, 1});
  p.weights[0] << 1.0, 0.0, -1.0, 0.0;
  p.weights[1] << 1.0, -1.0;
  std::mt19937_64 rng(5);
  Matrix batch(2, 100);
  for (int i = 0; i < 100; ++i) {
    const double x = uniform(rng, -10.0, 10.0), t = uniform(rng, -10.0, 10.0);
    EXPECT_DOUBLE_EQ(eval2(p, x, t), x);
    batch(0, i) = x;
    batch(1, i) = t;
  }
  const RowVector out = eval_batch(p, batch);
  for (int i = 0; i < 100; ++i) EXPECT_DOUBLE_EQ(out[i], batch(0, i));
}

TEST(Network, DimensionMismatchThrows) {
  const MlpParameters p = MlpParameters::zeros({2, 3, 1});
  const double z[] = {1.0, 2.0, 3.0};
  EXPECT_THROW(eval(p, z), InvalidArgument);
  EXPECT_THROW(eval_batch(p, Matrix::Zero(3, 4)), InvalidArgument);
  EXPECT_THROW(MlpParameters::zeros({2, 3, 2}), InvalidArgument);
}

TEST(Network, ParameterCounts) {
  EXPECT_EQ(parameter_count({2, 10, 10, 1}), 151u);
  EXPECT_EQ(parameter_count({3, 48, 48, 48, 1}), 4945u);
  EXPECT_EQ(MlpParameters::zeros({2, 30, 30, 1}).flatten().size(), 1051);
}

TEST(Network, FlattenAssignRoundTrip) {
  const MlpParameters p = random_params({3, 5, 4, 1}, 3);
  MlpParameters q = MlpParameters::zeros(p.layer_dims);
  q.assign(p.flatten());
  EXPECT_EQ(q.flatten(), p.flatten());
  EXPECT_THROW(q.assign(Vector::Zero(3)), InvalidArgument);
}

TEST(Network, BatchAgreesWithPointwise) {
  const MlpParameters p = random_params({3, 7, 6, 1}, 8);
  std::mt19937_64 rng(2);
  Matrix batch(3, 50);
  for (Eigen::Index i = 0; i < batch.size(); ++i) batch.data()[i] = uniform(rng, -2.0, 2.0);
  const RowVector out = eval_batch(p, batch);
  for (int i = 0; i < 50; ++i) {
    const double z[] = {batch(0, i), batch(1, i), batch(2, i)};
    EXPECT_NEAR(out[i], eval(p, z), 1e-14);
  }
}

// The restriction to a segment is affine between kinks: away from them the
// second difference vanishes.
TEST(NetworkProperty, PiecewiseAffineAlongSegments) {
  const MlpParameters p = random_params({2, 10, 10, 1}, 21);
  std::mt19937_64 rng(4);
  int affine_checks = 0;
  for (int seg = 0; seg < 20; ++seg) {
    const double xa = uniform(rng, -1, 1), ta = uniform(rng, 0, 1);
    const double xb = uniform(rng, -1, 1), tb = uniform(rng, 0, 1);
    const int n = 400;
    std::vector<double> v(n + 1);
    for (int i = 0; i <= n; ++i) {
      const double s = static_cast<double>(i) / n;
      v[i] = eval2(p, xa + s * (xb - xa), ta + s * (tb - ta));
    }
    // A kink lies strictly inside at most a few windows; count the rest.
    int kinked = 0;
    for (int i = 1; i < n; ++i) {
      const double second = v[i + 1] - 2.0 * v[i] + v[i - 1];
      if (std::abs(second) > 1e-12) {
        ++kinked;
      } else {
        ++affine_checks;
      }
    }
    EXPECT_LE(kinked, 2 * (10 + 10 * 10)) << "segment " << seg;
    EXPECT_LT(kinked, n / 4);
  }
  EXPECT_GT(affine_checks, 0);
}

TEST(Init, DeterministicFromSeed) {
  const SpaceTimeBox region = build_blocks(SpaceTimeDomain{{-1.0}, {1.0}, 0.6}, 3)[0].box();
  const auto a = init_first_block({2, 10, 10, 1}, region, 42);
  const auto b = init_first_block({2, 10, 10, 1}, region, 42);
  const auto c = init_first_block({2, 10, 10, 1}, region, 43);
  EXPECT_EQ(a.flatten(), b.flatten());
  EXPECT_NE(a.flatten(), c.flatten());
}

// Each first-layer hyperplane w . z = b meets the open block: the affine
// function w . z - b changes sign between the block corners.
TEST(Init, FirstLayerHyperplanesCrossTheBlock) {
  const SpaceTimeBox region = build_blocks(SpaceTimeDomain{{-1.0}, {1.0}, 0.6}, 3)[0].box();
  for (std::uint64_t seed : {1, 2, 3, 99}) {
    const auto p = init_first_block({2, 10, 10, 1}, region, seed);
    for (int i = 0; i < 10; ++i) {
      double mn = 1e300, mx = -1e300;
      for (double x : {region.lo[0], region.hi[0]}) {
        for (double t : {region.lo[1], region.hi[1]}) {
          const double s = p.weights[0](i, 0) * x + p.weights[0](i, 1) * t - p.biases[0][i];
          mn = std::min(mn, s);
          mx = std::max(mx, s);
        }
      }
      EXPECT_LT(mn, 0.0) << "seed " << seed << " neuron " << i;
      EXPECT_GT(mx, 0.0) << "seed " << seed << " neuron " << i;
      EXPECT_NEAR(p.weights[0].row(i).norm(), 1.0, 1e-14);
    }
  }
  // Same containment in 2-D space.
  const SpaceTimeBox box3 = build_blocks(SpaceTimeDomain{{0.0, 0.0}, {1.0, 1.0}, 0.5}, 5)[0].box();
  const auto p = init_first_block({3, 48, 48, 48, 1}, box3, 7);
  for (int i = 0; i < 48; ++i) {
    double mn = 1e300, mx = -1e300;
    for (int corner = 0; corner < 8; ++corner) {
      double s = -p.biases[0][i];
      for (int a = 0; a < 3; ++a) s += p.weights[0](i, a) * ((corner >> a) & 1 ? box3.hi[a] : box3.lo[a]);
      mn = std::min(mn, s);
      mx = std::max(mx, s);
    }
    EXPECT_LT(mn, 0.0);
    EXPECT_GT(mx, 0.0);
  }
}

TEST(Init, OutputIsBounded) {
  const SpaceTimeBox region = build_blocks(SpaceTimeDomain{{-1.0}, {1.0}, 0.6}, 3)[0].box();
  const auto p = init_first_block({2, 10, 10, 1}, region, 5);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    EXPECT_LE(std::abs(eval2(p, uniform(rng, -1, 1), uniform(rng, 0, 0.2))), 10.0);
  }
}

TEST(WarmStart, CopySemantics) {
  const MlpParameters prev = random_params({2, 10, 10, 1}, 9);
  MlpParameters next = warm_start(prev);
  EXPECT_EQ(next.flatten(), prev.flatten());
  EXPECT_EQ(eval2(next, 0.1, 0.2), eval2(prev, 0.1, 0.2));
  next.weights[0](0, 0) += 1.0;
  EXPECT_NE(next.flatten(), prev.flatten());
  EXPECT_EQ(prev.flatten(), random_params({2, 10, 10, 1}, 9).flatten());
}

TEST(Checkpoint, ExactRoundTrip) {
  Checkpoint c{random_params({2, 30, 30, 1}, 12), 77, 3};
  c.params.weights[1](2, 3) = 0.1 + 0.2;  // not representable in short decimal form
  c.params.biases[0][4] = -1e-300;
  const std::string path = ::testing::TempDir() + "lsnn_checkpoint_roundtrip.json";
  save_checkpoint(path, c);
  const Checkpoint back = load_checkpoint(path);
  EXPECT_EQ(back.params.layer_dims, c.params.layer_dims);
  EXPECT_EQ(back.params.flatten(), c.params.flatten());
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.block, 3);
  // Weights are stored row-major.
  const auto j = checkpoint_to_json(c);
  EXPECT_EQ(j["weights"][0][1].get<double>(), c.params.weights[0](0, 1));
  EXPECT_EQ(j["format_version"].get<int>(), 1);
}

TEST(Checkpoint, RejectsMalformedFiles) {
  auto j = checkpoint_to_json(Checkpoint{MlpParameters::zeros({2, 3, 1}), 1, 1});
  auto bad_version = j;
  bad_version["format_version"] = 2;
  EXPECT_THROW(checkpoint_from_json(bad_version), InvalidArgument);
  auto short_bias = j;
  short_bias["biases"][0] = nlohmann::json::array({0.0});
  EXPECT_THROW(checkpoint_from_json(short_bias), InvalidArgument);
  EXPECT_THROW(load_checkpoint(::testing::TempDir() + "does_not_exist.json"), InvalidArgument);
}
