#include <gtest/gtest.h>

#include <cmath>

#include "lsnn/flux.hpp"
#include "lsnn/geometry.hpp"

using namespace lsnn;

TEST(Flux, BuiltinValues) {
  const FluxModel b = builtin_flux("burgers1d");
  EXPECT_DOUBLE_EQ(b.f(0, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(b.f_prime(0, 2.0), 2.0);
  const FluxModel q = builtin_flux("quartic1d");
  EXPECT_DOUBLE_EQ(q.f(0, 1.0), 0.25);
  EXPECT_DOUBLE_EQ(q.f_prime(0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(builtin_flux("cubic1d").f_prime(0, -0.5), 0.25);
  EXPECT_THROW(builtin_flux("euler"), InvalidArgument);
}

TEST(Flux, SpaceTimeFlux) {
  EXPECT_EQ(total_flux(builtin_flux("burgers1d"), 0.0), (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(total_flux(builtin_flux("burgers1d"), 1.0), (std::vector<double>{0.5, 1.0}));
  EXPECT_EQ(total_flux(builtin_flux("burgers2d"), -1.0), (std::vector<double>{0.5, 0.5, -1.0}));
}

TEST(Flux, CustomClosures) {
  FluxModel m{"custom", {ScalarFlux::custom([](double u) { return std::sin(u); },
                                             [](double u) { return std::cos(u); })}};
  EXPECT_DOUBLE_EQ(m.f(0, 0.3), std::sin(0.3));
  EXPECT_DOUBLE_EQ(m.f_prime(0, 0.3), std::cos(0.3));
  EXPECT_FALSE(m.components[0].second_derivative(0.3).has_value());
}

// Derivatives agree with central differences of the values.
TEST(FluxProperty, DerivativeMatchesDifferenceQuotient) {
  for (const char* name : {"burgers1d", "quartic1d", "cubic1d"}) {
    const FluxModel m = builtin_flux(name);
    for (double u = -1.5; u <= 1.5; u += 0.25) {
      const double eps = 1e-6;
      const double fd = (m.f(0, u + eps) - m.f(0, u - eps)) / (2 * eps);
      EXPECT_NEAR(m.f_prime(0, u), fd, 1e-8) << name << " u=" << u;
    }
  }
}

TEST(Blocks, PartitionExamples) {
  const auto b3 = build_blocks(SpaceTimeDomain{{-1.0}, {1.0}, 0.6}, 3);
  ASSERT_EQ(b3.size(), 3u);
  EXPECT_DOUBLE_EQ(b3[0].t_lo, 0.0);
  EXPECT_DOUBLE_EQ(b3[0].t_hi, 0.2);
  EXPECT_DOUBLE_EQ(b3[1].t_lo, 0.2);
  EXPECT_DOUBLE_EQ(b3[1].t_hi, 0.4);
  EXPECT_DOUBLE_EQ(b3[2].t_hi, 0.6);

  const auto b1 = build_blocks(SpaceTimeDomain{{0.0}, {1.0}, 0.7}, 1);
  ASSERT_EQ(b1.size(), 1u);
  EXPECT_EQ(b1[0].t_lo, 0.0);
  EXPECT_EQ(b1[0].t_hi, 0.7);

  const auto b16 = build_blocks(SpaceTimeDomain{{0.0}, {2.0}, 0.8}, 16);
  double total = 0.0;
  for (const auto& b : b16) {
    EXPECT_NEAR(b.t_hi - b.t_lo, 0.05, 1e-15);
    total += b.t_hi - b.t_lo;
  }
  EXPECT_NEAR(total, 0.8, 1e-14);
  for (std::size_t k = 1; k < b16.size(); ++k) EXPECT_EQ(b16[k].t_lo, b16[k - 1].t_hi);

  EXPECT_THROW(build_blocks(SpaceTimeDomain{{0.0}, {1.0}, 1.0}, 0), InvalidArgument);
}

TEST(Mesh, CellCounts) {
  const auto blocks = build_blocks(SpaceTimeDomain{{-1.0}, {1.0}, 0.6}, 3);
  const auto mesh = build_mesh(blocks[0], {0.01}, 0.01, RuleKind::midpoint, {2}, 2);
  EXPECT_EQ(mesh.cells_along(0), 200);
  EXPECT_EQ(mesh.cells_along(1), 20);

  const BlockSpec unit{1, 0.0, 1.0, {0.0}, {1.0}, {}};
  const auto one = build_mesh(unit, {1.0}, 1.0, RuleKind::midpoint, {1}, 1);
  ASSERT_EQ(one.cell_count(), 1u);
  const auto q = one.quadrature_points(0);
  ASSERT_EQ(q.size(), 1u);
  EXPECT_DOUBLE_EQ(q[0].z[0], 0.5);
  EXPECT_DOUBLE_EQ(q[0].z[1], 0.5);

  const BlockSpec b2{1, 0.0, 0.1, {0.0, 0.0}, {1.0, 1.0}, {}};
  const auto m2 = build_mesh(b2, {0.05, 0.05}, 0.01, RuleKind::midpoint, {2}, 2);
  EXPECT_EQ(m2.cells_along(0), 20);
  EXPECT_EQ(m2.cells_along(1), 20);
  EXPECT_EQ(m2.cells_along(2), 10);
  std::size_t enumerated = 0;
  for (std::size_t f = 0; f < m2.cell_count(); ++f) enumerated += m2.flat(m2.unflatten(f)) == f;
  EXPECT_EQ(enumerated, 4000u);
}

TEST(Mesh, RejectsNonDivisibleExtent) {
  const BlockSpec b{1, 0.0, 0.2, {-1.0}, {1.0}, {}};
  try {
    build_mesh(b, {0.03}, 0.01, RuleKind::midpoint, {2}, 2);
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("axis x"), std::string::npos) << e.what();
  }
  EXPECT_THROW(build_mesh(b, {0.01}, 0.03, RuleKind::midpoint, {2}, 2), InvalidArgument);
}

TEST(MeshProperty, CellsTileTheBlock) {
  const BlockSpec b{2, 0.2, 0.4, {-1.0, 0.0}, {1.0, 0.5}, {}};
  for (RuleKind rule : {RuleKind::midpoint, RuleKind::trapezoidal}) {
    const auto mesh = build_mesh(b, {0.1, 0.05}, 0.02, rule, {2}, 2);
    const double block = 2.0 * 0.5 * 0.2;
    double cells = 0.0, volumes = 0.0;
    for (std::size_t f = 0; f < mesh.cell_count(); ++f) cells += mesh.cell_box(f).measure();
    for (const auto& q : mesh.control_volumes()) {
      volumes += q.weight;
      EXPECT_TRUE(q.control_volume.contains_closed(q.z));
      if (rule == RuleKind::midpoint) {
        const auto c = q.control_volume.centroid();
        for (int a = 0; a < 3; ++a) EXPECT_DOUBLE_EQ(q.z[a], c[a]);
      }
    }
    EXPECT_NEAR(cells, block, 1e-12 * block);
    EXPECT_NEAR(volumes, block, 1e-12 * block);
    if (rule == RuleKind::midpoint) {
      EXPECT_EQ(mesh.control_volumes().size(), mesh.cell_count());
    }
  }
}

TEST(MeshProperty, RefinedSetPartitionsCells) {
  const BlockSpec b{1, 0.0, 0.2, {-1.0}, {1.0}, {}};
  auto mesh = build_mesh(b, {0.1}, 0.1, RuleKind::midpoint, {2}, 2);
  mesh.set_refined({3, 7, 7});
  std::size_t refined = 0, coarse = 0;
  for (std::size_t f = 0; f < mesh.cell_count(); ++f) (mesh.is_refined(f) ? refined : coarse) += 1;
  EXPECT_EQ(refined, 2u);
  EXPECT_EQ(refined + coarse, mesh.cell_count());
  EXPECT_THROW(mesh.set_refined({mesh.cell_count()}), InvalidArgument);
}
