#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "lsnn/divergence.hpp"
#include "lsnn/quadrature.hpp"

using namespace lsnn;

namespace {

const RuleKind kRules[] = {RuleKind::midpoint, RuleKind::trapezoidal};

}  // namespace

TEST(Quadrature, ConstantIntegrand) {
  for (RuleKind k : kRules) {
    EXPECT_DOUBLE_EQ(integrate_1d([](double) { return 3.0; }, 0.0, 2.0, CompositeRule(k, 4)), 6.0);
  }
}

TEST(Quadrature, HandEvaluatedSquare) {
  const auto sq = [](double s) { return s * s; };
  EXPECT_DOUBLE_EQ(integrate_1d(sq, 0.0, 1.0, CompositeRule(RuleKind::trapezoidal, 2)), 0.375);
  EXPECT_DOUBLE_EQ(integrate_1d(sq, 0.0, 1.0, CompositeRule(RuleKind::midpoint, 2)), 0.3125);
}

TEST(Quadrature, TwoDimensionalExamples) {
  const Box2 unit{0.0, 1.0, 0.0, 1.0};
  for (RuleKind k : kRules) {
    EXPECT_DOUBLE_EQ(integrate_2d([](double, double) { return 1.0; }, unit, CompositeRule(k, 3),
                                  CompositeRule(k, 5)),
                     1.0);
  }
  const CompositeRule t1(RuleKind::trapezoidal, 1), m2(RuleKind::midpoint, 2);
  EXPECT_DOUBLE_EQ(integrate_2d([](double x, double y) { return x * y; }, unit, t1, t1), 0.25);
  EXPECT_DOUBLE_EQ(integrate_2d([](double x, double y) { return x + y; }, unit, m2, m2), 1.0);
}

TEST(Quadrature, RejectsBadInput) {
  EXPECT_THROW(CompositeRule(RuleKind::midpoint, 0), InvalidArgument);
  EXPECT_THROW(integrate_1d([](double) { return 1.0; }, 1.0, 1.0, CompositeRule()), InvalidArgument);
  EXPECT_THROW(parse_rule("simpson"), InvalidArgument);
  EXPECT_EQ(parse_rule("midpoint"), RuleKind::midpoint);
  EXPECT_EQ(to_string(RuleKind::trapezoidal), "trapezoidal");
}

// Affine integrands are integrated exactly by both rules on any sub-division.
TEST(QuadratureProperty, AffineExactness) {
  const double c = -0.7, d = 2.3;
  const double exact = 1.5 * (d - c) + 0.5 * -4.25 * (d * d - c * c);
  for (RuleKind k : kRules) {
    for (int p : {1, 2, 3, 7, 16, 101}) {
      const double q = integrate_1d([](double s) { return 1.5 - 4.25 * s; }, c, d, CompositeRule(k, p));
      EXPECT_LE(std::abs(q - exact), 1e-13 * std::abs(exact)) << to_string(k) << " p=" << p;
    }
  }
  const Box2 box{-1.0, 0.5, 0.25, 2.0};
  const double exact2 = [&] {
    const double a1 = box.d1 - box.c1, a2 = box.d2 - box.c2;
    const double m1 = 0.5 * (box.c1 + box.d1), m2 = 0.5 * (box.c2 + box.d2);
    return a1 * a2 * (2.0 + 3.0 * m1 - 0.5 * m2);
  }();
  for (RuleKind k : kRules) {
    const double q = integrate_2d([](double x, double y) { return 2.0 + 3.0 * x - 0.5 * y; }, box,
                                  CompositeRule(k, 3), CompositeRule(k, 4));
    EXPECT_LE(std::abs(q - exact2), 1e-13 * std::abs(exact2));
  }
}

TEST(QuadratureProperty, SecondOrderOnSine) {
  const double exact = 1.0 - std::cos(1.0);
  for (RuleKind k : kRules) {
    std::vector<double> ps, errs;
    for (int p : {4, 8, 16, 32, 64}) {
      ps.push_back(p);
      errs.push_back(std::abs(integrate_1d([](double s) { return std::sin(s); }, 0.0, 1.0,
                                           CompositeRule(k, p)) - exact));
    }
    EXPECT_NEAR(fit_order(ps, errs), 2.0, 0.1) << to_string(k);
  }
}

TEST(QuadratureProperty, TicksMatchIntegrate) {
  for (RuleKind k : kRules) {
    for (int p : {1, 2, 5}) {
      const CompositeRule rule(k, p);
      const double c = 0.3, d = 1.9;
      double via_ticks = 0.0;
      for (const RuleTick& t : rule_ticks(rule)) {
        const double s = c + t.tick * (d - c) / (2.0 * p);
        via_ticks += (d - c) * t.weight_fraction * std::exp(s);
      }
      EXPECT_NEAR(via_ticks, integrate_1d([](double s) { return std::exp(s); }, c, d, rule), 1e-13);
    }
  }
}

TEST(QuadratureProperty, CompensatedSumRecoversCancellation) {
  CompensatedSum s;
  s += 1.0;
  for (int i = 0; i < 1000; ++i) s += 1e-16;
  s += -1.0;
  EXPECT_NEAR(s.value(), 1000 * 1e-16, 1e-26);
}
