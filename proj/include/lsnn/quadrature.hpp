#pragma once

// Composite midpoint / trapezoidal rules on intervals and rectangles.

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "lsnn/error.hpp"

namespace lsnn {

enum class RuleKind { midpoint, trapezoidal };

inline std::string_view to_string(RuleKind kind) {
  return kind == RuleKind::midpoint ? "midpoint" : "trapezoidal";
}

inline RuleKind parse_rule(std::string_view name) {
  if (name == "midpoint") return RuleKind::midpoint;
  if (name == "trapezoidal") return RuleKind::trapezoidal;
  throw InvalidArgument("unknown quadrature rule '" + std::string(name) + "'");
}

// Neumaier-compensated accumulator. Summation order is the caller's order, so
// results are reproducible whenever the order is.
class CompensatedSum {
 public:
  CompensatedSum& operator+=(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct CompositeRule {
  RuleKind kind = RuleKind::midpoint;
  int p = 1;  // number of uniform sub-intervals

  CompositeRule() = default;
  CompositeRule(RuleKind k, int sub_intervals) : kind(k), p(sub_intervals) {
    if (p < 1) throw InvalidArgument("composite rule needs p >= 1");
  }
};

// A rule node expressed on the integer lattice {0, 1, ..., 2p} of half
// sub-intervals: position = c + tick * (d - c) / (2p), weight = (d - c) * weight_fraction.
struct RuleTick {
  int tick;
  double weight_fraction;
};

inline std::vector<RuleTick> rule_ticks(const CompositeRule& rule) {
  std::vector<RuleTick> out;
  const int p = rule.p;
  if (rule.kind == RuleKind::midpoint) {
    out.reserve(p);
    for (int i = 0; i < p; ++i) out.push_back({2 * i + 1, 1.0 / p});
  } else {
    out.reserve(p + 1);
    for (int i = 0; i <= p; ++i) {
      const bool end = (i == 0 || i == p);
      out.push_back({2 * i, (end ? 1.0 : 2.0) / (2.0 * p)});
    }
  }
  return out;
}

template <class Fn>
double integrate_1d(Fn&& phi, double c, double d, const CompositeRule& rule) {
  if (!(c < d)) throw InvalidArgument("integrate_1d: need c < d");
  const int p = rule.p;
  const double step = (d - c) / p;
  CompensatedSum acc;
  if (rule.kind == RuleKind::midpoint) {
    for (int i = 0; i < p; ++i) acc += phi(c + (i + 0.5) * step);
    return step * acc.value();
  }
  acc += phi(c);
  acc += phi(d);
  CompensatedSum interior;
  for (int i = 1; i < p; ++i) interior += phi(c + i * step);
  acc += 2.0 * interior.value();
  return (d - c) / (2.0 * p) * acc.value();
}

struct Box2 {
  double c1, d1, c2, d2;
};

// Q(Q(phi(s1, .); c1, d1, p1)(s2); c2, d2, p2)
template <class Fn>
double integrate_2d(Fn&& phi, const Box2& box, const CompositeRule& rule_1,
                    const CompositeRule& rule_2) {
  if (!(box.c1 < box.d1) || !(box.c2 < box.d2)) {
    throw InvalidArgument("integrate_2d: degenerate box");
  }
  return integrate_1d(
      [&](double s2) {
        return integrate_1d([&](double s1) { return phi(s1, s2); }, box.c1, box.d1, rule_1);
      },
      box.c2, box.d2, rule_2);
}

}  // namespace lsnn
