#pragma once

// Discrete divergence operator: the control-volume average of div F(u),
// written as a surface integral of the space-time flux and evaluated with
// composite midpoint/trapezoidal rules on each face. Also hosts the
// discontinuity classifier and the quadrature convergence study.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "lsnn/error.hpp"
#include "lsnn/flux.hpp"
#include "lsnn/geometry.hpp"
#include "lsnn/quadrature.hpp"

namespace lsnn {

struct DivergenceConfig {
  RuleKind rule = RuleKind::trapezoidal;
  std::vector<int> sub_m{2};  // per spatial axis; a single entry is broadcast
  int sub_n = 2;
  int refined_sub_m = 2;  // spatial sub-intervals on cells flagged discontinuous
  int refined_sub_n = 2;  // temporal sub-intervals on flagged cells

  int sub_m_axis(int axis) const { return sub_m.size() == 1 ? sub_m[0] : sub_m.at(axis); }

  void validate() const {
    if (sub_m.empty()) throw InvalidArgument("divergence: sub_m must not be empty");
    for (int m : sub_m) {
      if (m < 1) throw InvalidArgument("divergence: sub_m must be >= 1");
      if (refined_sub_m < m) throw InvalidArgument("divergence: refined_sub_m must be >= sub_m");
    }
    if (sub_n < 1) throw InvalidArgument("divergence: sub_n must be >= 1");
    if (refined_sub_n < sub_n) throw InvalidArgument("divergence: refined_sub_n must be >= sub_n");
  }

  // Sub-interval count per space-time axis for a (possibly refined) cell.
  std::array<int, kMaxAxes> counts(int dim, bool refined) const {
    std::array<int, kMaxAxes> c{};
    for (int a = 0; a < dim; ++a) c[a] = refined ? refined_sub_m : sub_m_axis(a);
    c[dim] = refined ? refined_sub_n : sub_n;
    return c;
  }
};

// delta^-1 Q(sigma(x_i, x_{i+1}; t); t_j, t_{j+1}, n) + h^-1 Q(u(x; t_j, t_{j+1}); x_i, x_{i+1}, m)
template <class U>
double div_t_1d(U&& u, const FluxModel& model, const SpaceTimeBox& cell,
                const DivergenceConfig& cfg, bool refined = false) {
  if (cell.axes != 2 || !(cell.lo[0] < cell.hi[0]) || !(cell.lo[1] < cell.hi[1])) {
    throw InvalidArgument("div_t_1d: degenerate cell");
  }
  const auto sub = cfg.counts(1, refined);
  const double x0 = cell.lo[0], x1 = cell.hi[0], t0 = cell.lo[1], t1 = cell.hi[1];
  const double h = x1 - x0, delta = t1 - t0;
  const auto sigma_quotient = [&](double t) {
    return (model.f(0, u(x1, t)) - model.f(0, u(x0, t))) / h;
  };
  const auto u_quotient = [&](double x) { return (u(x, t1) - u(x, t0)) / delta; };
  return integrate_1d(sigma_quotient, t0, t1, CompositeRule(cfg.rule, sub[1])) / delta +
         integrate_1d(u_quotient, x0, x1, CompositeRule(cfg.rule, sub[0])) / h;
}

// Three face-pair quotients integrated with the tensor-product rule.
template <class U>
double div_t_2d(U&& u, const FluxModel& model, const SpaceTimeBox& cell,
                const DivergenceConfig& cfg, bool refined = false) {
  if (cell.axes != 3) throw InvalidArgument("div_t_2d: degenerate cell");
  for (int a = 0; a < 3; ++a) {
    if (!(cell.lo[a] < cell.hi[a])) throw InvalidArgument("div_t_2d: degenerate cell");
  }
  if (model.dim() != 2) throw InvalidArgument("div_t_2d: flux must be two-dimensional");
  const auto sub = cfg.counts(2, refined);
  const double x0 = cell.lo[0], x1 = cell.hi[0];
  const double y0 = cell.lo[1], y1 = cell.hi[1];
  const double t0 = cell.lo[2], t1 = cell.hi[2];
  const double h1 = x1 - x0, h2 = y1 - y0, delta = t1 - t0;
  const CompositeRule rx(cfg.rule, sub[0]), ry(cfg.rule, sub[1]), rt(cfg.rule, sub[2]);

  const auto sigma1 = [&](double y, double t) {
    return (model.f(0, u(x1, y, t)) - model.f(0, u(x0, y, t))) / h1;
  };
  const auto sigma2 = [&](double x, double t) {
    return (model.f(1, u(x, y1, t)) - model.f(1, u(x, y0, t))) / h2;
  };
  const auto u_quotient = [&](double x, double y) { return (u(x, y, t1) - u(x, y, t0)) / delta; };

  return integrate_2d(sigma1, {y0, y1, t0, t1}, ry, rt) / (h2 * delta) +
         integrate_2d(sigma2, {x0, x1, t0, t1}, rx, rt) / (h1 * delta) +
         integrate_2d(u_quotient, {x0, x1, y0, y1}, rx, ry) / (h1 * h2);
}

// Default sharpness threshold: 5 (max u - min u) h over the sampled nodes.
inline double default_sharpness_threshold(const std::vector<double>& node_values, double h) {
  if (node_values.empty()) return 0.0;
  const auto [mn, mx] = std::minmax_element(node_values.begin(), node_values.end());
  return 5.0 * (*mx - *mn) * h;
}

// Flags space-time cell columns that may contain a discontinuity during the
// block, from the previous trace u_prev(x) at the block start (1-D only).
//   (1) a sharp change |u(x_{i+1}) - u(x_i)| > threshold flags V_i, plus V_{i-1}
//       when xhat_i < x_i and V_{i+1} when xhat_{i+1} > x_{i+1};
//   (2) crossing characteristics xhat_i > xhat_{i+1} with xhat_i < x_{i+1} flag V_i,
// where xhat_i = x_i + (t_hi - t_lo) f'(u_prev(x_i)). Crossings are detected
// pairwise between neighbouring nodes only.
// A negative threshold selects default_sharpness_threshold.
template <class Trace>
std::vector<std::size_t> classify_cells(const IntegrationMesh& mesh, const FluxModel& model,
                                        Trace&& u_prev, double sharpness_threshold = -1.0) {
  if (mesh.dim() != 1) throw InvalidArgument("classify_cells: only one spatial dimension is supported");
  const int m = mesh.cells_along(0);
  const int n = mesh.cells_along(1);
  const double dt = mesh.hi(1) - mesh.lo(1);
  std::vector<double> x(m + 1), u(m + 1), xhat(m + 1);
  for (int i = 0; i <= m; ++i) {
    x[i] = mesh.coordinate(0, i);
    u[i] = u_prev(x[i]);
    xhat[i] = x[i] + dt * model.f_prime(0, u[i]);
  }
  const double threshold = sharpness_threshold < 0.0
                               ? default_sharpness_threshold(u, mesh.cell_size(0))
                               : sharpness_threshold;
  std::vector<char> column(m, 0);
  for (int i = 0; i < m; ++i) {
    if (std::abs(u[i + 1] - u[i]) > threshold) {
      column[i] = 1;
      if (i > 0 && xhat[i] < x[i]) column[i - 1] = 1;
      if (i + 1 < m && xhat[i + 1] > x[i + 1]) column[i + 1] = 1;
    }
    if (xhat[i] > xhat[i + 1] && xhat[i] < x[i + 1]) column[i] = 1;
  }
  std::vector<std::size_t> cells;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) {
      if (column[i]) cells.push_back(mesh.flat(CellIndex{{i, j, 0}}));
    }
  }
  std::sort(cells.begin(), cells.end());
  return cells;
}

struct ConvergenceRow {
  int m_hat = 1;
  int n_hat = 1;
  double error = 0.0;
  double jump_total = 0.0;
};

struct ConvergenceStudyReport {
  std::vector<ConvergenceRow> rows;
  double fitted_order = std::numeric_limits<double>::quiet_NaN();
  std::string refinement;  // "m_hat", "n_hat" or "both"

  std::string to_csv() const {
    std::ostringstream os;
    os << "m_hat,n_hat,error,jump_total\n";
    os << std::setprecision(17);
    for (const auto& r : rows) {
      os << r.m_hat << ',' << r.n_hat << ',' << r.error << ',' << r.jump_total << '\n';
    }
    return os.str();
  }
};

// Least-squares slope of -log(error) against log(k); NaN with fewer than 3
// strictly positive errors.
inline double fit_order(const std::vector<double>& k, const std::vector<double>& error) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (error[i] > 0.0 && std::isfinite(error[i])) {
      lx.push_back(std::log(k[i]));
      ly.push_back(std::log(error[i]));
    }
  }
  if (lx.size() < 3) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return -(n * sxy - sx * sy) / denom;
}

struct SubIntervalPair {
  int m_hat;
  int n_hat;
};

// Tabulates |div_T F(u) - avg_K div F(u)| over a ladder of sub-interval counts.
// `exact_average` is the cell average of div F(u), supplied by the caller.
template <class U>
ConvergenceStudyReport convergence_study(U&& u, const FluxModel& model, const SpaceTimeBox& cell,
                                         RuleKind rule, const std::vector<SubIntervalPair>& ladder,
                                         double exact_average, double jump_total = 0.0) {
  if (ladder.size() < 3) throw InvalidArgument("convergence_study: need at least 3 rule pairs");
  ConvergenceStudyReport rep;
  bool m_varies = false, n_varies = false;
  for (const auto& p : ladder) {
    m_varies |= p.m_hat != ladder.front().m_hat;
    n_varies |= p.n_hat != ladder.front().n_hat;
  }
  rep.refinement = (m_varies && n_varies) ? "both" : (n_varies ? "n_hat" : "m_hat");
  std::vector<double> k, err;
  for (const auto& p : ladder) {
    DivergenceConfig cfg;
    cfg.rule = rule;
    cfg.sub_m = {p.m_hat};
    cfg.sub_n = p.n_hat;
    cfg.refined_sub_m = p.m_hat;
    cfg.refined_sub_n = p.n_hat;
    double value;
    if constexpr (std::is_invocable_v<U, double, double>) {
      value = div_t_1d(u, model, cell, cfg);
    } else {
      value = div_t_2d(u, model, cell, cfg);
    }
    const double e = std::abs(value - exact_average);
    rep.rows.push_back({p.m_hat, p.n_hat, e, jump_total});
    if (rep.refinement == "both") {
      k.push_back(std::sqrt(static_cast<double>(p.m_hat) * p.n_hat));
    } else {
      k.push_back(rep.refinement == "n_hat" ? p.n_hat : p.m_hat);
    }
    err.push_back(e);
  }
  rep.fitted_order = fit_order(k, err);
  return rep;
}

// Manufactured fields on a 1-D cell with closed-form cell averages of div F(u)
// for the Burgers flux. Step fields place their interface crossings at 1/3 and
// 2/3 of the crossed edges so that no dyadic rule node ever lands on a jump.
struct ManufacturedSolution {
  std::string name;
  std::function<double(double, double)> u;
  double exact_average = 0.0;
  double jump_total = 0.0;
  std::string default_refinement;  // "both", "m_hat" or "n_hat"
};

inline ManufacturedSolution manufactured_solution(const std::string& name, const SpaceTimeBox& cell) {
  if (cell.axes != 2) throw InvalidArgument("manufactured_solution: needs a 1-D space-time cell");
  const double x0 = cell.lo[0], x1 = cell.hi[0], t0 = cell.lo[1], t1 = cell.hi[1];
  const double h = x1 - x0, delta = t1 - t0, area = h * delta;
  ManufacturedSolution s;
  s.name = name;
  if (name == "smooth_sine") {
    s.u = [](double x, double t) { return std::sin(x) * std::cos(t); };
    const auto cos2_integral = [](double t) { return 0.5 * t + 0.25 * std::sin(2.0 * t); };
    const double sx = std::sin(x1) * std::sin(x1) - std::sin(x0) * std::sin(x0);
    const double flux_part = 0.5 * sx * (cos2_integral(t1) - cos2_integral(t0));
    const double time_part = (std::cos(t1) - std::cos(t0)) * (std::cos(x0) - std::cos(x1));
    s.exact_average = (flux_part + time_part) / area;
    s.default_refinement = "both";
  } else if (name == "step_horizontal") {
    // u = 1 left of x = x0 + h/3 + (h / (3 delta)) (t - t0), 0 right of it.
    s.u = [=](double x, double t) { return x < x0 + h / 3.0 + h * (t - t0) / (3.0 * delta) ? 1.0 : 0.0; };
    s.exact_average = (h / 3.0 - 0.5 * delta) / area;
    s.jump_total = 2.0;
    s.default_refinement = "m_hat";
  } else if (name == "step_vertical") {
    // u = 1 above t = t0 + delta/3 + (delta / (3 h)) (x - x0), 0 below it.
    s.u = [=](double x, double t) { return t > t0 + delta / 3.0 + delta * (x - x0) / (3.0 * h) ? 1.0 : 0.0; };
    s.exact_average = (h - delta / 6.0) / area;
    s.jump_total = 2.0;
    s.default_refinement = "n_hat";
  } else if (name == "step_mixed") {
    // Interface from (x0 + h/3, t0) to (x1, t0 + delta/3); u = 1 on its left.
    s.u = [=](double x, double t) { return x < x0 + h / 3.0 + 2.0 * h * (t - t0) / delta ? 1.0 : 0.0; };
    s.exact_average = (2.0 * h / 3.0 - delta / 6.0) / area;
    s.jump_total = 2.0;
    s.default_refinement = "both";
  } else {
    throw InvalidArgument("unknown manufactured solution '" + name + "'");
  }
  return s;
}

}  // namespace lsnn
