#pragma once

// Exact Riemann solutions, a characteristic tracer for smooth data, a WENO3 +
// RK4 finite-volume reference solver, and the relative L2 error metric.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "lsnn/error.hpp"
#include "lsnn/flux.hpp"
#include "lsnn/geometry.hpp"
#include "lsnn/quadrature.hpp"

namespace lsnn {

struct WaveInfo {
  enum class Kind { shock, rarefaction };
  Kind kind;
  double xi_lo;    // shock speed, or left fan edge
  double xi_hi;    // shock speed, or right fan edge
  double u_left;   // state on the left of the wave
  double u_right;  // state on the right of the wave
};

struct ExactSolution {
  std::string name;
  int dim = 1;
  double t_max = std::numeric_limits<double>::infinity();  // validity horizon
  std::function<double(const std::array<double, kMaxAxes>&)> evaluator;
  std::vector<WaveInfo> waves;

  double operator()(const std::array<double, kMaxAxes>& z) const { return evaluator(z); }
  double operator()(double x, double t) const { return evaluator({x, t, 0.0}); }
};

namespace detail {
// Similarity solution u(x / t) of a 1-D Riemann problem; at t = 0 the data
// itself, with the mean value at the jump.
inline ExactSolution similarity_solution(std::string name, double u_l, double u_r,
                                         std::function<double(double)> profile) {
  ExactSolution s;
  s.name = std::move(name);
  s.evaluator = [u_l, u_r, profile](const std::array<double, kMaxAxes>& z) {
    const double x = z[0], t = z[1];
    if (t <= 0.0) return x < 0.0 ? u_l : (x > 0.0 ? u_r : 0.5 * (u_l + u_r));
    return profile(x / t);
  };
  return s;
}
}  // namespace detail

inline ExactSolution riemann_burgers(double u_l, double u_r) {
  if (u_l > u_r) {
    const double s = 0.5 * (u_l + u_r);
    auto sol = detail::similarity_solution("riemann_burgers", u_l, u_r, [=](double xi) {
      return xi < s ? u_l : (xi > s ? u_r : 0.5 * (u_l + u_r));
    });
    sol.waves.push_back({WaveInfo::Kind::shock, s, s, u_l, u_r});
    return sol;
  }
  auto sol = detail::similarity_solution("riemann_burgers", u_l, u_r,
                                         [=](double xi) { return std::clamp(xi, u_l, u_r); });
  if (u_l < u_r) sol.waves.push_back({WaveInfo::Kind::rarefaction, u_l, u_r, u_l, u_r});
  return sol;
}

inline ExactSolution riemann_quartic(double u_l, double u_r) {
  if (u_l < u_r) throw UnimplementedCase("riemann_quartic: only u_l >= u_r (shock) is supported");
  const auto f = [](double u) { return 0.25 * u * u * u * u; };
  if (u_l == u_r) {
    return detail::similarity_solution("riemann_quartic", u_l, u_r, [=](double) { return u_l; });
  }
  const double s = (f(u_l) - f(u_r)) / (u_l - u_r);
  auto sol = detail::similarity_solution("riemann_quartic", u_l, u_r, [=](double xi) {
    return xi < s ? u_l : (xi > s ? u_r : 0.5 * (u_l + u_r));
  });
  sol.waves.push_back({WaveInfo::Kind::shock, s, s, u_l, u_r});
  return sol;
}

namespace detail {
// Osher's formula for f(u) = u^3 / 3:
//   u(xi) = argmin_{u in [u_l, u_r]} (f(u) - xi u)  if u_l <= u_r,
//           argmax_{u in [u_r, u_l]} (f(u) - xi u)  otherwise.
// Candidates are the endpoints and the stationary points u = +-sqrt(xi).
struct OsherPoint {
  double u;
  bool stationary;
};

inline OsherPoint cubic_osher_point(double u_l, double u_r, double xi) {
  const double lo = std::min(u_l, u_r), hi = std::max(u_l, u_r);
  const bool minimize = u_l <= u_r;
  const auto g = [xi](double u) { return u * u * u / 3.0 - xi * u; };
  OsherPoint best{u_l, false};
  double best_g = g(u_l);
  const auto consider = [&](double u, bool stationary) {
    if (u < lo || u > hi) return;
    const double v = g(u);
    if (minimize ? v < best_g : v > best_g) {
      best_g = v;
      best = {u, stationary};
    }
  };
  consider(u_r, false);
  if (xi >= 0.0) {
    consider(std::sqrt(xi), true);
    consider(-std::sqrt(xi), true);
  }
  return best;
}

// Left/right limits of the similarity profile around a jump at xi, snapped to
// the tangency state -u/2 when the jump touches a fan.
inline double snap_tangent(double u_other, double u) {
  const double tangent = -0.5 * u_other;
  return std::abs(u - tangent) < 1e-6 ? tangent : u;
}
}  // namespace detail

inline ExactSolution riemann_cubic_osher(double u_l, double u_r) {
  auto sol = detail::similarity_solution("riemann_cubic_osher", u_l, u_r, [=](double xi) {
    return detail::cubic_osher_point(u_l, u_r, xi).u;
  });
  if (u_l == u_r) return sol;
  // Wave structure: scan xi across the characteristic speeds, split into
  // constant / fan runs, and bisect each discontinuity.
  const auto fp = [](double u) { return u * u; };
  const double lo = std::min(u_l, u_r), hi = std::max(u_l, u_r);
  double speed_max = std::max(fp(lo), fp(hi));
  const double speed_min = (lo <= 0.0 && hi >= 0.0) ? 0.0 : std::min(fp(lo), fp(hi));
  const double a = speed_min - 1.0, b = speed_max + 1.0;
  const int samples = 20000;
  const auto point = [&](double xi) { return detail::cubic_osher_point(u_l, u_r, xi); };
  const auto jump_at = [&](double xa, double xb) {
    for (int k = 0; k < 200 && xb - xa > 1e-15 * std::max(1.0, std::abs(xa)); ++k) {
      const double xm = 0.5 * (xa + xb);
      if (std::abs(point(xm).u - point(xa).u) > std::abs(point(xb).u - point(xm).u)) {
        xb = xm;
      } else {
        xa = xm;
      }
    }
    return std::pair<double, double>{xa, xb};
  };
  const double step = (b - a) / samples;
  double fan_start = std::numeric_limits<double>::quiet_NaN();
  double fan_u0 = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double xa = a + i * step, xb = a + (i + 1) * step;
    const auto pa = point(xa), pb = point(xb);
    if (pb.stationary && !pa.stationary) {
      // Fan begins in (xa, xb]; either smoothly or behind a shock.
      const auto [ja, jb] = jump_at(xa, xb);
      const double ul = point(ja).u;
      const double ur = point(jb).u;
      if (std::abs(ur - ul) > 1e-6) {
        const double right = detail::snap_tangent(ul, ur);
        const double s = (right * right * right / 3.0 - ul * ul * ul / 3.0) / (right - ul);
        sol.waves.push_back({WaveInfo::Kind::shock, s, s, ul, right});
        fan_start = s;
        fan_u0 = right;
      } else {
        fan_u0 = pa.u;
        fan_start = fp(pa.u);
      }
    } else if (pa.stationary && !pb.stationary) {
      const auto [ja, jb] = jump_at(xa, xb);
      const double ul = point(ja).u;
      const double ur = point(jb).u;
      const bool jump = std::abs(ur - ul) > 1e-6;
      const double left = jump ? detail::snap_tangent(ur, ul) : pb.u;
      sol.waves.push_back({WaveInfo::Kind::rarefaction, fan_start, fp(left), fan_u0, left});
      if (jump) {
        const double s = (ur * ur * ur / 3.0 - left * left * left / 3.0) / (ur - left);
        sol.waves.push_back({WaveInfo::Kind::shock, s, s, left, ur});
      }
    } else if (!pa.stationary && !pb.stationary && pa.u != pb.u) {
      const double s = (u_r * u_r * u_r / 3.0 - u_l * u_l * u_l / 3.0) / (u_r - u_l);
      sol.waves.push_back({WaveInfo::Kind::shock, s, s, pa.u, pb.u});
    }
  }
  return sol;
}

// Smooth-data solution by Newton iteration on u = u0(x - f'(u) t), valid
// before characteristics cross. Periodic data may be passed as is.
inline ExactSolution characteristic_solution(const FluxModel& model,
                                             std::function<double(double)> u0,
                                             std::function<double(double)> u0_prime, double t_max) {
  if (model.dim() != 1) throw InvalidArgument("characteristic_solution: 1-D flux required");
  const ScalarFlux f = model.components[0];
  ExactSolution s;
  s.name = "characteristic";
  s.t_max = t_max;
  s.evaluator = [f, u0, u0_prime](const std::array<double, kMaxAxes>& z) {
    const double x = z[0], t = z[1];
    double u = u0(x);
    for (int it = 0; it < 100; ++it) {
      const double xi = x - f.derivative(u) * t;
      const double fpp = f.second_derivative(u).value_or(0.0);
      const double r = u - u0(xi);
      const double dr = 1.0 + u0_prime(xi) * fpp * t;
      const double du = r / dr;
      u -= du;
      if (std::abs(du) <= 1e-15 * std::max(1.0, std::abs(u))) break;
    }
    return u;
  };
  return s;
}

// Ghost-cell policy of the reference solver.
struct ReferenceBoundary {
  bool periodic = false;
  // Ghost values for non-periodic sides: (x, y, t) -> u; y is ignored in 1-D.
  std::function<double(double, double, double)> ghost;
};

struct ReferenceSolution {
  int dim = 1;
  std::array<double, 2> lo{};
  std::array<double, 2> hi{};
  std::array<int, 2> cells{1, 1};
  double dt = 0.0;  // nominal step
  bool periodic = false;
  std::string scheme = "weno3-lf + rk4";
  std::vector<double> times;
  std::vector<std::vector<double>> snapshots;  // cell averages, x fastest
  std::vector<double> mass;                    // sum u dx (dy) per snapshot
  std::vector<double> boundary_outflow;        // time-integrated net boundary flux per snapshot

  double dx(int axis) const { return (hi[axis] - lo[axis]) / cells[axis]; }
  double centre(int axis, int i) const { return lo[axis] + (i + 0.5) * dx(axis); }

  // Piecewise-linear in space between cell centres (clamped, or wrapped when
  // periodic) and linear in time between snapshots.
  double evaluate(const std::array<double, kMaxAxes>& z) const {
    const double t = z[dim];
    if (times.empty()) throw InvalidArgument("reference: no snapshots");
    const double tol = 1e-9;
    if (t < times.front() - tol || t > times.back() + tol) {
      throw InvalidArgument("reference: time " + std::to_string(t) + " outside snapshot range");
    }
    std::size_t k = std::lower_bound(times.begin(), times.end(), t - tol) - times.begin();
    if (k >= times.size()) k = times.size() - 1;
    if (std::abs(times[k] - t) <= tol) return spatial(k, z);
    const std::size_t k0 = k - 1;
    const double w = (t - times[k0]) / (times[k] - times[k0]);
    return (1.0 - w) * spatial(k0, z) + w * spatial(k, z);
  }

  double operator()(const std::array<double, kMaxAxes>& z) const { return evaluate(z); }

  std::string snapshot_csv(std::size_t k) const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << (dim == 1 ? "x,t,u\n" : "x,y,t,u\n");
    const auto& s = snapshots.at(k);
    for (int j = 0; j < (dim == 2 ? cells[1] : 1); ++j) {
      for (int i = 0; i < cells[0]; ++i) {
        os << centre(0, i) << ',';
        if (dim == 2) os << centre(1, j) << ',';
        os << times[k] << ',' << s[static_cast<std::size_t>(j) * cells[0] + i] << '\n';
      }
    }
    return os.str();
  }

 private:
  // Linear interpolation weights along one axis.
  void bracket(int axis, double x, int& i0, int& i1, double& w) const {
    const int n = cells[axis];
    double s = (x - lo[axis]) / dx(axis) - 0.5;
    if (periodic) {
      const double fl = std::floor(s);
      w = s - fl;
      i0 = static_cast<int>(((static_cast<long long>(fl) % n) + n) % n);
      i1 = (i0 + 1) % n;
      return;
    }
    s = std::clamp(s, 0.0, static_cast<double>(n - 1));
    i0 = std::min(static_cast<int>(std::floor(s)), n - 1);
    i1 = std::min(i0 + 1, n - 1);
    w = s - i0;
  }

  double spatial(std::size_t k, const std::array<double, kMaxAxes>& z) const {
    const auto& s = snapshots[k];
    int i0, i1;
    double wx;
    bracket(0, z[0], i0, i1, wx);
    if (dim == 1) return (1.0 - wx) * s[i0] + wx * s[i1];
    int j0, j1;
    double wy;
    bracket(1, z[1], j0, j1, wy);
    const auto at = [&](int i, int j) { return s[static_cast<std::size_t>(j) * cells[0] + i]; };
    return (1.0 - wy) * ((1.0 - wx) * at(i0, j0) + wx * at(i1, j0)) +
           wy * ((1.0 - wx) * at(i0, j1) + wx * at(i1, j1));
  }
};

namespace detail {

// WENO3 interface value from a left-biased stencil (a = v_{i-1}, b = v_i, c = v_{i+1}).
inline double weno3(double a, double b, double c, double eps) {
  const double p0 = -0.5 * a + 1.5 * b;
  const double p1 = 0.5 * b + 0.5 * c;
  const double b0 = (b - a) * (b - a);
  const double b1 = (c - b) * (c - b);
  const double a0 = (1.0 / 3.0) / ((eps + b0) * (eps + b0));
  const double a1 = (2.0 / 3.0) / ((eps + b1) * (eps + b1));
  return (a0 * p0 + a1 * p1) / (a0 + a1);
}

// Numerical fluxes at the n + 1 interfaces of a line of n cells with two ghost
// cells per side (v has n + 4 entries), global Lax-Friedrichs splitting.
inline void line_fluxes(const ScalarFlux& f, const double* v, int n, double alpha, double eps,
                        double* out, std::vector<double>& fp, std::vector<double>& fm) {
  fp.resize(n + 4);
  fm.resize(n + 4);
  for (int i = 0; i < n + 4; ++i) {
    const double fv = f.value(v[i]);
    fp[i] = 0.5 * (fv + alpha * v[i]);
    fm[i] = 0.5 * (fv - alpha * v[i]);
  }
  // Interface k sits between padded cells k + 1 and k + 2.
  for (int k = 0; k <= n; ++k) {
    const int i = k + 1;
    out[k] = weno3(fp[i - 1], fp[i], fp[i + 1], eps) + weno3(fm[i + 2], fm[i + 1], fm[i], eps);
  }
}

}  // namespace detail

struct ReferenceGrid {
  std::array<double, 2> lo{};
  std::array<double, 2> hi{};
  std::array<int, 2> cells{1, 1};
};

// Finite-volume WENO3 (Lax-Friedrichs splitting) with classical RK4. Cell
// averages are initialised from the point values at cell centres. Snapshots
// are taken exactly at `output_times` (steps are shortened to land on them).
// Throws CflViolation when dt sum_a max|f_a'(u)| / dx_a exceeds `cfl_max`.
inline ReferenceSolution weno3_rk4_reference(const FluxModel& model, const PointFunction& u0,
                                             const ReferenceGrid& grid, double dt,
                                             std::vector<double> output_times,
                                             const ReferenceBoundary& boundary,
                                             double cfl_max = 1.0) {
  const int dim = model.dim();
  if (dim < 1 || dim > 2) throw InvalidArgument("reference: 1-D or 2-D flux required");
  if (!(dt > 0.0)) throw InvalidArgument("reference: dt must be > 0");
  if (!boundary.periodic && !boundary.ghost) throw InvalidArgument("reference: ghost values missing");
  std::sort(output_times.begin(), output_times.end());
  if (output_times.empty() || output_times.front() < 0.0) {
    throw InvalidArgument("reference: output times must be non-empty and >= 0");
  }
  ReferenceSolution ref;
  ref.dim = dim;
  ref.lo = grid.lo;
  ref.hi = grid.hi;
  ref.cells = grid.cells;
  if (dim == 1) ref.cells[1] = 1;
  ref.dt = dt;
  ref.periodic = boundary.periodic;
  const int nx = ref.cells[0], ny = ref.cells[1];
  if (nx < 3 || (dim == 2 && ny < 3)) throw InvalidArgument("reference: need at least 3 cells per axis");
  const double hx = ref.dx(0), hy = dim == 2 ? ref.dx(1) : 1.0;
  const double cell_measure = hx * hy;
  const std::size_t N = static_cast<std::size_t>(nx) * ny;

  // Cell averages of the initial data by 3-point Gauss-Legendre per axis.
  const double gx[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  std::vector<double> u(N);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double avg = 0.0;
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < (dim == 2 ? 3 : 1); ++b) {
          std::array<double, kMaxAxes> z{};
          z[0] = ref.centre(0, i) + 0.5 * hx * gx[a];
          if (dim == 2) z[1] = ref.centre(1, j) + 0.5 * hy * gx[b];
          avg += gw[a] * (dim == 2 ? gw[b] : 1.0) * u0(z);
        }
      }
      u[static_cast<std::size_t>(j) * nx + i] = avg;
    }
  }

  const auto max_speed = [&](int axis, const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(model.f_prime(axis, x)));
    return m;
  };

  std::vector<double> line, fp, fm, flux;
  // rhs = -div of numerical fluxes; returns net boundary outflow rate (per unit mass).
  const auto rhs = [&](const std::vector<double>& v, double t, std::vector<double>& out) {
    out.assign(N, 0.0);
    double outflow = 0.0;
    for (int axis = 0; axis < dim; ++axis) {
      const int n = axis == 0 ? nx : ny;
      const int lines = axis == 0 ? ny : nx;
      const double h = axis == 0 ? hx : hy;
      const double alpha = std::max(max_speed(axis, v), 1e-300);
      const double eps = h * h;
      line.resize(n + 4);
      flux.resize(n + 1);
      for (int l = 0; l < lines; ++l) {
        const auto idx = [&](int k) {
          return axis == 0 ? static_cast<std::size_t>(l) * nx + k : static_cast<std::size_t>(k) * nx + l;
        };
        for (int k = 0; k < n; ++k) line[k + 2] = v[idx(k)];
        if (boundary.periodic) {
          line[0] = v[idx(n - 2)];
          line[1] = v[idx(n - 1)];
          line[n + 2] = v[idx(0)];
          line[n + 3] = v[idx(1)];
        } else {
          const double other = dim == 2 ? ref.centre(axis == 0 ? 1 : 0, l) : 0.0;
          const double lo_edge = ref.lo[axis], hi_edge = ref.hi[axis];
          for (int g = 0; g < 2; ++g) {
            const double xl = lo_edge - (g + 0.5) * h;
            const double xr = hi_edge + (g + 0.5) * h;
            line[1 - g] = axis == 0 ? boundary.ghost(xl, other, t) : boundary.ghost(other, xl, t);
            line[n + 2 + g] = axis == 0 ? boundary.ghost(xr, other, t) : boundary.ghost(other, xr, t);
          }
        }
        detail::line_fluxes(model.components[axis], line.data(), n, alpha, eps, flux.data(), fp, fm);
        for (int k = 0; k < n; ++k) out[idx(k)] -= (flux[k + 1] - flux[k]) / h;
        const double other_h = axis == 0 ? hy : hx;
        outflow += (flux[n] - flux[0]) * (dim == 2 ? other_h : 1.0);
      }
    }
    return outflow;
  };

  const auto total_mass = [&](const std::vector<double>& v) {
    CompensatedSum s;
    for (double x : v) s += x * cell_measure;
    return s.value();
  };

  double t = 0.0;
  CompensatedSum outflow;
  std::vector<double> k1, k2, k3, k4, tmp(N);
  const auto record = [&]() {
    ref.times.push_back(t);
    ref.snapshots.push_back(u);
    ref.mass.push_back(total_mass(u));
    ref.boundary_outflow.push_back(outflow.value());
  };
  for (double t_out : output_times) {
    if (t_out <= t + 1e-14) {
      if (ref.times.empty() || t_out > ref.times.back()) record();
      continue;
    }
    const long steps = static_cast<long>(std::ceil((t_out - t) / dt - 1e-9));
    const double step = (t_out - t) / steps;
    const double t_start = t;
    for (long s = 0; s < steps; ++s) {
      double cfl = 0.0;
      for (int axis = 0; axis < dim; ++axis) cfl += step * max_speed(axis, u) / (axis == 0 ? hx : hy);
      if (cfl > cfl_max) {
        double speed = 0.0;
        for (int axis = 0; axis < dim; ++axis) speed += max_speed(axis, u) / (axis == 0 ? hx : hy);
        throw CflViolation("reference: CFL number " + std::to_string(cfl) + " exceeds " +
                               std::to_string(cfl_max),
                           0.9 * cfl_max / speed);
      }
      const double tn = t_start + s * step;
      const double o1 = rhs(u, tn, k1);
      for (std::size_t i = 0; i < N; ++i) tmp[i] = u[i] + 0.5 * step * k1[i];
      const double o2 = rhs(tmp, tn + 0.5 * step, k2);
      for (std::size_t i = 0; i < N; ++i) tmp[i] = u[i] + 0.5 * step * k2[i];
      const double o3 = rhs(tmp, tn + 0.5 * step, k3);
      for (std::size_t i = 0; i < N; ++i) tmp[i] = u[i] + step * k3[i];
      const double o4 = rhs(tmp, tn + step, k4);
      for (std::size_t i = 0; i < N; ++i) {
        u[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      }
      outflow += step / 6.0 * (o1 + 2.0 * o2 + 2.0 * o3 + o4);
    }
    t = t_out;
    record();
  }
  return ref;
}

// Reference for the four-quadrant 2-D Burgers problem on (0,1)^2: u0 from the
// quadrant constants, ghost values from the exact 1-D Riemann solution along
// each boundary line (the jump there sits at 0.5 on the tangential axis).
inline double burgers2d_initial(double x, double y) {
  if (y > 0.5) return x < 0.5 ? -0.2 : -1.0;
  return x < 0.5 ? 0.5 : 0.8;
}

inline double burgers2d_boundary_value(double x, double y, double t) {
  // Left/right sides: a 1-D problem in y between the lower and upper quadrants.
  // Bottom/top sides: a 1-D problem in x between the left and right quadrants.
  const bool side_x = x <= 0.0 || x >= 1.0;
  const bool side_y = y <= 0.0 || y >= 1.0;
  if (side_x && !side_y) {
    const double lower = burgers2d_initial(x, 0.25), upper = burgers2d_initial(x, 0.75);
    return riemann_burgers(lower, upper)(y - 0.5, t);
  }
  if (side_y) {
    const double left = burgers2d_initial(0.25, y), right = burgers2d_initial(0.75, y);
    return riemann_burgers(left, right)(x - 0.5, t);
  }
  return burgers2d_initial(x, y);
}

inline ReferenceSolution exact_2d_burgers_reference(double dx, const std::vector<double>& output_times) {
  ReferenceGrid grid;
  grid.lo = {0.0, 0.0};
  grid.hi = {1.0, 1.0};
  const int n = static_cast<int>(std::llround(1.0 / dx));
  grid.cells = {n, n};
  ReferenceBoundary b;
  b.ghost = burgers2d_boundary_value;
  // Speeds stay within [-1, 0.8]; 0.4 keeps the 2-D CFL sum below 1.
  return weno3_rk4_reference(
      builtin_flux("burgers2d"),
      [](const std::array<double, kMaxAxes>& z) { return burgers2d_initial(z[0], z[1]); }, grid,
      0.4 * dx, output_times, b);
}

// Relative L2 error over `region` on a tensor grid of spacing ~ `spacing`
// (one entry per axis) with trapezoidal weights.
template <class Numeric, class Truth>
double relative_l2_error(Numeric&& u_numeric, Truth&& u_truth, const SpaceTimeBox& region,
                         const std::vector<double>& spacing) {
  if (static_cast<int>(spacing.size()) != region.axes) {
    throw InvalidArgument("relative_l2_error: need one spacing per axis");
  }
  std::array<int, kMaxAxes> n{};
  for (int a = 0; a < region.axes; ++a) {
    if (!(spacing[a] > 0.0)) throw InvalidArgument("relative_l2_error: spacing must be > 0");
    n[a] = std::max(1, static_cast<int>(std::llround(region.extent(a) / spacing[a])));
  }
  CompensatedSum num, den;
  std::array<int, kMaxAxes> i{};
  while (true) {
    std::array<double, kMaxAxes> z{};
    double w = 1.0;
    for (int a = 0; a < region.axes; ++a) {
      z[a] = i[a] == n[a] ? region.hi[a]
                          : region.lo[a] + region.extent(a) * (static_cast<double>(i[a]) / n[a]);
      if (i[a] == 0 || i[a] == n[a]) w *= 0.5;
    }
    const double ut = u_truth(z);
    const double diff = u_numeric(z) - ut;
    num += w * diff * diff;
    den += w * ut * ut;
    int a = 0;
    for (; a < region.axes; ++a) {
      if (++i[a] <= n[a]) break;
      i[a] = 0;
    }
    if (a == region.axes) break;
  }
  if (!(den.value() > 0.0)) throw InvalidArgument("relative_l2_error: reference norm is zero");
  return std::sqrt(num.value() / den.value());
}

}  // namespace lsnn
