#pragma once

// Scalar flux models f_i(u) and the space-time flux F(u) = (f_1(u), ..., f_d(u), u).

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lsnn/error.hpp"

namespace lsnn {

// One spatial flux component. Polynomial kinds are evaluated inline; `custom`
// dispatches through user closures.
class ScalarFlux {
 public:
  enum class Kind { zero, linear, half_square, third_cube, quarter_fourth, custom };

  static ScalarFlux zero() { return ScalarFlux(Kind::zero, 0.0); }
  static ScalarFlux linear(double speed) { return ScalarFlux(Kind::linear, speed); }
  static ScalarFlux half_square() { return ScalarFlux(Kind::half_square, 1.0); }
  static ScalarFlux third_cube() { return ScalarFlux(Kind::third_cube, 1.0); }
  static ScalarFlux quarter_fourth() { return ScalarFlux(Kind::quarter_fourth, 1.0); }

  // f'' is optional and only consulted by diagnostics.
  static ScalarFlux custom(std::function<double(double)> f, std::function<double(double)> f_prime,
                           std::function<double(double)> f_double_prime = {}) {
    ScalarFlux s(Kind::custom, 0.0);
    s.f_ = std::move(f);
    s.fp_ = std::move(f_prime);
    s.fpp_ = std::move(f_double_prime);
    return s;
  }

  Kind kind() const { return kind_; }

  double value(double u) const {
    switch (kind_) {
      case Kind::zero: return 0.0;
      case Kind::linear: return coef_ * u;
      case Kind::half_square: return 0.5 * u * u;
      case Kind::third_cube: return u * u * u / 3.0;
      case Kind::quarter_fourth: return 0.25 * (u * u) * (u * u);
      case Kind::custom: return f_(u);
    }
    return 0.0;
  }

  double derivative(double u) const {
    switch (kind_) {
      case Kind::zero: return 0.0;
      case Kind::linear: return coef_;
      case Kind::half_square: return u;
      case Kind::third_cube: return u * u;
      case Kind::quarter_fourth: return u * u * u;
      case Kind::custom: return fp_(u);
    }
    return 0.0;
  }

  std::optional<double> second_derivative(double u) const {
    switch (kind_) {
      case Kind::zero: return 0.0;
      case Kind::linear: return 0.0;
      case Kind::half_square: return 1.0;
      case Kind::third_cube: return 2.0 * u;
      case Kind::quarter_fourth: return 3.0 * u * u;
      case Kind::custom:
        if (fpp_) return fpp_(u);
        return std::nullopt;
    }
    return std::nullopt;
  }

 private:
  ScalarFlux(Kind k, double c) : kind_(k), coef_(c) {}

  Kind kind_;
  double coef_;
  std::function<double(double)> f_, fp_, fpp_;
};

struct FluxModel {
  std::string name;
  std::vector<ScalarFlux> components;  // one per spatial axis

  int dim() const { return static_cast<int>(components.size()); }

  double f(int axis, double u) const { return components[axis].value(u); }
  double f_prime(int axis, double u) const { return components[axis].derivative(u); }

  // Component `axis` of the space-time flux; axis == dim() is the time component u.
  double total_component(int axis, double u) const {
    return axis == dim() ? u : components[axis].value(u);
  }
  double total_component_derivative(int axis, double u) const {
    return axis == dim() ? 1.0 : components[axis].derivative(u);
  }
};

inline std::vector<double> total_flux(const FluxModel& model, double u) {
  std::vector<double> out;
  out.reserve(model.dim() + 1);
  for (const auto& c : model.components) out.push_back(c.value(u));
  out.push_back(u);
  return out;
}

inline FluxModel builtin_flux(std::string_view name) {
  if (name == "burgers1d") return {"burgers1d", {ScalarFlux::half_square()}};
  if (name == "quartic1d") return {"quartic1d", {ScalarFlux::quarter_fourth()}};
  if (name == "cubic1d") return {"cubic1d", {ScalarFlux::third_cube()}};
  if (name == "burgers2d") {
    return {"burgers2d", {ScalarFlux::half_square(), ScalarFlux::half_square()}};
  }
  throw InvalidArgument("unknown flux '" + std::string(name) + "'");
}

inline FluxModel linear_flux(std::vector<double> speeds) {
  FluxModel m{"linear", {}};
  for (double s : speeds) m.components.push_back(ScalarFlux::linear(s));
  return m;
}

}  // namespace lsnn
