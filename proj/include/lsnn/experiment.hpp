#pragma once

// Config-driven experiments: config resolution and validation, truth sources,
// the run pipeline (training, errors, traces, checkpoints, manifest), the
// quadrature convergence study and the report command.

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lsnn/checkpoint.hpp"
#include "lsnn/divergence.hpp"
#include "lsnn/error.hpp"
#include "lsnn/flux.hpp"
#include "lsnn/geometry.hpp"
#include "lsnn/loss.hpp"
#include "lsnn/network.hpp"
#include "lsnn/oracles.hpp"
#include "lsnn/trainer.hpp"

#ifndef LSNN_PRESET_DIR
#define LSNN_PRESET_DIR "presets"
#endif

namespace lsnn {

using json = nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";

struct TrainingSpec {
  long iterations = 1000;
  LrSchedule schedule = LrSchedule::constant(0.003);
};

struct TruthSpec {
  std::string source = "exact";  // exact | weno3 | reference2d
  double dx = 0.001;
  double dt = 0.0002;
};

struct ExperimentConfig {
  std::string problem;
  std::string flux;
  double u_left = 0.0;
  double u_right = 0.0;
  SpaceTimeDomain domain;
  int n_b = 1;
  std::vector<int> layers;
  std::vector<double> h;
  double delta = 0.01;
  RuleKind mesh_rule = RuleKind::midpoint;
  DivergenceConfig div;
  bool classify = false;
  double sharpness_threshold = -1.0;
  double alpha = 20.0;
  std::vector<Face> inflow_faces;
  int boundary_sub_intervals = 1;
  TrainingSpec training;
  std::optional<TrainingSpec> first_block;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_epsilon = 1e-8;
  long history_every = 100;
  long log_every = 0;
  int max_blocks = 0;  // train only the first max_blocks blocks (0 = all)
  std::uint64_t seed = 0;
  TruthSpec truth;
  std::string out_dir = "run";
  std::vector<double> trace_times;
  json resolved;
};

namespace cfg {

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline const json* find(const json& obj, const std::string& key) {
  if (!obj.is_object()) return nullptr;
  const auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

inline const json& object(const json& root, const std::string& path, const std::string& key) {
  static const json empty = json::object();
  const json* v = find(root, key);
  if (!v) return empty;
  if (!v->is_object()) throw ConfigError(join(path, key), "must be an object");
  return *v;
}

inline double number(const json& obj, const std::string& path, const std::string& key,
                     std::optional<double> fallback = std::nullopt) {
  const json* v = find(obj, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(join(path, key), "is required");
  }
  if (!v->is_number()) throw ConfigError(join(path, key), "must be a number");
  const double d = v->get<double>();
  if (!std::isfinite(d)) throw ConfigError(join(path, key), "must be finite");
  return d;
}

inline double positive(const json& obj, const std::string& path, const std::string& key,
                       std::optional<double> fallback = std::nullopt) {
  const double d = number(obj, path, key, fallback);
  if (!(d > 0.0)) throw ConfigError(join(path, key), "must be > 0");
  return d;
}

inline long integer(const json& obj, const std::string& path, const std::string& key,
                    std::optional<long> fallback = std::nullopt, long min_value = 1) {
  const json* v = find(obj, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(join(path, key), "is required");
  }
  if (!v->is_number_integer()) throw ConfigError(join(path, key), "must be an integer");
  const long n = v->get<long>();
  if (n < min_value) throw ConfigError(join(path, key), "must be >= " + std::to_string(min_value));
  return n;
}

inline std::string text(const json& obj, const std::string& path, const std::string& key,
                        std::optional<std::string> fallback = std::nullopt) {
  const json* v = find(obj, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(join(path, key), "is required");
  }
  if (!v->is_string()) throw ConfigError(join(path, key), "must be a string");
  return v->get<std::string>();
}

inline bool boolean(const json& obj, const std::string& path, const std::string& key, bool fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) throw ConfigError(join(path, key), "must be true or false");
  return v->get<bool>();
}

inline std::vector<double> numbers(const json& obj, const std::string& path, const std::string& key,
                                   std::optional<std::vector<double>> fallback = std::nullopt) {
  const json* v = find(obj, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(join(path, key), "is required");
  }
  if (v->is_number()) return {v->get<double>()};
  if (!v->is_array()) throw ConfigError(join(path, key), "must be a number or a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    if (!(*v)[i].is_number()) {
      throw ConfigError(join(path, key) + "[" + std::to_string(i) + "]", "must be a number");
    }
    out.push_back((*v)[i].get<double>());
  }
  return out;
}

inline std::vector<int> integers(const json& obj, const std::string& path, const std::string& key,
                                 std::optional<std::vector<int>> fallback = std::nullopt) {
  const json* v = find(obj, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(join(path, key), "is required");
  }
  if (v->is_number_integer()) return {v->get<int>()};
  if (!v->is_array()) throw ConfigError(join(path, key), "must be an integer or a list of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    if (!(*v)[i].is_number_integer() || (*v)[i].get<long>() < 1) {
      throw ConfigError(join(path, key) + "[" + std::to_string(i) + "]", "must be a positive integer");
    }
    out.push_back((*v)[i].get<int>());
  }
  return out;
}

// Learning-rate schedule: {"rate": r}, {"pieces": [[start, rate], ...]} or
// {"rate": r, "factor": f, "every": n}.
inline LrSchedule schedule(const json& obj, const std::string& path, long iterations) {
  if (const json* pieces = find(obj, "pieces")) {
    if (!pieces->is_array() || pieces->empty()) throw ConfigError(join(path, "pieces"), "must be a non-empty list");
    std::vector<LrSchedule::Piece> p;
    for (std::size_t i = 0; i < pieces->size(); ++i) {
      const json& e = (*pieces)[i];
      const std::string ep = join(path, "pieces") + "[" + std::to_string(i) + "]";
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number()) {
        throw ConfigError(ep, "must be [start_iteration, rate]");
      }
      p.push_back({e[0].get<long>(), e[1].get<double>()});
    }
    try {
      return LrSchedule(std::move(p));
    } catch (const InvalidArgument& e) {
      throw ConfigError(join(path, "pieces"), e.what());
    }
  }
  const double rate = positive(obj, path, "rate", 0.003);
  if (find(obj, "factor") || find(obj, "every")) {
    const double factor = positive(obj, path, "factor");
    const long every = integer(obj, path, "every");
    return LrSchedule::step_decay(rate, factor, every, iterations);
  }
  return LrSchedule::constant(rate);
}

inline TrainingSpec training_spec(const json& obj, const std::string& path, const TrainingSpec& fallback) {
  TrainingSpec t;
  t.iterations = integer(obj, path, "iterations", fallback.iterations);
  const json* lr = find(obj, "lr");
  if (!lr) {
    t.schedule = fallback.schedule;
  } else if (lr->is_number()) {
    if (!(lr->get<double>() > 0.0)) throw ConfigError(join(path, "lr"), "must be > 0");
    t.schedule = LrSchedule::constant(lr->get<double>());
  } else if (lr->is_object()) {
    t.schedule = schedule(*lr, join(path, "lr"), t.iterations);
  } else {
    throw ConfigError(join(path, "lr"), "must be a number or an object");
  }
  return t;
}

}  // namespace cfg

struct ProblemDefaults {
  std::string flux;
  double u_left, u_right;
  std::vector<double> lo, hi;
  double t_final;
  std::vector<std::string> inflow;
  std::string truth;
};

inline std::optional<ProblemDefaults> problem_defaults(const std::string& name) {
  if (name == "riemann_shock") return ProblemDefaults{"burgers1d", 1, 0, {-1}, {1}, 0.6, {"x_lo", "x_hi"}, "exact"};
  if (name == "riemann_rarefaction") return ProblemDefaults{"burgers1d", 0, 1, {-1}, {2}, 0.4, {"x_lo"}, "exact"};
  if (name == "sinusoidal") return ProblemDefaults{"burgers1d", 0, 0, {0}, {2}, 0.8, {"x_lo", "x_hi"}, "weno3"};
  if (name == "quartic") return ProblemDefaults{"quartic1d", 1, 0, {-1}, {1}, 0.4, {"x_lo", "x_hi"}, "exact"};
  if (name == "cubic_nonconvex") return ProblemDefaults{"cubic1d", 1, -1, {-1}, {1}, 0.4, {"x_lo"}, "exact"};
  if (name == "burgers_2d") {
    return ProblemDefaults{"burgers2d", 0, 0, {0, 0}, {1, 1}, 0.5, {"x_lo", "x_hi", "y_lo", "y_hi"}, "reference2d"};
  }
  if (name == "custom") return ProblemDefaults{"", 1, 0, {-1}, {1}, 0.4, {"x_lo", "x_hi"}, "weno3"};
  return std::nullopt;
}

inline ExperimentConfig parse_experiment_config(const json& root) {
  using namespace cfg;
  if (!root.is_object()) throw ConfigError("(root)", "config must be a JSON object");
  ExperimentConfig c;
  c.resolved = root;

  // problem: "name" or {"name": ..., "flux": ..., "u_left": ..., "u_right": ...}
  const json* p = find(root, "problem");
  if (!p) throw ConfigError("problem", "is required");
  json problem_obj = p->is_string() ? json{{"name", p->get<std::string>()}} : *p;
  if (!problem_obj.is_object()) throw ConfigError("problem", "must be a name or an object");
  c.problem = text(problem_obj, "problem", "name");
  const auto defaults = problem_defaults(c.problem);
  if (!defaults) throw ConfigError("problem.name", "unknown problem '" + c.problem + "'");
  c.flux = text(problem_obj, "problem", "flux", defaults->flux.empty() ? std::nullopt
                                                                        : std::optional<std::string>(defaults->flux));
  FluxModel model;
  try {
    model = builtin_flux(c.flux);
  } catch (const InvalidArgument& e) {
    throw ConfigError("problem.flux", e.what());
  }
  c.u_left = number(problem_obj, "problem", "u_left", defaults->u_left);
  c.u_right = number(problem_obj, "problem", "u_right", defaults->u_right);

  const json& domain = object(root, "", "domain");
  c.domain.spatial_lo = numbers(domain, "domain", "lo", defaults->lo);
  c.domain.spatial_hi = numbers(domain, "domain", "hi", defaults->hi);
  c.domain.t_final = positive(domain, "domain", "t_final", defaults->t_final);
  try {
    c.domain.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError("domain", e.what());
  }
  if (c.domain.dim() != model.dim()) throw ConfigError("domain", "dimension does not match the flux");
  const int d = c.domain.dim();

  c.n_b = static_cast<int>(integer(root, "", "blocks", 1));
  const json& network = object(root, "", "network");
  c.layers = integers(network, "network", "layers", std::vector<int>{d + 1, 10, 10, 1});
  if (c.layers.size() < 2 || c.layers.front() != d + 1) {
    throw ConfigError("network.layers", "input width must equal the space-time dimension " + std::to_string(d + 1));
  }
  if (c.layers.back() != 1) throw ConfigError("network.layers", "output width must be 1");

  const json& mesh = object(root, "", "mesh");
  c.h = numbers(mesh, "mesh", "h", std::vector<double>{0.01});
  for (double v : c.h) {
    if (!(v > 0.0)) throw ConfigError("mesh.h", "must be > 0");
  }
  if (c.h.size() != 1 && static_cast<int>(c.h.size()) != d) throw ConfigError("mesh.h", "needs 1 or d entries");
  c.delta = positive(mesh, "mesh", "delta", 0.01);
  try {
    c.mesh_rule = parse_rule(text(mesh, "mesh", "rule", std::string("midpoint")));
  } catch (const InvalidArgument& e) {
    throw ConfigError("mesh.rule", e.what());
  }

  const json& div = object(root, "", "divergence");
  try {
    c.div.rule = parse_rule(text(div, "divergence", "rule", std::string("trapezoidal")));
  } catch (const InvalidArgument& e) {
    throw ConfigError("divergence.rule", e.what());
  }
  c.div.sub_m = integers(div, "divergence", "sub_m", std::vector<int>{2});
  if (c.div.sub_m.size() != 1 && static_cast<int>(c.div.sub_m.size()) != d) {
    throw ConfigError("divergence.sub_m", "needs 1 or d entries");
  }
  c.div.sub_n = static_cast<int>(integer(div, "divergence", "sub_n", 2));
  const int max_m = *std::max_element(c.div.sub_m.begin(), c.div.sub_m.end());
  c.div.refined_sub_m = static_cast<int>(integer(div, "divergence", "refined_sub_m", max_m));
  c.div.refined_sub_n = static_cast<int>(integer(div, "divergence", "refined_sub_n", c.div.sub_n));
  try {
    c.div.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError("divergence", e.what());
  }
  c.classify = boolean(div, "divergence", "classify", false);
  if (c.classify && d != 1) throw ConfigError("divergence.classify", "only supported in one spatial dimension");
  c.sharpness_threshold = number(div, "divergence", "sharpness_threshold", -1.0);

  const json& loss = object(root, "", "loss");
  c.alpha = positive(loss, "loss", "alpha", 20.0);
  c.boundary_sub_intervals = static_cast<int>(integer(loss, "loss", "boundary_sub_intervals", 1));
  std::vector<std::string> faces = defaults->inflow;
  if (const json* f = find(loss, "inflow_faces")) {
    if (!f->is_array()) throw ConfigError("loss.inflow_faces", "must be a list of face names");
    faces.clear();
    for (const auto& e : *f) {
      if (!e.is_string()) throw ConfigError("loss.inflow_faces", "must be a list of face names");
      faces.push_back(e.get<std::string>());
    }
  }
  for (const auto& name : faces) {
    try {
      const Face face = parse_face(name);
      if (face.axis >= d) throw InvalidArgument("face '" + name + "' outside the domain");
      c.inflow_faces.push_back(face);
    } catch (const InvalidArgument& e) {
      throw ConfigError("loss.inflow_faces", e.what());
    }
  }

  const json& training = object(root, "", "training");
  c.training = training_spec(training, "training", TrainingSpec{});
  if (const json* fb = find(training, "first_block")) {
    if (!fb->is_object()) throw ConfigError("training.first_block", "must be an object");
    c.first_block = training_spec(*fb, "training.first_block", c.training);
  }
  const json& adam = object(training, "training", "adam");
  c.adam_beta1 = number(adam, "training.adam", "beta1", 0.9);
  c.adam_beta2 = number(adam, "training.adam", "beta2", 0.999);
  c.adam_epsilon = positive(adam, "training.adam", "epsilon", 1e-8);
  if (!(c.adam_beta1 >= 0 && c.adam_beta1 < 1)) throw ConfigError("training.adam.beta1", "must lie in [0, 1)");
  if (!(c.adam_beta2 >= 0 && c.adam_beta2 < 1)) throw ConfigError("training.adam.beta2", "must lie in [0, 1)");
  c.history_every = integer(training, "training", "history_every", 100);
  c.log_every = integer(training, "training", "log_every", 0, 0);
  c.max_blocks = static_cast<int>(integer(training, "training", "max_blocks", 0, 0));

  const json* seed = find(root, "seed");
  if (seed) {
    if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<long long>() >= 0)) {
      throw ConfigError("seed", "must be a non-negative integer");
    }
    c.seed = seed->get<std::uint64_t>();
  }

  const json& truth = object(root, "", "truth");
  c.truth.source = text(truth, "truth", "source", defaults->truth);
  if (c.truth.source != "exact" && c.truth.source != "weno3" && c.truth.source != "reference2d") {
    throw ConfigError("truth.source", "must be exact, weno3 or reference2d");
  }
  if (c.truth.source == "exact" && c.problem == "sinusoidal") {
    throw ConfigError("truth.source", "the sinusoidal problem has no closed-form solution");
  }
  if (c.truth.source == "exact" && c.problem == "custom" && c.flux != "burgers1d") {
    throw ConfigError("truth.source", "closed-form truth for custom problems needs burgers1d");
  }
  if ((c.truth.source == "reference2d") != (d == 2)) {
    throw ConfigError("truth.source", "reference2d is the truth source for the 2-D problem only");
  }
  c.truth.dx = positive(truth, "truth", "dx", d == 2 ? 1.0 / 400.0 : 0.001);
  c.truth.dt = positive(truth, "truth", "dt", 0.0002);

  const json& output = object(root, "", "output");
  c.out_dir = text(output, "output", "dir", std::string("run"));
  std::vector<double> default_times;
  for (int k = 1; k <= c.n_b; ++k) default_times.push_back(k == c.n_b ? c.domain.t_final : k * c.domain.t_final / c.n_b);
  c.trace_times = numbers(output, "output", "trace_times", default_times);
  for (double t : c.trace_times) {
    if (t < 0.0 || t > c.domain.t_final) throw ConfigError("output.trace_times", "times must lie in [0, t_final]");
  }
  return c;
}

// The trained networks of all blocks, evaluated piecewise in time.
struct MarchedSolution {
  std::vector<BlockSpec> blocks;
  std::vector<MlpParameters> params;

  std::size_t block_for(double t) const {
    for (std::size_t k = 0; k < params.size(); ++k) {
      if (t <= blocks[k].t_hi) return k;
    }
    return params.size() - 1;
  }

  double operator()(const std::array<double, kMaxAxes>& z) const {
    const int d = blocks.front().dim();
    const MlpParameters& p = params[block_for(z[d])];
    return eval(p, std::span<const double>(z.data(), static_cast<std::size_t>(d + 1)));
  }
};

// The solution used for data and errors: closed form or a reference solve.
struct Truth {
  std::string note;
  ExactSolution exact;
  std::shared_ptr<ReferenceSolution> reference;

  double operator()(const std::array<double, kMaxAxes>& z) const {
    return reference ? reference->evaluate(z) : exact(z);
  }
};

inline PointFunction initial_data(const ExperimentConfig& c) {
  if (c.problem == "sinusoidal") {
    return [](const std::array<double, kMaxAxes>& z) { return 0.5 + std::sin(M_PI * z[0]); };
  }
  if (c.problem == "burgers_2d") {
    return [](const std::array<double, kMaxAxes>& z) { return burgers2d_initial(z[0], z[1]); };
  }
  const double ul = c.u_left, ur = c.u_right;
  return [ul, ur](const std::array<double, kMaxAxes>& z) {
    return z[0] < 0.0 ? ul : (z[0] > 0.0 ? ur : 0.5 * (ul + ur));
  };
}

inline Truth build_truth(const ExperimentConfig& c) {
  Truth t;
  const int d = c.domain.dim();
  std::vector<double> times;
  const long steps = std::llround(c.domain.t_final / (0.5 * c.delta));
  for (long k = 0; k <= steps; ++k) times.push_back(k == steps ? c.domain.t_final : k * c.domain.t_final / steps);
  for (double tt : c.trace_times) times.push_back(tt);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
              times.end());

  if (c.truth.source == "exact") {
    if (c.problem == "quartic" || c.flux == "quartic1d") {
      t.exact = riemann_quartic(c.u_left, c.u_right);
    } else if (c.problem == "cubic_nonconvex" || c.flux == "cubic1d") {
      t.exact = riemann_cubic_osher(c.u_left, c.u_right);
    } else {
      t.exact = riemann_burgers(c.u_left, c.u_right);
    }
    t.note = "closed-form Riemann solution (" + t.exact.name + ")";
    return t;
  }
  if (c.truth.source == "reference2d") {
    t.reference = std::make_shared<ReferenceSolution>(exact_2d_burgers_reference(c.truth.dx, times));
    t.note = "fine-grid WENO3/RK4 reference solve (dx = " + std::to_string(c.truth.dx) +
             ") standing in for the closed-form 2-D solution";
    return t;
  }
  ReferenceGrid grid;
  grid.lo = {c.domain.spatial_lo[0], d == 2 ? c.domain.spatial_lo[1] : 0.0};
  grid.hi = {c.domain.spatial_hi[0], d == 2 ? c.domain.spatial_hi[1] : 1.0};
  for (int a = 0; a < d; ++a) {
    grid.cells[a] = static_cast<int>(std::llround((grid.hi[a] - grid.lo[a]) / c.truth.dx));
  }
  ReferenceBoundary boundary;
  if (c.problem == "sinusoidal") {
    boundary.periodic = true;
  } else {
    const double ul = c.u_left, ur = c.u_right;
    boundary.ghost = [ul, ur](double x, double, double) { return x < 0.0 ? ul : ur; };
  }
  t.reference = std::make_shared<ReferenceSolution>(
      weno3_rk4_reference(builtin_flux(c.flux), initial_data(c), grid, c.truth.dt, times, boundary));
  t.note = "WENO3/RK4 reference solve (dx = " + std::to_string(c.truth.dx) + ", dt = " + std::to_string(c.truth.dt) + ")";
  return t;
}

inline PointFunction inflow_data(const ExperimentConfig& c, const Truth& truth) {
  if (c.problem == "burgers_2d") {
    return [](const std::array<double, kMaxAxes>& z) { return burgers2d_boundary_value(z[0], z[1], z[2]); };
  }
  return [&truth](const std::array<double, kMaxAxes>& z) { return truth(z); };
}

inline std::vector<double> error_spacing(const ExperimentConfig& c) {
  std::vector<double> s;
  for (int a = 0; a < c.domain.dim(); ++a) s.push_back(0.5 * (c.h.size() == 1 ? c.h[0] : c.h[a]));
  s.push_back(0.5 * c.delta);
  return s;
}

inline std::vector<double> block_errors(const ExperimentConfig& c, const MarchedSolution& sol, const Truth& truth) {
  std::vector<double> out;
  for (std::size_t k = 0; k < sol.params.size(); ++k) {
    const MlpParameters& p = sol.params[k];
    const int d = c.domain.dim();
    const auto net = [&p, d](const std::array<double, kMaxAxes>& z) {
      return eval(p, std::span<const double>(z.data(), static_cast<std::size_t>(d + 1)));
    };
    out.push_back(relative_l2_error(net, truth, sol.blocks[k].box(), error_spacing(c)));
  }
  return out;
}

inline std::string errors_csv(const std::vector<double>& errors) {
  std::ostringstream os;
  os << "block,rel_l2\n" << std::setprecision(17);
  for (std::size_t k = 0; k < errors.size(); ++k) os << k + 1 << ',' << errors[k] << '\n';
  return os.str();
}

// Trace on the plane t: 1-D columns (x, u_exact, u_nn) at spacing h/2;
// 2-D columns (x, y, u_exact, u_nn) at spacing h.
inline std::string trace_csv(const ExperimentConfig& c, const MarchedSolution& sol, const Truth& truth, double t) {
  std::ostringstream os;
  os << std::setprecision(17);
  const int d = c.domain.dim();
  const auto axis_points = [&](int a, double spacing) {
    const double lo = c.domain.spatial_lo[a], hi = c.domain.spatial_hi[a];
    const long n = std::max(1L, static_cast<long>(std::llround((hi - lo) / spacing)));
    std::vector<double> xs;
    for (long i = 0; i <= n; ++i) xs.push_back(i == n ? hi : lo + (hi - lo) * (static_cast<double>(i) / n));
    return xs;
  };
  const double h0 = c.h[0];
  if (d == 1) {
    os << "x,u_exact,u_nn\n";
    for (double x : axis_points(0, 0.5 * h0)) {
      const std::array<double, kMaxAxes> z{x, t, 0.0};
      os << x << ',' << truth(z) << ',' << sol(z) << '\n';
    }
  } else {
    os << "x,y,u_exact,u_nn\n";
    const double h1 = c.h.size() == 1 ? h0 : c.h[1];
    const auto ys = axis_points(1, h1);
    for (double y : ys) {
      for (double x : axis_points(0, h0)) {
        const std::array<double, kMaxAxes> z{x, y, t};
        os << x << ',' << y << ',' << truth(z) << ',' << sol(z) << '\n';
      }
    }
  }
  return os.str();
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return os.str();
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Writes files into a directory and remembers their hashes for the manifest.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + (dir_ / name).string());
    out << content;
    hashes_[name] = sha256_hex(content);
  }

  const std::map<std::string, std::string>& hashes() const { return hashes_; }
  const std::filesystem::path& path() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> hashes_;
};

struct RunResult {
  ExperimentConfig config;
  MarchResult march;
  std::vector<double> errors;
  std::string truth_note;
};

inline TrainingConfig training_config(const ExperimentConfig& c, int block) {
  const TrainingSpec& spec = (block == 1 && c.first_block) ? *c.first_block : c.training;
  TrainingConfig t;
  t.iterations = spec.iterations;
  t.lr_schedule = spec.schedule;
  t.adam_beta1 = c.adam_beta1;
  t.adam_beta2 = c.adam_beta2;
  t.adam_epsilon = c.adam_epsilon;
  t.history_every = c.history_every;
  t.seed = c.seed;
  if (c.log_every > 0) {
    const long every = c.log_every;
    t.progress = [block, every](long it, double loss) {
      if (it % every == 0) std::fprintf(stderr, "block %d  iteration %ld  loss %.6e\n", block, it, loss);
    };
  }
  return t;
}

inline MarchConfig march_config(const ExperimentConfig& c, const Truth& truth) {
  MarchConfig mc;
  mc.h = c.h;
  mc.delta = c.delta;
  mc.mesh_rule = c.mesh_rule;
  mc.div_cfg = c.div;
  mc.alpha = c.alpha;
  mc.boundary_rule = CompositeRule(RuleKind::trapezoidal, c.boundary_sub_intervals);
  mc.initial_data = initial_data(c);
  mc.inflow_data = inflow_data(c, truth);
  mc.classify = c.classify;
  mc.sharpness_threshold = c.sharpness_threshold;
  return mc;
}

inline json manifest_json(const ExperimentConfig& c, const OutputDir& out, const std::string& truth_note,
                          const MarchResult& march) {
  json m;
  m["version"] = kVersion;
  m["seed"] = c.seed;
  m["config"] = c.resolved;
  m["truth"] = truth_note;
  m["completed_blocks"] = march.blocks.size();
  if (march.failed) {
    m["failure"] = {{"block", march.failed_block}, {"iteration", march.failed_iteration}, {"message", march.failure}};
  }
  m["files"] = out.hashes();
  return m;
}

// Full pipeline; throws ConfigError, CflViolation/UnimplementedCase (oracle)
// before training, and reports divergence through RunResult.march.failed.
inline RunResult run_experiment(const ExperimentConfig& c, std::ostream& log = std::cerr) {
  RunResult r;
  r.config = c;
  const Truth truth = build_truth(c);
  r.truth_note = truth.note;
  log << "truth: " << truth.note << '\n';
  const FluxModel model = builtin_flux(c.flux);
  const MarchConfig mc = march_config(c, truth);
  const auto all_blocks = build_blocks(c.domain, c.n_b, c.inflow_faces);
  std::vector<BlockSpec> train_blocks = all_blocks;
  if (c.max_blocks > 0 && c.max_blocks < c.n_b) train_blocks.resize(c.max_blocks);
  r.march = solve_all_blocks(
      train_blocks, c.layers, model, [&c](int k) { return training_config(c, k); }, mc, c.seed,
      [&log](const BlockSolveResult& b) {
        log << "block " << b.block << ": final loss " << std::setprecision(6) << b.final_loss << " ("
            << std::setprecision(3) << b.wall_time << " s)\n";
      });

  MarchedSolution sol;
  for (const auto& b : r.march.blocks) {
    sol.blocks.push_back(all_blocks[b.block - 1]);
    sol.params.push_back(b.params);
  }
  OutputDir out(c.out_dir);
  if (!sol.params.empty()) {
    r.errors = block_errors(c, sol, truth);
    out.write("errors.csv", errors_csv(r.errors));
    for (double t : c.trace_times) {
      if (t > sol.blocks.back().t_hi + 1e-12) continue;
      std::ostringstream name;
      name << "trace_t" << std::fixed << std::setprecision(4) << t << ".csv";
      out.write(name.str(), trace_csv(c, sol, truth, t));
    }
  }
  for (const auto& b : r.march.blocks) {
    out.write("loss_history_block" + std::to_string(b.block) + ".csv", history_csv(b));
    out.write("checkpoint_block" + std::to_string(b.block) + ".json",
              checkpoint_to_json({b.params, c.seed, b.block}).dump(1) + "\n");
  }
  const json manifest = manifest_json(c, out, truth.note, r.march);
  std::ofstream(out.path() / "manifest.json", std::ios::binary) << manifest.dump(2) << '\n';
  return r;
}

inline std::filesystem::path preset_dir() {
  if (const char* env = std::getenv("LSNN_PRESET_DIR")) return env;
  return LSNN_PRESET_DIR;
}

inline std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  const auto dir = preset_dir();
  if (!std::filesystem::is_directory(dir)) return names;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".json") names.push_back(e.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

inline json load_json_file(const std::filesystem::path& p, const std::string& field) {
  std::ifstream in(p);
  if (!in) throw ConfigError(field, "cannot open " + p.string());
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(field, std::string("invalid JSON in ") + p.string() + ": " + e.what());
  }
}

inline json load_preset(const std::string& name) {
  const auto path = preset_dir() / (name + ".json");
  if (!std::filesystem::exists(path)) throw ConfigError("preset", "unknown preset '" + name + "'");
  return load_json_file(path, "preset");
}

// ---------------------------------------------------------------------------
// Quadrature convergence study.

struct StudyOutcome {
  std::string solution;
  ConvergenceStudyReport report;
};

// {"study": {"solutions": [...], "rule": "trapezoidal", "ladder": [1,2,4,8,16],
//            "refine": "both" | "m_hat" | "n_hat", "fixed": 1,
//            "cell": {"x": [x0, x1], "t": [t0, t1]}}, "output": {"dir": ...}}
inline std::vector<StudyOutcome> run_divergence_study(const json& root, std::ostream& log = std::cout) {
  using namespace cfg;
  if (!root.is_object()) throw ConfigError("(root)", "config must be a JSON object");
  const json& study = object(root, "", "study");
  std::vector<std::string> names;
  if (const json* s = find(study, "solutions")) {
    if (!s->is_array()) throw ConfigError("study.solutions", "must be a list of names");
    for (const auto& e : *s) {
      if (!e.is_string()) throw ConfigError("study.solutions", "must be a list of names");
      names.push_back(e.get<std::string>());
    }
  } else {
    names.push_back(text(study, "study", "solution"));
  }
  RuleKind rule;
  try {
    rule = parse_rule(text(study, "study", "rule", std::string("trapezoidal")));
  } catch (const InvalidArgument& e) {
    throw ConfigError("study.rule", e.what());
  }
  const auto ladder = integers(study, "study", "ladder", std::vector<int>{1, 2, 4, 8, 16});
  if (ladder.size() < 3) throw ConfigError("study.ladder", "needs at least 3 entries");
  const int fixed = static_cast<int>(integer(study, "study", "fixed", 1));
  const json& cell = object(study, "study", "cell");
  const auto xs = numbers(cell, "study.cell", "x", std::vector<double>{0.0, 0.5});
  const auto ts = numbers(cell, "study.cell", "t", std::vector<double>{0.0, 0.5});
  if (xs.size() != 2 || !(xs[0] < xs[1])) throw ConfigError("study.cell.x", "must be [x0, x1] with x0 < x1");
  if (ts.size() != 2 || !(ts[0] < ts[1])) throw ConfigError("study.cell.t", "must be [t0, t1] with t0 < t1");
  SpaceTimeBox box;
  box.axes = 2;
  box.lo = {xs[0], ts[0], 0.0};
  box.hi = {xs[1], ts[1], 0.0};
  const std::string dir = text(object(root, "", "output"), "output", "dir", std::string("study"));
  OutputDir out(dir);
  const FluxModel model = builtin_flux("burgers1d");
  json summary = json::object();
  std::vector<StudyOutcome> outcomes;
  for (const auto& name : names) {
    ManufacturedSolution ms;
    try {
      ms = manufactured_solution(name, box);
    } catch (const InvalidArgument& e) {
      throw ConfigError("study.solutions", e.what());
    }
    const std::string refine = text(study, "study", "refine", ms.default_refinement);
    if (refine != "both" && refine != "m_hat" && refine != "n_hat") {
      throw ConfigError("study.refine", "must be both, m_hat or n_hat");
    }
    std::vector<SubIntervalPair> pairs;
    for (int k : ladder) {
      pairs.push_back({refine == "n_hat" ? fixed : k, refine == "m_hat" ? fixed : k});
    }
    auto rep = convergence_study(ms.u, model, box, rule, pairs, ms.exact_average, ms.jump_total);
    out.write("study_" + name + ".csv", rep.to_csv());
    summary[name] = {{"fitted_order", std::isfinite(rep.fitted_order) ? json(rep.fitted_order) : json(nullptr)},
                     {"refinement", rep.refinement},
                     {"rule", std::string(to_string(rule))}};
    log << name << ": fitted order " << std::setprecision(4) << rep.fitted_order << " in " << rep.refinement << '\n';
    outcomes.push_back({name, std::move(rep)});
  }
  out.write("study_summary.json", summary.dump(2) + "\n");
  return outcomes;
}

// Re-derives the per-block error table of a finished run from its manifest
// and checkpoints.
inline std::vector<double> report_run(const std::filesystem::path& run_dir, std::ostream& log = std::cout) {
  const json manifest = load_json_file(run_dir / "manifest.json", "manifest");
  if (!manifest.contains("config")) throw ConfigError("manifest.config", "is missing");
  ExperimentConfig c = parse_experiment_config(manifest.at("config"));
  const Truth truth = build_truth(c);
  MarchedSolution sol;
  const auto blocks = build_blocks(c.domain, c.n_b, c.inflow_faces);
  for (int k = 1; k <= c.n_b; ++k) {
    const auto path = run_dir / ("checkpoint_block" + std::to_string(k) + ".json");
    if (!std::filesystem::exists(path)) break;
    sol.blocks.push_back(blocks[k - 1]);
    sol.params.push_back(load_checkpoint(path.string()).params);
  }
  if (sol.params.empty()) throw ConfigError("run", "no checkpoints in " + run_dir.string());
  const auto errors = block_errors(c, sol, truth);
  const std::string table = errors_csv(errors);
  log << "truth: " << truth.note << '\n' << table;
  const auto stored = run_dir / "errors.csv";
  if (std::filesystem::exists(stored)) {
    log << (read_file(stored) == table ? "matches errors.csv\n" : "differs from errors.csv\n");
  }
  return errors;
}

}  // namespace lsnn
