#pragma once

// Discrete block least-squares functional
//   L = sum_K (sum_i w_i div_T F(u_N)(z_K^i))^2
//       + alpha [ sum_{E on interface} Q_E(u_N - u^{k-1})^2 + sum_{E on inflow} Q_E(u_N - g)^2 ].
//
// The loss structure is fixed for a block, so it is assembled once into a
// static tape: every evaluation node is deduplicated on an integer lattice,
// each cell residual is a list of (node, flux component, coefficient) terms,
// and each boundary segment is a list of (node, weight) terms plus a data
// constant. One iteration is then a batched forward pass over the nodes, a
// pass over the stencils, and a batched reverse pass.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "lsnn/divergence.hpp"
#include "lsnn/error.hpp"
#include "lsnn/flux.hpp"
#include "lsnn/geometry.hpp"
#include "lsnn/network.hpp"
#include "lsnn/parallel.hpp"
#include "lsnn/quadrature.hpp"

namespace lsnn {

struct BlockLossSpec {
  IntegrationMesh mesh;
  DivergenceConfig div_cfg;
  double alpha = 1.0;
  PointFunction interface_data;  // u^{k-1} on t = t_lo
  PointFunction inflow_data;     // g on the inflow faces
  CompositeRule boundary_rule{RuleKind::trapezoidal, 1};  // per boundary segment

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("loss: alpha must be > 0");
    div_cfg.validate();
    if (div_cfg.sub_m.size() != 1 && static_cast<int>(div_cfg.sub_m.size()) != mesh.dim()) {
      throw InvalidArgument("loss: sub_m needs one entry per spatial axis");
    }
    if (!interface_data) throw InvalidArgument("loss: interface data missing");
    if (!mesh.block().inflow_faces.empty() && !inflow_data) {
      throw InvalidArgument("loss: inflow data missing");
    }
  }
};

struct LossTerms {
  double interior = 0.0;
  double interface = 0.0;
  double inflow = 0.0;
  double alpha = 1.0;

  double total() const { return interior + alpha * (interface + inflow); }
};

class BlockLoss {
 public:
  struct StencilEntry {
    std::int32_t node;
    std::int32_t component;  // 0..d-1 spatial flux f_a, d is u itself
    double coef;
  };
  struct SegmentEntry {
    std::int32_t node;
    double weight;
  };

  static constexpr std::size_t kChunk = 2048;

  BlockLoss(const BlockLossSpec& spec, const FluxModel& model) : model_(model), alpha_(spec.alpha) {
    spec.validate();
    const IntegrationMesh& mesh = spec.mesh;
    if (model.dim() != mesh.dim()) throw InvalidArgument("loss: flux and mesh dimensions differ");
    axes_ = mesh.axes();
    const int d = mesh.dim();
    for (int a = 0; a < axes_; ++a) {
      const int base = a < d ? spec.div_cfg.sub_m_axis(a) : spec.div_cfg.sub_n;
      const int refined = a < d ? spec.div_cfg.refined_sub_m : spec.div_cfg.refined_sub_n;
      const int l = std::lcm(std::lcm(base, refined), spec.boundary_rule.p);
      den_[a] = 4LL * l;
      lcm_[a] = l;
      stride_[a] = static_cast<std::uint64_t>(mesh.cells_along(a)) * den_[a] + 1;
    }
    assemble_cells(spec, mesh);
    assemble_boundary(spec, mesh);
    build_node_matrix(mesh);
  }

  std::size_t node_count() const { return static_cast<std::size_t>(nodes_.cols()); }
  std::size_t cell_count() const { return cell_offsets_.size() - 1; }
  const Matrix& nodes() const { return nodes_; }
  double alpha() const { return alpha_; }

  LossTerms terms(const MlpParameters& params) const {
    const RowVector u = evaluate_nodes(params);
    std::vector<double> r, e_if, e_in;
    return assemble_terms(u, r, e_if, e_in);
  }

  double value(const MlpParameters& params) const { return terms(params).total(); }

  // Per-cell residuals sum_i w_i div_T F(u_N)(z_K^i), in cell order.
  std::vector<double> cell_residuals(const MlpParameters& params) const {
    const RowVector u = evaluate_nodes(params);
    std::vector<double> r, e_if, e_in;
    assemble_terms(u, r, e_if, e_in);
    return r;
  }

  // Loss value; `grad` (shape of params) is overwritten with dL/dtheta.
  double value_and_gradient(const MlpParameters& params, MlpParameters& grad) const {
    check_input(params);
    const std::size_t n = node_count();
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    const bool keep = keep_tapes(params);
    std::vector<MlpTape> tapes(keep ? chunks : 0);
    RowVector u(static_cast<Eigen::Index>(n));
    parallel_chunks(chunks, [&](std::size_t c) {
      const auto [b, len] = chunk_range(c);
      if (keep) {
        forward(params, nodes_.middleCols(b, len), tapes[c]);
        u.segment(b, len) = tapes[c].out;
      } else {
        u.segment(b, len) = eval_batch(params, nodes_.middleCols(b, len));
      }
    });

    std::vector<double> r, e_if, e_in;
    const LossTerms t = assemble_terms(u, r, e_if, e_in);
    const double loss = t.total();
    if (!std::isfinite(loss)) {
      grad = MlpParameters::zeros(params.layer_dims);
      return loss;
    }

    RowVector seed = RowVector::Zero(static_cast<Eigen::Index>(n));
    const int d = axes_ - 1;
    for (std::size_t k = 0; k + 1 < cell_offsets_.size(); ++k) {
      const double two_r = 2.0 * r[k];
      if (two_r == 0.0) continue;
      for (std::size_t j = cell_offsets_[k]; j < cell_offsets_[k + 1]; ++j) {
        const auto& s = cell_entries_[j];
        const double du = s.component == d ? 1.0 : model_.f_prime(s.component, u[s.node]);
        seed[s.node] += two_r * s.coef * du;
      }
    }
    add_segment_seeds(interface_offsets_, interface_entries_, e_if, seed);
    add_segment_seeds(inflow_offsets_, inflow_entries_, e_in, seed);

    std::vector<MlpParameters> partial(chunks, MlpParameters::zeros(params.layer_dims));
    parallel_chunks(chunks, [&](std::size_t c) {
      const auto [b, len] = chunk_range(c);
      if (keep) {
        backward(params, tapes[c], seed.segment(b, len), partial[c]);
      } else {
        MlpTape tape;
        forward(params, nodes_.middleCols(b, len), tape);
        backward(params, tape, seed.segment(b, len), partial[c]);
      }
    });
    grad = MlpParameters::zeros(params.layer_dims);
    for (const auto& p : partial) {
      for (int k = 0; k < grad.layers(); ++k) {
        grad.weights[k] += p.weights[k];
        grad.biases[k] += p.biases[k];
      }
    }
    return loss;
  }

 private:
  std::pair<Eigen::Index, Eigen::Index> chunk_range(std::size_t c) const {
    const std::size_t b = c * kChunk;
    const std::size_t len = std::min(kChunk, node_count() - b);
    return {static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(len)};
  }

  bool keep_tapes(const MlpParameters& params) const {
    std::size_t width = 0;
    for (int w : params.layer_dims) width += static_cast<std::size_t>(w);
    return node_count() * width * sizeof(double) < (std::size_t{256} << 20);
  }

  void check_input(const MlpParameters& params) const {
    if (params.input_dim() != axes_) throw InvalidArgument("loss: network input dimension mismatch");
  }

  RowVector evaluate_nodes(const MlpParameters& params) const {
    check_input(params);
    const std::size_t n = node_count();
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    RowVector u(static_cast<Eigen::Index>(n));
    parallel_chunks(chunks, [&](std::size_t c) {
      const auto [b, len] = chunk_range(c);
      u.segment(b, len) = eval_batch(params, nodes_.middleCols(b, len));
    });
    return u;
  }

  LossTerms assemble_terms(const RowVector& u, std::vector<double>& r, std::vector<double>& e_if,
                           std::vector<double>& e_in) const {
    LossTerms t;
    t.alpha = alpha_;
    const int d = axes_ - 1;
    const std::size_t cells = cell_count();
    r.assign(cells, 0.0);
    CompensatedSum interior;
    for (std::size_t k = 0; k < cells; ++k) {
      CompensatedSum acc;
      for (std::size_t j = cell_offsets_[k]; j < cell_offsets_[k + 1]; ++j) {
        const auto& s = cell_entries_[j];
        const double uv = u[s.node];
        acc += s.coef * (s.component == d ? uv : model_.f(s.component, uv));
      }
      r[k] = acc.value();
      interior += r[k] * r[k];
    }
    t.interior = interior.value();
    t.interface = segment_sum(interface_offsets_, interface_entries_, interface_const_, u, e_if);
    t.inflow = segment_sum(inflow_offsets_, inflow_entries_, inflow_const_, u, e_in);
    return t;
  }

  static double segment_sum(const std::vector<std::size_t>& offsets,
                            const std::vector<SegmentEntry>& entries,
                            const std::vector<double>& constants, const RowVector& u,
                            std::vector<double>& e) {
    const std::size_t segs = offsets.empty() ? 0 : offsets.size() - 1;
    e.assign(segs, 0.0);
    CompensatedSum total;
    for (std::size_t k = 0; k < segs; ++k) {
      CompensatedSum acc;
      for (std::size_t j = offsets[k]; j < offsets[k + 1]; ++j) {
        acc += entries[j].weight * u[entries[j].node];
      }
      acc += -constants[k];
      e[k] = acc.value();
      total += e[k] * e[k];
    }
    return total.value();
  }

  void add_segment_seeds(const std::vector<std::size_t>& offsets,
                         const std::vector<SegmentEntry>& entries, const std::vector<double>& e,
                         RowVector& seed) const {
    for (std::size_t k = 0; k < e.size(); ++k) {
      const double g = 2.0 * alpha_ * e[k];
      for (std::size_t j = offsets[k]; j < offsets[k + 1]; ++j) {
        seed[entries[j].node] += g * entries[j].weight;
      }
    }
  }

  using Lattice = std::array<long long, kMaxAxes>;

  std::int32_t node_id(const Lattice& num) {
    std::uint64_t key = 0;
    for (int a = axes_ - 1; a >= 0; --a) key = key * stride_[a] + static_cast<std::uint64_t>(num[a]);
    auto [it, inserted] = index_.try_emplace(key, static_cast<std::int32_t>(lattice_.size()));
    if (inserted) lattice_.push_back(num);
    return it->second;
  }

  // Lattice numerator of tick `tick` of a p-interval rule on [lo2, hi2] (half-cell units).
  long long tick_num(int axis, int lo2, int hi2, int p, int tick) const {
    return (static_cast<long long>(lo2) * 2 * p + static_cast<long long>(tick) * (hi2 - lo2)) *
           (lcm_[axis] / p);
  }

  // Appends the divergence stencil of control volume [lo2, hi2] scaled by `weight`.
  void append_volume(const IntegrationMesh& mesh, const std::array<int, kMaxAxes>& lo2,
                     const std::array<int, kMaxAxes>& hi2, const std::array<int, kMaxAxes>& p,
                     RuleKind rule, double weight, std::vector<StencilEntry>& out) {
    std::array<double, kMaxAxes> extent{};
    for (int a = 0; a < axes_; ++a) {
      extent[a] = mesh.coordinate(a, hi2[a], 2) - mesh.coordinate(a, lo2[a], 2);
    }
    std::array<std::vector<RuleTick>, kMaxAxes> ticks;
    for (int a = 0; a < axes_; ++a) ticks[a] = rule_ticks(CompositeRule(rule, p[a]));
    for (int a = 0; a < axes_; ++a) {
      // Face quadrature over the other axes; the face measure cancels against |V|.
      std::array<int, kMaxAxes> other{};
      int n_other = 0;
      for (int b = 0; b < axes_; ++b) {
        if (b != a) other[n_other++] = b;
      }
      std::array<std::size_t, kMaxAxes> it{};
      while (true) {
        double w = weight / extent[a];
        Lattice num{};
        for (int q = 0; q < n_other; ++q) {
          const int b = other[q];
          const RuleTick& t = ticks[b][it[q]];
          w *= t.weight_fraction;
          num[b] = tick_num(b, lo2[b], hi2[b], p[b], t.tick);
        }
        num[a] = static_cast<long long>(hi2[a]) * 2 * lcm_[a];
        out.push_back({node_id(num), a, w});
        num[a] = static_cast<long long>(lo2[a]) * 2 * lcm_[a];
        out.push_back({node_id(num), a, -w});
        int q = 0;
        for (; q < n_other; ++q) {
          if (++it[q] < ticks[other[q]].size()) break;
          it[q] = 0;
        }
        if (q == n_other) break;
      }
    }
  }

  void assemble_cells(const BlockLossSpec& spec, const IntegrationMesh& mesh) {
    const int d = mesh.dim();
    const RuleKind edge_rule = spec.div_cfg.rule;
    const auto base = spec.div_cfg.counts(d, false);
    const auto refined = spec.div_cfg.counts(d, true);
    const std::size_t cells = mesh.cell_count();
    cell_offsets_.assign(1, 0);
    std::vector<StencilEntry> local;
    for (std::size_t f = 0; f < cells; ++f) {
      local.clear();
      const CellIndex c = mesh.unflatten(f);
      const double measure = mesh.cell_box(f).measure();
      if (mesh.rule() == RuleKind::midpoint) {
        std::array<int, kMaxAxes> lo2{}, hi2{};
        for (int a = 0; a < axes_; ++a) {
          lo2[a] = 2 * c.idx[a];
          hi2[a] = 2 * c.idx[a] + 2;
        }
        append_volume(mesh, lo2, hi2, mesh.is_refined(f) ? refined : base, edge_rule, measure, local);
      } else {
        // Trapezoidal mesh rule: corners of K weighted |K| / 2^(d+1), each with
        // its node-centred control volume (halved at block faces).
        const int corners = 1 << axes_;
        for (int mask = 0; mask < corners; ++mask) {
          std::array<int, kMaxAxes> node{}, lo2{}, hi2{};
          for (int a = 0; a < axes_; ++a) {
            node[a] = c.idx[a] + ((mask >> a) & 1);
            lo2[a] = std::max(0, 2 * node[a] - 1);
            hi2[a] = std::min(2 * mesh.cells_along(a), 2 * node[a] + 1);
          }
          const bool ref = node_touches_refined(mesh, node);
          append_volume(mesh, lo2, hi2, ref ? refined : base, edge_rule, measure / corners, local);
        }
      }
      // Merge repeated (node, component) pairs so each cell lists each once.
      std::sort(local.begin(), local.end(), [](const StencilEntry& x, const StencilEntry& y) {
        return x.node != y.node ? x.node < y.node : x.component < y.component;
      });
      std::size_t start = cell_entries_.size();
      for (const auto& s : local) {
        if (cell_entries_.size() > start && cell_entries_.back().node == s.node &&
            cell_entries_.back().component == s.component) {
          cell_entries_.back().coef += s.coef;
        } else {
          cell_entries_.push_back(s);
        }
      }
      cell_offsets_.push_back(cell_entries_.size());
    }
  }

  static bool node_touches_refined(const IntegrationMesh& mesh, const std::array<int, kMaxAxes>& node) {
    const int axes = mesh.axes();
    for (int mask = 0; mask < (1 << axes); ++mask) {
      CellIndex c;
      bool inside = true;
      for (int a = 0; a < axes; ++a) {
        c.idx[a] = node[a] - ((mask >> a) & 1);
        if (c.idx[a] < 0 || c.idx[a] >= mesh.cells_along(a)) inside = false;
      }
      if (inside && mesh.is_refined(mesh.flat(c))) return true;
    }
    return false;
  }

  // Segments of the plane `axis` = (high ? hi : lo): one per mesh face, each
  // integrated with the boundary rule.
  void assemble_face(const IntegrationMesh& mesh, int axis, bool high, const CompositeRule& rule,
                     const PointFunction& data, std::vector<std::size_t>& offsets,
                     std::vector<SegmentEntry>& entries, std::vector<double>& constants) {
    std::array<int, kMaxAxes> other{};
    int n_other = 0;
    for (int b = 0; b < axes_; ++b) {
      if (b != axis) other[n_other++] = b;
    }
    const auto ticks = rule_ticks(rule);
    std::array<int, kMaxAxes> cell{};
    if (offsets.empty()) offsets.push_back(0);
    while (true) {
      std::array<std::size_t, kMaxAxes> it{};
      CompensatedSum c;
      while (true) {
        Lattice num{};
        num[axis] = high ? static_cast<long long>(mesh.cells_along(axis)) * den_[axis] : 0;
        double w = 1.0;
        std::array<double, kMaxAxes> z{};
        for (int q = 0; q < n_other; ++q) {
          const int b = other[q];
          const RuleTick& t = ticks[it[q]];
          num[b] = tick_num(b, 2 * cell[q], 2 * cell[q] + 2, rule.p, t.tick);
          w *= t.weight_fraction * mesh.cell_size(b);
        }
        for (int a = 0; a < axes_; ++a) z[a] = mesh.coordinate(a, num[a], den_[a]);
        entries.push_back({node_id(num), w});
        c += w * data(z);
        int q = 0;
        for (; q < n_other; ++q) {
          if (++it[q] < ticks.size()) break;
          it[q] = 0;
        }
        if (q == n_other) break;
      }
      constants.push_back(c.value());
      offsets.push_back(entries.size());
      int q = 0;
      for (; q < n_other; ++q) {
        if (++cell[q] < mesh.cells_along(other[q])) break;
        cell[q] = 0;
      }
      if (q == n_other) break;
    }
  }

  void assemble_boundary(const BlockLossSpec& spec, const IntegrationMesh& mesh) {
    const int d = mesh.dim();
    assemble_face(mesh, d, false, spec.boundary_rule, spec.interface_data, interface_offsets_,
                  interface_entries_, interface_const_);
    for (const Face& f : mesh.block().inflow_faces) {
      if (f.axis >= d) throw InvalidArgument("loss: inflow face outside the spatial domain");
      assemble_face(mesh, f.axis, f.high, spec.boundary_rule, spec.inflow_data, inflow_offsets_,
                    inflow_entries_, inflow_const_);
    }
  }

  void build_node_matrix(const IntegrationMesh& mesh) {
    nodes_.resize(axes_, static_cast<Eigen::Index>(lattice_.size()));
    for (std::size_t j = 0; j < lattice_.size(); ++j) {
      for (int a = 0; a < axes_; ++a) {
        nodes_(a, static_cast<Eigen::Index>(j)) = mesh.coordinate(a, lattice_[j][a], den_[a]);
      }
    }
    index_.clear();
    lattice_.clear();
    lattice_.shrink_to_fit();
  }

  FluxModel model_;
  double alpha_;
  int axes_ = 2;
  std::array<long long, kMaxAxes> den_{};
  std::array<long long, kMaxAxes> lcm_{};
  std::array<std::uint64_t, kMaxAxes> stride_{};
  std::unordered_map<std::uint64_t, std::int32_t> index_;
  std::vector<Lattice> lattice_;

  Matrix nodes_;
  std::vector<std::size_t> cell_offsets_;
  std::vector<StencilEntry> cell_entries_;
  std::vector<std::size_t> interface_offsets_, inflow_offsets_;
  std::vector<SegmentEntry> interface_entries_, inflow_entries_;
  std::vector<double> interface_const_, inflow_const_;
};

inline double block_loss(const MlpParameters& params, const BlockLossSpec& spec, const FluxModel& model) {
  return BlockLoss(spec, model).value(params);
}

// Network values at (x, t_star) for each column of `spatial` (d x n).
inline std::vector<double> trace_restriction(const MlpParameters& params, double t_star,
                                             const Matrix& spatial) {
  if (spatial.rows() + 1 != params.input_dim()) {
    throw InvalidArgument("trace_restriction: spatial grid dimension mismatch");
  }
  Matrix z(spatial.rows() + 1, spatial.cols());
  z.topRows(spatial.rows()) = spatial;
  z.row(spatial.rows()).setConstant(t_star);
  const RowVector u = eval_batch(params, z);
  return std::vector<double>(u.data(), u.data() + u.size());
}

inline std::vector<double> trace_restriction(const MlpParameters& params, double t_star,
                                             const std::vector<double>& x) {
  return trace_restriction(params, t_star,
                           Matrix(Eigen::Map<const RowVector>(x.data(), static_cast<Eigen::Index>(x.size()))));
}

}  // namespace lsnn
