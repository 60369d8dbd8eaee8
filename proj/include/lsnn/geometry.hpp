#pragma once

// Space-time domains, block decomposition and uniform integration meshes.
//
// Space-time points are z = (x[, y], t): spatial axes first, time last.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "lsnn/error.hpp"
#include "lsnn/quadrature.hpp"

namespace lsnn {

inline constexpr int kMaxAxes = 3;

using PointFunction = std::function<double(const std::array<double, kMaxAxes>&)>;

inline std::string_view axis_name(int axis, int dim) {
  if (axis == dim) return "t";
  return axis == 0 ? "x" : "y";
}

struct SpaceTimeDomain {
  std::vector<double> spatial_lo;
  std::vector<double> spatial_hi;
  double t_final = 1.0;

  int dim() const { return static_cast<int>(spatial_lo.size()); }

  void validate() const {
    if (spatial_lo.size() != spatial_hi.size() || spatial_lo.empty() || spatial_lo.size() > 2) {
      throw InvalidArgument("domain: spatial bounds must have matching length 1 or 2");
    }
    for (std::size_t i = 0; i < spatial_lo.size(); ++i) {
      if (!(spatial_lo[i] < spatial_hi[i])) {
        throw InvalidArgument("domain: spatial_lo must be < spatial_hi on axis " +
                              std::string(axis_name(static_cast<int>(i), dim())));
      }
    }
    if (!(t_final > 0.0)) throw InvalidArgument("domain: t_final must be > 0");
  }
};

// A side of the spatial box, e.g. {0, false} is x = x_lo.
struct Face {
  int axis = 0;
  bool high = false;

  friend bool operator==(const Face&, const Face&) = default;
};

inline Face parse_face(std::string_view s) {
  if (s == "x_lo") return {0, false};
  if (s == "x_hi") return {0, true};
  if (s == "y_lo") return {1, false};
  if (s == "y_hi") return {1, true};
  throw InvalidArgument("unknown face '" + std::string(s) + "'");
}

inline std::string face_name(const Face& f) {
  return std::string(f.axis == 0 ? "x" : "y") + (f.high ? "_hi" : "_lo");
}

// Axis-aligned box in space-time; `axes` = d + 1.
struct SpaceTimeBox {
  int axes = 2;
  std::array<double, kMaxAxes> lo{};
  std::array<double, kMaxAxes> hi{};

  double extent(int a) const { return hi[a] - lo[a]; }
  double measure() const {
    double m = 1.0;
    for (int a = 0; a < axes; ++a) m *= extent(a);
    return m;
  }
  std::array<double, kMaxAxes> centroid() const {
    std::array<double, kMaxAxes> c{};
    for (int a = 0; a < axes; ++a) c[a] = 0.5 * (lo[a] + hi[a]);
    return c;
  }
  bool contains_closed(const std::array<double, kMaxAxes>& z, double tol = 0.0) const {
    for (int a = 0; a < axes; ++a) {
      if (z[a] < lo[a] - tol || z[a] > hi[a] + tol) return false;
    }
    return true;
  }
};

// One time slab (t_lo, t_hi) of the domain. The interface face is the plane t = t_lo.
struct BlockSpec {
  int index = 1;
  double t_lo = 0.0;
  double t_hi = 1.0;
  std::vector<double> spatial_lo;
  std::vector<double> spatial_hi;
  std::vector<Face> inflow_faces;

  int dim() const { return static_cast<int>(spatial_lo.size()); }

  SpaceTimeBox box() const {
    SpaceTimeBox b;
    b.axes = dim() + 1;
    for (int a = 0; a < dim(); ++a) {
      b.lo[a] = spatial_lo[a];
      b.hi[a] = spatial_hi[a];
    }
    b.lo[dim()] = t_lo;
    b.hi[dim()] = t_hi;
    return b;
  }
};

inline std::vector<BlockSpec> build_blocks(const SpaceTimeDomain& domain, int n_b,
                                           const std::vector<Face>& inflow_faces = {}) {
  if (n_b < 1) throw InvalidArgument("build_blocks: n_b must be >= 1");
  domain.validate();
  for (const Face& f : inflow_faces) {
    if (f.axis >= domain.dim()) throw InvalidArgument("build_blocks: inflow face outside domain");
  }
  std::vector<BlockSpec> blocks;
  blocks.reserve(n_b);
  const double T = domain.t_final;
  for (int k = 1; k <= n_b; ++k) {
    BlockSpec b;
    b.index = k;
    // Both ends use the same expression so neighbouring blocks share planes bit-exactly.
    b.t_lo = (k - 1) * T / n_b;
    b.t_hi = (k == n_b) ? T : k * T / n_b;
    b.spatial_lo = domain.spatial_lo;
    b.spatial_hi = domain.spatial_hi;
    b.inflow_faces = inflow_faces;
    blocks.push_back(std::move(b));
  }
  return blocks;
}

struct CellIndex {
  std::array<int, kMaxAxes> idx{};  // per axis, time last
};

struct QuadraturePoint {
  std::array<double, kMaxAxes> z{};
  double weight = 0.0;
  SpaceTimeBox control_volume;
};

// Uniform partition of a block into cells. Coordinates are recomputed from the
// lattice on demand; only the per-cell refinement flags are stored.
class IntegrationMesh {
 public:
  IntegrationMesh(BlockSpec block, std::array<int, kMaxAxes> counts, RuleKind rule,
                  std::vector<int> sub_m, int sub_n)
      : block_(std::move(block)), counts_(counts), rule_(rule), sub_m_(std::move(sub_m)),
        sub_n_(sub_n) {
    const int d = block_.dim();
    if (static_cast<int>(sub_m_.size()) == 1 && d == 2) sub_m_.push_back(sub_m_[0]);
    if (static_cast<int>(sub_m_.size()) != d) throw InvalidArgument("mesh: sub_m length");
    for (int m : sub_m_) {
      if (m < 1) throw InvalidArgument("mesh: sub_m must be >= 1");
    }
    if (sub_n_ < 1) throw InvalidArgument("mesh: sub_n must be >= 1");
    total_ = 1;
    for (int a = 0; a <= d; ++a) total_ *= static_cast<std::size_t>(counts_[a]);
    refined_.assign(total_, 0);
  }

  const BlockSpec& block() const { return block_; }
  int dim() const { return block_.dim(); }
  int axes() const { return dim() + 1; }
  RuleKind rule() const { return rule_; }
  const std::vector<int>& sub_m() const { return sub_m_; }
  int sub_n() const { return sub_n_; }

  int cells_along(int axis) const { return counts_[axis]; }
  std::size_t cell_count() const { return total_; }

  double lo(int axis) const { return axis == dim() ? block_.t_lo : block_.spatial_lo[axis]; }
  double hi(int axis) const { return axis == dim() ? block_.t_hi : block_.spatial_hi[axis]; }
  double cell_size(int axis) const { return (hi(axis) - lo(axis)) / counts_[axis]; }

  // Coordinate of lattice position `num / den` cells along `axis`, correctly
  // rounded from the exact ratio so that equal ratios give equal coordinates.
  double coordinate(int axis, long long num, long long den = 1) const {
    const long long total = den * counts_[axis];
    if (num == total) return hi(axis);
    if (num == 0) return lo(axis);
    return lo(axis) + (hi(axis) - lo(axis)) * (static_cast<double>(num) / static_cast<double>(total));
  }

  std::size_t flat(const CellIndex& c) const {
    std::size_t f = 0;
    for (int a = axes() - 1; a >= 0; --a) f = f * counts_[a] + c.idx[a];
    return f;
  }

  CellIndex unflatten(std::size_t f) const {
    CellIndex c;
    for (int a = 0; a < axes(); ++a) {
      c.idx[a] = static_cast<int>(f % counts_[a]);
      f /= counts_[a];
    }
    return c;
  }

  SpaceTimeBox cell_box(std::size_t f) const {
    const CellIndex c = unflatten(f);
    SpaceTimeBox b;
    b.axes = axes();
    for (int a = 0; a < axes(); ++a) {
      b.lo[a] = coordinate(a, c.idx[a]);
      b.hi[a] = coordinate(a, c.idx[a] + 1);
    }
    return b;
  }

  bool is_refined(std::size_t f) const { return refined_[f] != 0; }
  void set_refined(const std::vector<std::size_t>& cells) {
    refined_.assign(total_, 0);
    for (std::size_t c : cells) {
      if (c >= total_) throw InvalidArgument("mesh: refined cell index out of range");
      refined_[c] = 1;
    }
  }
  std::vector<std::size_t> refined_cells() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < total_; ++i) {
      if (refined_[i]) out.push_back(i);
    }
    return out;
  }

  // Control volume of lattice node `node` (per-axis lattice indices) for the
  // trapezoidal rule: the node-centred cell, halved at block faces.
  SpaceTimeBox node_control_volume(const std::array<int, kMaxAxes>& node) const {
    SpaceTimeBox b;
    b.axes = axes();
    for (int a = 0; a < axes(); ++a) {
      b.lo[a] = node[a] == 0 ? lo(a) : coordinate(a, 2LL * node[a] - 1, 2);
      b.hi[a] = node[a] == counts_[a] ? hi(a) : coordinate(a, 2LL * node[a] + 1, 2);
    }
    return b;
  }

  // Quadrature points of cell `f` for the mesh rule, with their control volumes.
  std::vector<QuadraturePoint> quadrature_points(std::size_t f) const {
    std::vector<QuadraturePoint> out;
    const SpaceTimeBox cell = cell_box(f);
    if (rule_ == RuleKind::midpoint) {
      out.push_back({cell.centroid(), cell.measure(), cell});
      return out;
    }
    const CellIndex c = unflatten(f);
    const int corners = 1 << axes();
    const double w = cell.measure() / corners;
    for (int mask = 0; mask < corners; ++mask) {
      std::array<int, kMaxAxes> node{};
      QuadraturePoint q;
      for (int a = 0; a < axes(); ++a) {
        node[a] = c.idx[a] + ((mask >> a) & 1);
        q.z[a] = coordinate(a, node[a]);
      }
      q.weight = w;
      q.control_volume = node_control_volume(node);
      out.push_back(q);
    }
    return out;
  }

  // The full control-volume partition for the mesh rule.
  std::vector<QuadraturePoint> control_volumes() const {
    std::vector<QuadraturePoint> out;
    if (rule_ == RuleKind::midpoint) {
      out.reserve(total_);
      for (std::size_t f = 0; f < total_; ++f) {
        const SpaceTimeBox b = cell_box(f);
        out.push_back({b.centroid(), b.measure(), b});
      }
      return out;
    }
    std::array<int, kMaxAxes> n{};
    std::size_t nodes = 1;
    for (int a = 0; a < axes(); ++a) nodes *= static_cast<std::size_t>(counts_[a] + 1);
    out.reserve(nodes);
    for (std::size_t k = 0; k < nodes; ++k) {
      std::size_t r = k;
      QuadraturePoint q;
      for (int a = 0; a < axes(); ++a) {
        n[a] = static_cast<int>(r % (counts_[a] + 1));
        r /= (counts_[a] + 1);
        q.z[a] = coordinate(a, n[a]);
      }
      q.control_volume = node_control_volume(n);
      q.weight = q.control_volume.measure();
      out.push_back(q);
    }
    return out;
  }

 private:
  BlockSpec block_;
  std::array<int, kMaxAxes> counts_{};
  RuleKind rule_;
  std::vector<int> sub_m_;
  int sub_n_;
  std::size_t total_ = 0;
  std::vector<char> refined_;
};

namespace detail {
inline int checked_count(double extent, double size, std::string_view axis) {
  if (!(size > 0.0)) throw InvalidArgument("mesh: cell size on axis " + std::string(axis) + " must be > 0");
  const double ratio = extent / size;
  const long long n = std::llround(ratio);
  if (n < 1 || std::abs(n * size - extent) > 1e-12 * std::abs(extent)) {
    throw InvalidArgument("mesh: cell size does not divide the block extent on axis " +
                          std::string(axis));
  }
  return static_cast<int>(n);
}
}  // namespace detail

// `h` holds one spatial size per axis (a single value is broadcast).
inline IntegrationMesh build_mesh(const BlockSpec& block, std::vector<double> h, double delta,
                                  RuleKind rule, std::vector<int> sub_m, int sub_n) {
  const int d = block.dim();
  if (h.size() == 1 && d == 2) h.push_back(h[0]);
  if (static_cast<int>(h.size()) != d) throw InvalidArgument("mesh: h must have one entry per axis");
  if (!(block.t_lo < block.t_hi)) throw InvalidArgument("mesh: empty block");
  std::array<int, kMaxAxes> counts{};
  for (int a = 0; a < d; ++a) {
    counts[a] = detail::checked_count(block.spatial_hi[a] - block.spatial_lo[a], h[a], axis_name(a, d));
  }
  counts[d] = detail::checked_count(block.t_hi - block.t_lo, delta, "t");
  return IntegrationMesh(block, counts, rule, std::move(sub_m), sub_n);
}

}  // namespace lsnn
