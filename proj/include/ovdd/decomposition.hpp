#pragma once

// Rectangular partitions, essential domains, the overlapping layout they
// induce, stacked per-subdomain fields and the consensus projection.
//
// The consensus projection replaces every pixel value by the average over
// all subdomains whose essential domain contains the pixel. It is the only
// operation that reads more than one subdomain's data.

#include "ovdd/field.hpp"
#include "ovdd/operators.hpp"
#include "ovdd/parallel.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ovdd {

using PixelMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// ---- partitions ------------------------------------------------------------

class Partition {
 public:
  Partition(GridShape grid, int P, int Q, std::vector<Rect> tiles)
      : grid_(grid), P_(P), Q_(Q), tiles_(std::move(tiles)) {}

  const GridShape& grid() const { return grid_; }
  int row_tiles() const { return P_; }
  int col_tiles() const { return Q_; }
  int size() const { return static_cast<int>(tiles_.size()); }
  /// Tile s = p * Q + q covers row band p and column band q.
  const Rect& tile(int s) const { return tiles_.at(static_cast<std::size_t>(s)); }
  const std::vector<Rect>& tiles() const { return tiles_; }

 private:
  GridShape grid_;
  int P_ = 1;
  int Q_ = 1;
  std::vector<Rect> tiles_;
};

namespace detail {

// Band sizes ceil(n/k) for the first n % k bands, floor(n/k) afterwards.
inline std::vector<Index> band_starts(Index n, int k) {
  std::vector<Index> starts(static_cast<std::size_t>(k) + 1, 0);
  const Index base = n / k, extra = n % k;
  for (int b = 0; b < k; ++b) starts[b + 1] = starts[b] + base + (b < extra ? 1 : 0);
  return starts;
}

}  // namespace detail

inline Partition partition_rect(const GridShape& grid, int P, int Q) {
  if (P < 1 || P > grid.rows || Q < 1 || Q > grid.cols) {
    throw std::invalid_argument("partition_rect: need 1 <= P <= M and 1 <= Q <= N, got " +
                                std::to_string(P) + "x" + std::to_string(Q) + " on " +
                                std::to_string(grid.rows) + "x" + std::to_string(grid.cols));
  }
  const auto rs = detail::band_starts(grid.rows, P);
  const auto cs = detail::band_starts(grid.cols, Q);
  std::vector<Rect> tiles;
  tiles.reserve(static_cast<std::size_t>(P) * Q);
  for (int p = 0; p < P; ++p)
    for (int q = 0; q < Q; ++q)
      tiles.push_back({rs[p], cs[q], rs[p + 1] - rs[p], cs[q + 1] - cs[q]});
  return {grid, P, Q, std::move(tiles)};
}

// ---- stencils and essential domains ----------------------------------------

/// Forward gradient support: (i,j), (i+1,j), (i,j+1).
struct ForwardOne {
  friend bool operator==(const ForwardOne&, const ForwardOne&) = default;
};
/// Square band: (2l+1)^2 neighbourhood.
struct Band {
  int half_width = 1;
  friend bool operator==(const Band&, const Band&) = default;
};
/// Forward gradient of the backward neighbourhood (discrete Hessian support).
struct BackwardForward {
  friend bool operator==(const BackwardForward&, const BackwardForward&) = default;
};

using StencilSpec = std::variant<ForwardOne, Band, BackwardForward>;

namespace detail {

template <typename Mark>
void mark_forward(const GridShape& g, Index i, Index j, Mark&& mark) {
  mark(i, j);
  if (i + 1 < g.rows) mark(i + 1, j);
  if (j + 1 < g.cols) mark(i, j + 1);
}

// Calls mark(k, l) for every pixel the integrand at (i, j) depends on.
template <typename Mark>
void mark_stencil(const GridShape& g, const StencilSpec& stencil, Index i, Index j, Mark&& mark) {
  if (std::holds_alternative<ForwardOne>(stencil)) {
    mark_forward(g, i, j, mark);
  } else if (const auto* band = std::get_if<Band>(&stencil)) {
    const Index l = band->half_width;
    for (Index b = std::max<Index>(0, j - l); b <= std::min<Index>(g.cols - 1, j + l); ++b)
      for (Index a = std::max<Index>(0, i - l); a <= std::min<Index>(g.rows - 1, i + l); ++a)
        mark(a, b);
  } else {
    // Backward step only where a backward difference is nonzero; at (0, 0)
    // every Hessian channel vanishes and the pixel depends on itself only.
    mark(i, j);
    if (i > 0 || j > 0) mark_forward(g, i, j, mark);
    if (i > 0) mark_forward(g, i - 1, j, mark);
    if (j > 0) mark_forward(g, i, j - 1, mark);
  }
}

// Tile grown by the stencil's reach in each direction, clipped to the grid.
// Always contains the essential domain; it can be larger (corners).
inline Rect stencil_reach(const GridShape& g, const Rect& tile, const StencilSpec& stencil) {
  if (std::holds_alternative<ForwardOne>(stencil)) return tile.expanded(g, 0, 1, 0, 1);
  if (const auto* band = std::get_if<Band>(&stencil)) {
    const Index l = band->half_width;
    return tile.expanded(g, l, l, l, l);
  }
  return tile.expanded(g, 1, 1, 1, 1);
}

}  // namespace detail

/// Minimal pixel set whose values determine the integrand on `region`.
inline PixelMask essential_domain(const GridShape& grid, const PixelMask& region,
                                  const StencilSpec& stencil) {
  if (region.rows() != grid.rows || region.cols() != grid.cols)
    throw std::invalid_argument("essential_domain: region mask does not match grid");
  PixelMask out = PixelMask::Constant(grid.rows, grid.cols, false);
  auto mark = [&](Index a, Index b) { out(a, b) = true; };
  for (Index j = 0; j < grid.cols; ++j)
    for (Index i = 0; i < grid.rows; ++i)
      if (region(i, j)) detail::mark_stencil(grid, stencil, i, j, mark);
  return out;
}

inline PixelMask essential_domain(const GridShape& grid, const Rect& region,
                                  const StencilSpec& stencil) {
  PixelMask m = PixelMask::Constant(grid.rows, grid.cols, false);
  m.block(region.row0, region.col0, region.rows, region.cols).setConstant(true);
  return essential_domain(grid, m, stencil);
}

/// True when every pixel needed by `inner` is also needed by `outer`.
inline bool stencil_subsumes(const StencilSpec& outer, const StencilSpec& inner) {
  const GridShape g(9, 9);
  for (Index j = 0; j < g.cols; ++j)
    for (Index i = 0; i < g.rows; ++i) {
      const Rect px{i, j, 1, 1};
      const PixelMask a = essential_domain(g, px, outer);
      const PixelMask b = essential_domain(g, px, inner);
      if ((b && !a).any()) return false;
    }
  return true;
}

// ---- overlapping layout ----------------------------------------------------

/// Nonoverlapping tiles together with their essential domains. Subdomain s
/// stores its fields over box(s), the tile grown by the stencil reach; pixels
/// of the box outside the essential domain always hold zero.
class OverlapLayout {
 public:
  OverlapLayout(Partition partition, StencilSpec stencil)
      : partition_(std::move(partition)), stencil_(stencil) {
    const GridShape& g = partition_.grid();
    const int ns = partition_.size();
    boxes_.reserve(ns);
    masks_.reserve(ns);
    counts_ = Eigen::ArrayXXi::Zero(g.rows, g.cols);
    for (int s = 0; s < ns; ++s) {
      const PixelMask dom = essential_domain(g, partition_.tile(s), stencil_);
      const Rect box = detail::stencil_reach(g, partition_.tile(s), stencil_);
      boxes_.push_back(box);
      masks_.push_back(dom.block(box.row0, box.col0, box.rows, box.cols));
      counts_.block(box.row0, box.col0, box.rows, box.cols) += masks_.back().cast<int>();
    }
    if ((counts_ < 1).any())
      throw std::logic_error("OverlapLayout: essential domains do not cover the grid");

    // CSR membership lists, ascending subdomain index per pixel.
    offsets_.assign(static_cast<std::size_t>(g.size()) + 1, 0);
    for (Index p = 0; p < g.size(); ++p) offsets_[p + 1] = offsets_[p] + counts_(p);
    members_.resize(static_cast<std::size_t>(offsets_.back()));
    std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
    for (int s = 0; s < ns; ++s) {
      const Rect& b = boxes_[s];
      for (Index j = b.col0; j < b.col_end(); ++j)
        for (Index i = b.row0; i < b.row_end(); ++i)
          if (masks_[s](i - b.row0, j - b.col0)) members_[fill[i + j * g.rows]++] = s;
    }
  }

  const GridShape& grid() const { return partition_.grid(); }
  const Partition& partition() const { return partition_; }
  const StencilSpec& stencil() const { return stencil_; }
  int size() const { return partition_.size(); }

  const Rect& tile(int s) const { return partition_.tile(s); }
  /// Tile s grown by the stencil reach; contains the essential domain.
  const Rect& box(int s) const { return boxes_.at(static_cast<std::size_t>(s)); }
  /// Essential-domain indicator over box(s).
  const PixelMask& mask(int s) const { return masks_.at(static_cast<std::size_t>(s)); }
  /// Source = box(s), target = tile(s).
  Window window(int s) const { return {grid(), box(s), tile(s)}; }

  bool in_domain(int s, Index i, Index j) const {
    const Rect& b = box(s);
    return b.contains(i, j) && mask(s)(i - b.row0, j - b.col0);
  }

  /// Essential domain of subdomain s as a global mask.
  PixelMask domain(int s) const {
    PixelMask m = PixelMask::Constant(grid().rows, grid().cols, false);
    const Rect& b = box(s);
    m.block(b.row0, b.col0, b.rows, b.cols) = mask(s);
    return m;
  }

  int count(Index i, Index j) const { return counts_(i, j); }
  const Eigen::ArrayXXi& counts() const { return counts_; }
  std::span<const int> members(Index i, Index j) const {
    const Index p = i + j * grid().rows;
    return {members_.data() + offsets_[p], static_cast<std::size_t>(counts_(p))};
  }

 private:
  Partition partition_;
  StencilSpec stencil_;
  std::vector<Rect> boxes_;
  std::vector<PixelMask> masks_;
  Eigen::ArrayXXi counts_;
  std::vector<int> offsets_;
  std::vector<int> members_;
};

// ---- stacked fields --------------------------------------------------------

/// Element of the direct sum of the per-subdomain spaces: one array per
/// subdomain over its box, zero outside its essential domain.
template <typename Scalar>
class StackedField {
 public:
  StackedField() = default;
  explicit StackedField(const OverlapLayout& layout) : layout_(&layout) {
    parts_.reserve(layout.size());
    for (int s = 0; s < layout.size(); ++s)
      parts_.push_back(ScalarField<Scalar>::Zero(layout.box(s).rows, layout.box(s).cols));
  }

  const OverlapLayout& layout() const { return *layout_; }
  int size() const { return static_cast<int>(parts_.size()); }
  ScalarField<Scalar>& part(int s) { return parts_.at(static_cast<std::size_t>(s)); }
  const ScalarField<Scalar>& part(int s) const { return parts_.at(static_cast<std::size_t>(s)); }

  StackedField& operator+=(const StackedField& o) {
    check(o);
    for (std::size_t s = 0; s < parts_.size(); ++s) parts_[s] += o.parts_[s];
    return *this;
  }
  StackedField& operator-=(const StackedField& o) {
    check(o);
    for (std::size_t s = 0; s < parts_.size(); ++s) parts_[s] -= o.parts_[s];
    return *this;
  }
  StackedField& operator*=(Scalar a) {
    for (auto& p : parts_) p *= a;
    return *this;
  }
  friend StackedField operator+(StackedField a, const StackedField& b) { return a += b; }
  friend StackedField operator-(StackedField a, const StackedField& b) { return a -= b; }
  friend StackedField operator*(Scalar a, StackedField x) { return x *= a; }

 private:
  void check(const StackedField& o) const {
    if (layout_ != o.layout_) throw std::invalid_argument("StackedField: layouts differ");
  }

  const OverlapLayout* layout_ = nullptr;
  std::vector<ScalarField<Scalar>> parts_;
};

template <typename Scalar>
Scalar inner(const StackedField<Scalar>& a, const StackedField<Scalar>& b) {
  if (&a.layout() != &b.layout()) throw std::invalid_argument("inner: layouts differ");
  Scalar sum = 0;
  for (int s = 0; s < a.size(); ++s) sum += (a.part(s) * b.part(s)).sum();
  return sum;
}

template <typename Scalar>
Scalar squared_norm(const StackedField<Scalar>& a) {
  Scalar sum = 0;
  for (int s = 0; s < a.size(); ++s) sum += a.part(s).square().sum();
  return sum;
}

/// Restriction of a global field to every essential domain.
template <typename Derived>
StackedField<typename Derived::Scalar> restrict_to(const OverlapLayout& layout,
                                                   const Eigen::ArrayBase<Derived>& u,
                                                   int workers = 1) {
  using Scalar = typename Derived::Scalar;
  if (u.rows() != layout.grid().rows || u.cols() != layout.grid().cols)
    throw std::invalid_argument("restrict_to: field does not match layout grid");
  StackedField<Scalar> x(layout);
  parallel_for(static_cast<std::size_t>(layout.size()), workers, [&](std::size_t k) {
    const int s = static_cast<int>(k);
    const Rect& b = layout.box(s);
    x.part(s) = layout.mask(s).select(u.derived().block(b.row0, b.col0, b.rows, b.cols),
                                      Scalar(0));
  });
  return x;
}

/// Per-pixel average over the subdomains sharing the pixel, as a global
/// field. Members are visited in ascending order and the average is taken as
/// v0 + sum(v_k - v0) / c, so equal values reproduce themselves exactly and
/// the result does not depend on the worker count.
template <typename Scalar>
ScalarField<Scalar> assemble_global(const StackedField<Scalar>& x, int workers = 1) {
  const OverlapLayout& layout = x.layout();
  const GridShape& g = layout.grid();
  ScalarField<Scalar> avg(g.rows, g.cols);
  parallel_for(static_cast<std::size_t>(g.cols), workers, [&](std::size_t jj) {
    const Index j = static_cast<Index>(jj);
    for (Index i = 0; i < g.rows; ++i) {
      const auto mem = layout.members(i, j);
      auto value = [&](int s) {
        const Rect& b = layout.box(s);
        return x.part(s)(i - b.row0, j - b.col0);
      };
      const Scalar v0 = value(mem[0]);
      Scalar acc = 0;
      for (std::size_t k = 1; k < mem.size(); ++k) acc += value(mem[k]) - v0;
      avg(i, j) = mem.size() == 1 ? v0 : v0 + acc / Scalar(mem.size());
    }
  });
  return avg;
}

/// Orthogonal projection onto consistent stacked fields (kernel of the jump
/// operator).
template <typename Scalar>
StackedField<Scalar> project_consensus(const StackedField<Scalar>& x, int workers = 1) {
  return restrict_to(x.layout(), assemble_global(x, workers), workers);
}

/// ||(I - P) x||_2 for the consensus projection P.
template <typename Scalar>
Scalar consensus_residual(const StackedField<Scalar>& x, int workers = 1) {
  return std::sqrt(squared_norm(x - project_consensus(x, workers)));
}

template <typename Scalar>
struct InterfaceJump {
  int s = 0;
  int t = 0;
  std::vector<PixelIndex> pixels;
  std::vector<Scalar> values;  // x_s - x_t at each pixel
};

template <typename Scalar>
struct JumpReport {
  Scalar residual = 0;  // ||(I - P) x||_2
  std::vector<InterfaceJump<Scalar>> pairs;
};

/// Pairwise jumps x_s - x_t on every thick interface (s < t), plus the
/// projection residual the solver monitors.
template <typename Scalar>
JumpReport<Scalar> jump(const StackedField<Scalar>& x) {
  const OverlapLayout& layout = x.layout();
  const GridShape& g = layout.grid();
  JumpReport<Scalar> report;
  report.residual = consensus_residual(x);
  std::vector<std::vector<int>> pair_index(layout.size(), std::vector<int>(layout.size(), -1));
  for (Index j = 0; j < g.cols; ++j)
    for (Index i = 0; i < g.rows; ++i) {
      const auto mem = layout.members(i, j);
      for (std::size_t a = 0; a < mem.size(); ++a)
        for (std::size_t b = a + 1; b < mem.size(); ++b) {
          const int s = mem[a], t = mem[b];
          int& slot = pair_index[s][t];
          if (slot < 0) {
            slot = static_cast<int>(report.pairs.size());
            report.pairs.push_back({s, t, {}, {}});
          }
          const Rect &bs = layout.box(s), &bt = layout.box(t);
          auto& pair = report.pairs[slot];
          pair.pixels.push_back({i, j});
          pair.values.push_back(x.part(s)(i - bs.row0, j - bs.col0) -
                                x.part(t)(i - bt.row0, j - bt.col0));
        }
    }
  return report;
}

}  // namespace ovdd
