#pragma once

// Finite-difference, Hessian and blur operators with exact adjoints.
//
// Every operator is evaluated through a Window: the input array covers the
// `source` rectangle of the global grid, the output covers `target`, and the
// stencil uses global indices so Neumann rows and columns are decided by the
// position in the full image, never by the edge of the window. Applying an
// operator to the whole image is the special case source == target == grid.
// Adjoints map target-sized arrays back to source-sized arrays by scattering
// the transposed stencil.

#include "ovdd/field.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace ovdd {

/// Half-open index rectangle [row0, row0 + rows) x [col0, col0 + cols).
struct Rect {
  Index row0 = 0;
  Index col0 = 0;
  Index rows = 0;
  Index cols = 0;

  static Rect whole(const GridShape& g) { return {0, 0, g.rows, g.cols}; }

  Index row_end() const { return row0 + rows; }
  Index col_end() const { return col0 + cols; }
  Index size() const { return rows * cols; }
  bool empty() const { return rows <= 0 || cols <= 0; }

  bool contains(Index i, Index j) const {
    return i >= row0 && i < row_end() && j >= col0 && j < col_end();
  }
  bool contains(const Rect& r) const {
    return r.empty() || (r.row0 >= row0 && r.col0 >= col0 && r.row_end() <= row_end() &&
                         r.col_end() <= col_end());
  }

  /// Grows the rectangle by the given margins and clips it to the grid.
  Rect expanded(const GridShape& g, Index up, Index down, Index left, Index right) const {
    const Index r0 = std::max<Index>(0, row0 - up);
    const Index c0 = std::max<Index>(0, col0 - left);
    const Index r1 = std::min<Index>(g.rows, row_end() + down);
    const Index c1 = std::min<Index>(g.cols, col_end() + right);
    return {r0, c0, r1 - r0, c1 - c0};
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

struct Window {
  GridShape grid;
  Rect source;
  Rect target;

  static Window whole(const GridShape& g) { return {g, Rect::whole(g), Rect::whole(g)}; }
};

/// Uniform (2l+1) x (2l+1) averaging kernel.
struct BlurKernel {
  int half_width = 1;

  BlurKernel() = default;
  explicit BlurKernel(int l) : half_width(l) {
    if (l < 1) throw std::invalid_argument("BlurKernel: half-width must be >= 1");
  }
  int size() const { return 2 * half_width + 1; }
  double weight() const { return 1.0 / (double(size()) * double(size())); }
};

namespace detail {

// The stencil reads (or the adjoint writes) target grown by these margins;
// that region must lie inside the source array.
inline void require_cover(const Window& w, Index up, Index down, Index left, Index right,
                          const char* op) {
  const Rect need = w.target.expanded(w.grid, up, down, left, right);
  if (!w.source.contains(need) || !Rect::whole(w.grid).contains(w.source)) {
    throw std::logic_error(std::string(op) + ": stencil escapes the source window");
  }
}

template <typename Derived>
void require_extent(const Eigen::ArrayBase<Derived>& a, const Rect& r, const char* op) {
  if (a.rows() != r.rows || a.cols() != r.cols) {
    throw std::invalid_argument(std::string(op) + ": array extent does not match window");
  }
}

template <typename Scalar>
struct Reader {
  const Eigen::Ref<const ScalarField<Scalar>>& a;
  Rect src;
  Scalar operator()(Index i, Index j) const { return a(i - src.row0, j - src.col0); }
};

template <typename Scalar>
struct Writer {
  ScalarField<Scalar>& a;
  Rect src;
  Scalar& operator()(Index i, Index j) const { return a(i - src.row0, j - src.col0); }
};

}  // namespace detail

// ---- first differences -----------------------------------------------------

namespace detail {

// Shared implementation of the four difference operators. Axis 0 is the row
// direction (D_x), axis 1 the column direction (D_y).
template <int Axis, bool Forward, typename Scalar>
ScalarField<Scalar> difference(const Eigen::Ref<const ScalarField<Scalar>>& u, const Window& w) {
  require_extent(u, w.source, "difference");
  require_cover(w, (!Forward && Axis == 0) ? 1 : 0, (Forward && Axis == 0) ? 1 : 0,
                (!Forward && Axis == 1) ? 1 : 0, (Forward && Axis == 1) ? 1 : 0, "difference");
  const Reader<Scalar> in{u, w.source};
  const Index extent = Axis == 0 ? w.grid.rows : w.grid.cols;
  ScalarField<Scalar> out(w.target.rows, w.target.cols);
  for (Index lj = 0; lj < w.target.cols; ++lj) {
    const Index j = w.target.col0 + lj;
    for (Index li = 0; li < w.target.rows; ++li) {
      const Index i = w.target.row0 + li;
      const Index k = Axis == 0 ? i : j;
      Scalar v = 0;
      if (Forward && k + 1 < extent) {
        v = Axis == 0 ? in(i + 1, j) - in(i, j) : in(i, j + 1) - in(i, j);
      } else if (!Forward && k > 0) {
        v = Axis == 0 ? in(i, j) - in(i - 1, j) : in(i, j) - in(i, j - 1);
      }
      out(li, lj) = v;
    }
  }
  return out;
}

template <int Axis, bool Forward, typename Scalar>
void difference_adjoint_add(const Eigen::Ref<const ScalarField<Scalar>>& p, const Window& w,
                            ScalarField<Scalar>& out) {
  require_extent(p, w.target, "difference_adjoint");
  const Writer<Scalar> acc{out, w.source};
  const Index extent = Axis == 0 ? w.grid.rows : w.grid.cols;
  for (Index lj = 0; lj < w.target.cols; ++lj) {
    const Index j = w.target.col0 + lj;
    for (Index li = 0; li < w.target.rows; ++li) {
      const Index i = w.target.row0 + li;
      const Index k = Axis == 0 ? i : j;
      const Scalar v = p(li, lj);
      if (Forward && k + 1 < extent) {
        (Axis == 0 ? acc(i + 1, j) : acc(i, j + 1)) += v;
        acc(i, j) -= v;
      } else if (!Forward && k > 0) {
        acc(i, j) += v;
        (Axis == 0 ? acc(i - 1, j) : acc(i, j - 1)) -= v;
      }
    }
  }
}

template <int Axis, bool Forward, typename Scalar>
ScalarField<Scalar> difference_adjoint(const Eigen::Ref<const ScalarField<Scalar>>& p,
                                       const Window& w) {
  require_cover(w, (!Forward && Axis == 0) ? 1 : 0, (Forward && Axis == 0) ? 1 : 0,
                (!Forward && Axis == 1) ? 1 : 0, (Forward && Axis == 1) ? 1 : 0,
                "difference_adjoint");
  ScalarField<Scalar> out = ScalarField<Scalar>::Zero(w.source.rows, w.source.cols);
  difference_adjoint_add<Axis, Forward, Scalar>(p, w, out);
  return out;
}

}  // namespace detail

#define OVDD_DIFFERENCE_OP(name, axis, forward)                                              \
  template <typename Derived>                                                                \
  ScalarField<typename Derived::Scalar> name(const Eigen::ArrayBase<Derived>& u,             \
                                             const Window& w) {                              \
    using S = typename Derived::Scalar;                                                      \
    return detail::difference<axis, forward, S>(u.derived(), w);                             \
  }                                                                                          \
  template <typename Derived>                                                                \
  ScalarField<typename Derived::Scalar> name(const Eigen::ArrayBase<Derived>& u) {           \
    return name(u, Window::whole(shape_of(u)));                                              \
  }                                                                                          \
  template <typename Derived>                                                                \
  ScalarField<typename Derived::Scalar> name##_adjoint(const Eigen::ArrayBase<Derived>& p,   \
                                                       const Window& w) {                    \
    using S = typename Derived::Scalar;                                                      \
    return detail::difference_adjoint<axis, forward, S>(p.derived(), w);                     \
  }                                                                                          \
  template <typename Derived>                                                                \
  ScalarField<typename Derived::Scalar> name##_adjoint(const Eigen::ArrayBase<Derived>& p) { \
    return name##_adjoint(p, Window::whole(shape_of(p)));                                    \
  }

OVDD_DIFFERENCE_OP(dxp, 0, true)
OVDD_DIFFERENCE_OP(dxm, 0, false)
OVDD_DIFFERENCE_OP(dyp, 1, true)
OVDD_DIFFERENCE_OP(dym, 1, false)

#undef OVDD_DIFFERENCE_OP

// ---- gradients -------------------------------------------------------------

template <typename Derived>
VectorField<typename Derived::Scalar> grad_plus(const Eigen::ArrayBase<Derived>& u,
                                                const Window& w) {
  VectorField<typename Derived::Scalar> p;
  p[0] = dxp(u, w);
  p[1] = dyp(u, w);
  return p;
}
template <typename Derived>
VectorField<typename Derived::Scalar> grad_plus(const Eigen::ArrayBase<Derived>& u) {
  return grad_plus(u, Window::whole(shape_of(u)));
}

template <typename Derived>
VectorField<typename Derived::Scalar> grad_minus(const Eigen::ArrayBase<Derived>& u,
                                                 const Window& w) {
  VectorField<typename Derived::Scalar> p;
  p[0] = dxm(u, w);
  p[1] = dym(u, w);
  return p;
}
template <typename Derived>
VectorField<typename Derived::Scalar> grad_minus(const Eigen::ArrayBase<Derived>& u) {
  return grad_minus(u, Window::whole(shape_of(u)));
}

template <typename Scalar>
ScalarField<Scalar> grad_plus_adjoint(const VectorField<Scalar>& p, const Window& w) {
  detail::require_cover(w, 0, 1, 0, 1, "grad_plus_adjoint");
  ScalarField<Scalar> out = ScalarField<Scalar>::Zero(w.source.rows, w.source.cols);
  detail::difference_adjoint_add<0, true, Scalar>(p[0], w, out);
  detail::difference_adjoint_add<1, true, Scalar>(p[1], w, out);
  return out;
}
template <typename Scalar>
ScalarField<Scalar> grad_plus_adjoint(const VectorField<Scalar>& p) {
  return grad_plus_adjoint(p, Window::whole(p.shape()));
}

template <typename Scalar>
ScalarField<Scalar> grad_minus_adjoint(const VectorField<Scalar>& p, const Window& w) {
  detail::require_cover(w, 1, 0, 1, 0, "grad_minus_adjoint");
  ScalarField<Scalar> out = ScalarField<Scalar>::Zero(w.source.rows, w.source.cols);
  detail::difference_adjoint_add<0, false, Scalar>(p[0], w, out);
  detail::difference_adjoint_add<1, false, Scalar>(p[1], w, out);
  return out;
}
template <typename Scalar>
ScalarField<Scalar> grad_minus_adjoint(const VectorField<Scalar>& p) {
  return grad_minus_adjoint(p, Window::whole(p.shape()));
}

// ---- Hessian ---------------------------------------------------------------

/// Discrete Hessian: backward differences applied to each channel of the
/// forward gradient. Channel order is (D_x^- D_x^+, D_y^- D_x^+, D_x^- D_y^+,
/// D_y^- D_y^+), i.e. (p11, p12, p21, p22).
template <typename Derived>
TensorField<typename Derived::Scalar> hessian(const Eigen::ArrayBase<Derived>& u_in,
                                              const Window& w) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Ref<const ScalarField<Scalar>> u(u_in.derived());
  detail::require_extent(u, w.source, "hessian");
  detail::require_cover(w, 1, 1, 1, 1, "hessian");
  const detail::Reader<Scalar> in{u, w.source};
  const Index M = w.grid.rows, N = w.grid.cols;
  auto p1 = [&](Index k, Index l) { return k + 1 < M ? in(k + 1, l) - in(k, l) : Scalar(0); };
  auto p2 = [&](Index k, Index l) { return l + 1 < N ? in(k, l + 1) - in(k, l) : Scalar(0); };

  TensorField<Scalar> h(w.target.rows, w.target.cols);
  for (Index lj = 0; lj < w.target.cols; ++lj) {
    const Index j = w.target.col0 + lj;
    for (Index li = 0; li < w.target.rows; ++li) {
      const Index i = w.target.row0 + li;
      const Scalar a1 = p1(i, j), a2 = p2(i, j);
      h[0](li, lj) = i > 0 ? a1 - p1(i - 1, j) : Scalar(0);
      h[1](li, lj) = j > 0 ? a1 - p1(i, j - 1) : Scalar(0);
      h[2](li, lj) = i > 0 ? a2 - p2(i - 1, j) : Scalar(0);
      h[3](li, lj) = j > 0 ? a2 - p2(i, j - 1) : Scalar(0);
    }
  }
  return h;
}
template <typename Derived>
TensorField<typename Derived::Scalar> hessian(const Eigen::ArrayBase<Derived>& u) {
  return hessian(u, Window::whole(shape_of(u)));
}

template <typename Scalar>
ScalarField<Scalar> hessian_adjoint(const TensorField<Scalar>& h, const Window& w) {
  detail::require_extent(h[0], w.target, "hessian_adjoint");
  detail::require_cover(w, 1, 1, 1, 1, "hessian_adjoint");
  ScalarField<Scalar> out = ScalarField<Scalar>::Zero(w.source.rows, w.source.cols);
  const detail::Writer<Scalar> acc{out, w.source};
  const Index M = w.grid.rows, N = w.grid.cols;
  // Transposes of p1(k,l) and p2(k,l) from hessian().
  auto p1t = [&](Index k, Index l, Scalar v) {
    if (k + 1 < M) {
      acc(k + 1, l) += v;
      acc(k, l) -= v;
    }
  };
  auto p2t = [&](Index k, Index l, Scalar v) {
    if (l + 1 < N) {
      acc(k, l + 1) += v;
      acc(k, l) -= v;
    }
  };
  for (Index lj = 0; lj < w.target.cols; ++lj) {
    const Index j = w.target.col0 + lj;
    for (Index li = 0; li < w.target.rows; ++li) {
      const Index i = w.target.row0 + li;
      if (i > 0) {
        p1t(i, j, h[0](li, lj));
        p1t(i - 1, j, -h[0](li, lj));
        p2t(i, j, h[2](li, lj));
        p2t(i - 1, j, -h[2](li, lj));
      }
      if (j > 0) {
        p1t(i, j, h[1](li, lj));
        p1t(i, j - 1, -h[1](li, lj));
        p2t(i, j, h[3](li, lj));
        p2t(i, j - 1, -h[3](li, lj));
      }
    }
  }
  return out;
}
template <typename Scalar>
ScalarField<Scalar> hessian_adjoint(const TensorField<Scalar>& h) {
  return hessian_adjoint(h, Window::whole(h.shape()));
}

// ---- blur ------------------------------------------------------------------

/// Correlation with the uniform kernel, zero padding outside the image.
/// Evaluated as two separable window sums so each output reads only its own
/// (2l+1)^2 neighbourhood.
template <typename Derived>
ScalarField<typename Derived::Scalar> blur(const Eigen::ArrayBase<Derived>& u_in,
                                           const BlurKernel& k, const Window& w) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Ref<const ScalarField<Scalar>> u(u_in.derived());
  detail::require_extent(u, w.source, "blur");
  const Index l = k.half_width;
  detail::require_cover(w, l, l, l, l, "blur");
  const detail::Reader<Scalar> in{u, w.source};

  // Row band of the intermediate: every row a target output can reach.
  const Rect band = w.target.expanded(w.grid, l, l, 0, 0);
  ScalarField<Scalar> rowsum(band.rows, band.cols);
  for (Index lj = 0; lj < band.cols; ++lj) {
    const Index j = band.col0 + lj;
    const Index b0 = std::max<Index>(0, j - l), b1 = std::min<Index>(w.grid.cols - 1, j + l);
    for (Index li = 0; li < band.rows; ++li) {
      const Index i = band.row0 + li;
      Scalar s = 0;
      for (Index b = b0; b <= b1; ++b) s += in(i, b);
      rowsum(li, lj) = s;
    }
  }
  const Scalar weight = Scalar(k.weight());
  ScalarField<Scalar> out(w.target.rows, w.target.cols);
  for (Index lj = 0; lj < w.target.cols; ++lj) {
    for (Index li = 0; li < w.target.rows; ++li) {
      const Index i = w.target.row0 + li;
      const Index a0 = std::max<Index>(0, i - l), a1 = std::min<Index>(w.grid.rows - 1, i + l);
      Scalar s = 0;
      for (Index a = a0; a <= a1; ++a) s += rowsum(a - band.row0, lj);
      out(li, lj) = weight * s;
    }
  }
  return out;
}
template <typename Derived>
ScalarField<typename Derived::Scalar> blur(const Eigen::ArrayBase<Derived>& u,
                                           const BlurKernel& k) {
  return blur(u, k, Window::whole(shape_of(u)));
}

template <typename Derived>
ScalarField<typename Derived::Scalar> blur_adjoint(const Eigen::ArrayBase<Derived>& q_in,
                                                   const BlurKernel& k, const Window& w) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Ref<const ScalarField<Scalar>> q(q_in.derived());
  detail::require_extent(q, w.target, "blur_adjoint");
  const Index l = k.half_width;
  detail::require_cover(w, l, l, l, l, "blur_adjoint");

  // Scatter along rows first: colsum(a, j) = sum of q(i, j) over target rows
  // i with |i - a| <= l, then along columns into the source array.
  const Rect band = w.target.expanded(w.grid, l, l, 0, 0);
  ScalarField<Scalar> colsum = ScalarField<Scalar>::Zero(band.rows, band.cols);
  for (Index lj = 0; lj < w.target.cols; ++lj) {
    for (Index li = 0; li < w.target.rows; ++li) {
      const Index i = w.target.row0 + li;
      const Index a0 = std::max<Index>(0, i - l), a1 = std::min<Index>(w.grid.rows - 1, i + l);
      const Scalar v = q(li, lj);
      for (Index a = a0; a <= a1; ++a) colsum(a - band.row0, lj) += v;
    }
  }
  const Scalar weight = Scalar(k.weight());
  ScalarField<Scalar> out = ScalarField<Scalar>::Zero(w.source.rows, w.source.cols);
  const detail::Writer<Scalar> acc{out, w.source};
  for (Index lj = 0; lj < band.cols; ++lj) {
    const Index j = band.col0 + lj;
    const Index b0 = std::max<Index>(0, j - l), b1 = std::min<Index>(w.grid.cols - 1, j + l);
    for (Index li = 0; li < band.rows; ++li) {
      const Index a = band.row0 + li;
      const Scalar v = weight * colsum(li, lj);
      for (Index b = b0; b <= b1; ++b) acc(a, b) += v;
    }
  }
  return out;
}
template <typename Derived>
ScalarField<typename Derived::Scalar> blur_adjoint(const Eigen::ArrayBase<Derived>& q,
                                                   const BlurKernel& k) {
  return blur_adjoint(q, k, Window::whole(shape_of(q)));
}

// ---- operator norm ---------------------------------------------------------

/// Lower estimate of ||op||^2 by power iteration on op* op, started from a
/// seeded uniform random field. Returns the Rayleigh quotient of the last
/// iterate.
template <typename Scalar = double, typename Forward, typename Adjoint>
Scalar op_norm_sq_estimate(Forward&& forward, Adjoint&& adjoint, const GridShape& shape,
                           int iters, std::uint64_t seed = 0x5eedULL) {
  if (iters < 1) throw std::invalid_argument("op_norm_sq_estimate: iters must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ScalarField<Scalar> x(shape.rows, shape.cols);
  for (Index k = 0; k < x.size(); ++k) x(k) = Scalar(dist(rng));
  x /= std::sqrt(squared_norm(x));

  Scalar estimate = 0;
  for (int it = 0; it < iters; ++it) {
    const auto y = forward(x);
    estimate = squared_norm(y);  // ||A x||^2 with ||x|| = 1
    ScalarField<Scalar> z = adjoint(y);
    const Scalar nz = std::sqrt(squared_norm(z));
    if (nz == 0) return Scalar(0);
    x = z / nz;
  }
  return estimate;
}

}  // namespace ovdd
