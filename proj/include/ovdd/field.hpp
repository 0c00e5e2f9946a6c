#pragma once

// Dense image grids and the pointwise algebra shared by every solver.
//
// A scalar field is a plain Eigen array with rows indexing the first image
// coordinate (i, "x") and columns the second (j, "y"). Vector and tensor
// fields are fixed-size bundles of scalar fields. Indices are 0-based.

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ovdd {

using Index = Eigen::Index;

struct GridShape {
  Index rows = 0;  // M
  Index cols = 0;  // N

  GridShape() = default;
  GridShape(Index m, Index n) : rows(m), cols(n) {
    if (m < 1 || n < 1) {
      throw std::invalid_argument("GridShape: extents must be positive, got " +
                                  std::to_string(m) + "x" + std::to_string(n));
    }
  }

  Index size() const { return rows * cols; }
  bool contains(Index i, Index j) const { return i >= 0 && j >= 0 && i < rows && j < cols; }

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

struct PixelIndex {
  Index i = 0;
  Index j = 0;
  friend bool operator==(const PixelIndex&, const PixelIndex&) = default;
};

template <typename Scalar>
using ScalarField = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar, int Channels>
struct MultiField {
  static constexpr int kChannels = Channels;
  std::array<ScalarField<Scalar>, Channels> channel;

  MultiField() = default;
  explicit MultiField(const GridShape& shape) { setZero(shape.rows, shape.cols); }
  MultiField(Index rows, Index cols) { setZero(rows, cols); }

  static MultiField Zero(const GridShape& shape) { return MultiField(shape); }

  void setZero(Index rows, Index cols) {
    for (auto& c : channel) c.setZero(rows, cols);
  }
  void setZero() {
    for (auto& c : channel) c.setZero();
  }

  Index rows() const { return channel[0].rows(); }
  Index cols() const { return channel[0].cols(); }
  GridShape shape() const { return {rows(), cols()}; }

  ScalarField<Scalar>& operator[](int c) { return channel[c]; }
  const ScalarField<Scalar>& operator[](int c) const { return channel[c]; }

  MultiField& operator+=(const MultiField& o) {
    for (int c = 0; c < Channels; ++c) channel[c] += o.channel[c];
    return *this;
  }
  MultiField& operator-=(const MultiField& o) {
    for (int c = 0; c < Channels; ++c) channel[c] -= o.channel[c];
    return *this;
  }
  MultiField& operator*=(Scalar a) {
    for (auto& c : channel) c *= a;
    return *this;
  }
  friend MultiField operator+(MultiField a, const MultiField& b) { return a += b; }
  friend MultiField operator-(MultiField a, const MultiField& b) { return a -= b; }
  friend MultiField operator*(Scalar s, MultiField a) { return a *= s; }
};

template <typename Scalar>
using VectorField = MultiField<Scalar, 2>;
template <typename Scalar>
using TensorField = MultiField<Scalar, 4>;

using ScalarFieldd = ScalarField<double>;
using VectorFieldd = VectorField<double>;
using TensorFieldd = TensorField<double>;

namespace detail {

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch (" +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

}  // namespace detail

template <typename Derived>
GridShape shape_of(const Eigen::ArrayBase<Derived>& u) {
  return {u.rows(), u.cols()};
}
template <typename Scalar, int C>
GridShape shape_of(const MultiField<Scalar, C>& x) {
  return x.shape();
}

// ---- inner products and norms ---------------------------------------------

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar inner(const Eigen::ArrayBase<DerivedA>& u,
                                const Eigen::ArrayBase<DerivedB>& v) {
  detail::require_same_shape(u, v, "inner");
  return (u.derived() * v.derived()).sum();
}

template <typename Scalar, int C>
Scalar inner(const MultiField<Scalar, C>& a, const MultiField<Scalar, C>& b) {
  Scalar s = 0;
  for (int c = 0; c < C; ++c) s += inner(a[c], b[c]);
  return s;
}

/// Pointwise magnitude |x|: absolute value for scalars, root of the summed
/// squared channels for vector and tensor fields.
template <typename Derived>
ScalarField<typename Derived::Scalar> magnitude(const Eigen::ArrayBase<Derived>& u) {
  return u.derived().abs();
}

template <typename Scalar, int C>
ScalarField<Scalar> magnitude(const MultiField<Scalar, C>& x) {
  ScalarField<Scalar> sq = x[0].square();
  for (int c = 1; c < C; ++c) sq += x[c].square();
  return sq.sqrt();
}

template <typename Derived>
typename Derived::Scalar squared_norm(const Eigen::ArrayBase<Derived>& u) {
  return u.derived().square().sum();
}

template <typename Scalar, int C>
Scalar squared_norm(const MultiField<Scalar, C>& x) {
  Scalar s = 0;
  for (const auto& c : x.channel) s += c.square().sum();
  return s;
}

/// ||x||_p with the pointwise magnitude taken first; p must be 1 or 2.
template <typename Field>
auto pnorm(const Field& x, int p) {
  if (p == 1) return magnitude(x).sum();
  if (p == 2) return std::sqrt(squared_norm(x));
  throw std::invalid_argument("pnorm: p must be 1 or 2, got " + std::to_string(p));
}

template <typename Derived>
bool all_finite(const Eigen::ArrayBase<Derived>& u) {
  return u.derived().isFinite().all();
}

template <typename Scalar, int C>
bool all_finite(const MultiField<Scalar, C>& x) {
  for (const auto& c : x.channel)
    if (!c.isFinite().all()) return false;
  return true;
}

// ---- pointwise projections --------------------------------------------------

template <typename Derived>
ScalarField<typename Derived::Scalar> project_box01(const Eigen::ArrayBase<Derived>& u) {
  using Scalar = typename Derived::Scalar;
  return u.derived().max(Scalar(0)).min(Scalar(1));
}

/// Pointwise projection onto {|x| <= radius}: x / max(1, |x| / radius).
template <typename Derived>
ScalarField<typename Derived::Scalar> project_ball(const Eigen::ArrayBase<Derived>& u,
                                                   typename Derived::Scalar radius) {
  if (!(radius > 0)) throw std::invalid_argument("project_ball: radius must be positive");
  return u.derived().max(-radius).min(radius);
}

template <typename Scalar, int C>
MultiField<Scalar, C> project_ball(MultiField<Scalar, C> x, Scalar radius) {
  if (!(radius > 0)) throw std::invalid_argument("project_ball: radius must be positive");
  const ScalarField<Scalar> scale = (magnitude(x) / radius).max(Scalar(1)).inverse();
  for (auto& c : x.channel) c *= scale;
  return x;
}

// ---- image quality ---------------------------------------------------------

/// Peak signal-to-noise ratio in dB for intensities normalized to [0, 1].
/// Identical images give +infinity.
template <typename DerivedA, typename DerivedB>
double psnr(const Eigen::ArrayBase<DerivedA>& u, const Eigen::ArrayBase<DerivedB>& ref) {
  detail::require_same_shape(u, ref, "psnr");
  const double mse = static_cast<double>((u.derived() - ref.derived()).square().mean());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace ovdd
