#pragma once

// Variational models with a pointwise integral structure: the energy is the
// sum over pixels of an integrand T(u), and T(u) at a pixel depends only on
// a small stencil of u. The stencil determines the essential domains.
//
//   Chan-Vese (convex):  T = alpha * u * g + |grad+ u|,   u in [0, 1]
//                        g = (f - c1)^2 - (f - c2)^2
//   TV-L1 deblurring:    T = alpha * |A u - f| + |grad+ u|
//   Hessian-L1:          T = alpha * |u - f| + |hess u|

#include "ovdd/decomposition.hpp"
#include "ovdd/field.hpp"
#include "ovdd/operators.hpp"

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>

namespace ovdd {

template <typename Scalar>
struct ChanVese {
  Scalar alpha = 10;
  Scalar c1 = 0.6;
  Scalar c2 = 0.1;
};

template <typename Scalar>
struct TvL1 {
  Scalar alpha = 10;
  BlurKernel kernel{1};
};

template <typename Scalar>
struct HessianL1 {
  Scalar alpha = 1;
};

template <typename Scalar>
class Model {
 public:
  using Kind = std::variant<ChanVese<Scalar>, TvL1<Scalar>, HessianL1<Scalar>>;

  Model(Kind kind, ScalarField<Scalar> f) : kind_(std::move(kind)), f_(std::move(f)) {
    if (f_.size() == 0) throw std::invalid_argument("Model: empty data image");
    if (!all_finite(f_)) throw std::invalid_argument("Model: data image has non-finite values");
    if (!(alpha() > 0)) throw std::invalid_argument("Model: alpha must be positive");
    if (const auto* cv = std::get_if<ChanVese<Scalar>>(&kind_)) {
      if (cv->c1 == cv->c2) throw std::invalid_argument("Model: Chan-Vese needs c1 != c2");
      g_ = (f_ - cv->c1).square() - (f_ - cv->c2).square();
    }
  }

  const Kind& kind() const { return kind_; }
  template <typename T>
  bool is() const {
    return std::holds_alternative<T>(kind_);
  }
  template <typename T>
  const T& as() const {
    return std::get<T>(kind_);
  }

  GridShape grid() const { return shape_of(f_); }
  const ScalarField<Scalar>& data() const { return f_; }
  /// Region indicator g; Chan-Vese only (empty otherwise).
  const ScalarField<Scalar>& g() const { return g_; }
  Scalar alpha() const {
    return std::visit([](const auto& k) { return k.alpha; }, kind_);
  }
  const char* name() const {
    if (is<ChanVese<Scalar>>()) return "ccv";
    if (is<TvL1<Scalar>>()) return "tvl1";
    return "hessl1";
  }

 private:
  Kind kind_;
  ScalarField<Scalar> f_;
  ScalarField<Scalar> g_;
};

template <typename Scalar>
Model<Scalar> make_chan_vese(ScalarField<Scalar> f, Scalar alpha, Scalar c1, Scalar c2) {
  return Model<Scalar>(ChanVese<Scalar>{alpha, c1, c2}, std::move(f));
}
template <typename Scalar>
Model<Scalar> make_tv_l1(ScalarField<Scalar> f, Scalar alpha, BlurKernel kernel) {
  return Model<Scalar>(TvL1<Scalar>{alpha, kernel}, std::move(f));
}
template <typename Scalar>
Model<Scalar> make_hessian_l1(ScalarField<Scalar> f, Scalar alpha) {
  return Model<Scalar>(HessianL1<Scalar>{alpha}, std::move(f));
}

template <typename Scalar>
StencilSpec stencil_of(const Model<Scalar>& model) {
  if (model.template is<ChanVese<Scalar>>()) return ForwardOne{};
  if (const auto* tv = std::get_if<TvL1<Scalar>>(&model.kind()))
    return Band{tv->kernel.half_width};
  return BackwardForward{};
}

namespace detail {

template <typename Scalar>
auto on_target(const ScalarField<Scalar>& global, const Rect& r) {
  return global.block(r.row0, r.col0, r.rows, r.cols);
}

}  // namespace detail

/// Pointwise integrand over a window target. For Chan-Vese the box
/// constraint is carried as a flag rather than as infinite entries.
template <typename Scalar>
struct Integrand {
  ScalarField<Scalar> values;
  bool feasible = true;

  Scalar total() const {
    return feasible ? values.sum() : std::numeric_limits<Scalar>::infinity();
  }
};

template <typename Scalar, typename Derived>
Integrand<Scalar> integrand(const Model<Scalar>& model, const Eigen::ArrayBase<Derived>& u,
                            const Window& w) {
  const Rect& t = w.target;
  Integrand<Scalar> out;
  if (const auto* cv = std::get_if<ChanVese<Scalar>>(&model.kind())) {
    const ScalarField<Scalar> ut = u.derived().block(t.row0 - w.source.row0,
                                                     t.col0 - w.source.col0, t.rows, t.cols);
    out.values = cv->alpha * ut * detail::on_target(model.g(), t) + magnitude(grad_plus(u, w));
    out.feasible = (ut >= Scalar(0)).all() && (ut <= Scalar(1)).all();
  } else if (const auto* tv = std::get_if<TvL1<Scalar>>(&model.kind())) {
    out.values = tv->alpha * (blur(u, tv->kernel, w) - detail::on_target(model.data(), t)).abs() +
                 magnitude(grad_plus(u, w));
  } else {
    const Scalar alpha = model.alpha();
    const ScalarField<Scalar> ut = u.derived().block(t.row0 - w.source.row0,
                                                     t.col0 - w.source.col0, t.rows, t.cols);
    out.values = alpha * (ut - detail::on_target(model.data(), t)).abs() +
                 magnitude(hessian(u, w));
  }
  return out;
}

template <typename Scalar, typename Derived>
Integrand<Scalar> integrand(const Model<Scalar>& model, const Eigen::ArrayBase<Derived>& u) {
  if (shape_of(u) != model.grid()) throw std::invalid_argument("integrand: shape mismatch");
  return integrand(model, u, Window::whole(model.grid()));
}

/// Model energy; +infinity when the Chan-Vese box constraint is violated.
template <typename Scalar, typename Derived>
Scalar energy(const Model<Scalar>& model, const Eigen::ArrayBase<Derived>& u) {
  return integrand(model, u).total();
}

/// Energy contribution of tile s evaluated from the subdomain's own values
/// (an array over layout.box(s)).
template <typename Scalar>
Scalar local_energy(const Model<Scalar>& model, const OverlapLayout& layout, int s,
                    const ScalarField<Scalar>& part) {
  if (!stencil_subsumes(layout.stencil(), stencil_of(model)))
    throw std::logic_error("local_energy: layout stencil does not cover the model integrand");
  return integrand(model, part, layout.window(s)).total();
}

// ---- corruption and post-processing ---------------------------------------

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based stream: the k-th draw depends only on (seed, k).
inline std::uint64_t counter_draw(std::uint64_t seed, std::uint64_t k) {
  return splitmix64(splitmix64(seed) ^ (k * 0xd1342543de82ef95ULL));
}

}  // namespace detail

/// Salt-and-pepper noise: each pixel is independently replaced, with
/// probability `fraction`, by 0 or 1 with equal odds. Pixel p = i + j*M uses
/// draws 2p and 2p+1 of a SplitMix64 counter stream keyed by `seed`.
template <typename Derived>
ScalarField<typename Derived::Scalar> salt_pepper(const Eigen::ArrayBase<Derived>& u,
                                                  double fraction, std::uint64_t seed) {
  using Scalar = typename Derived::Scalar;
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw std::invalid_argument("salt_pepper: fraction must lie in [0, 1]");
  ScalarField<Scalar> out = u.derived();
  for (Index p = 0; p < out.size(); ++p) {
    const auto k = static_cast<std::uint64_t>(p);
    const double r = double(detail::counter_draw(seed, 2 * k) >> 11) * 0x1.0p-53;
    if (r < fraction) out(p) = (detail::counter_draw(seed, 2 * k + 1) >> 63) ? Scalar(1) : Scalar(0);
  }
  return out;
}

/// Binary mask: 1 where u >= 1/2, else 0.
template <typename Derived>
ScalarField<typename Derived::Scalar> threshold_half(const Eigen::ArrayBase<Derived>& u) {
  using Scalar = typename Derived::Scalar;
  return (u.derived() >= Scalar(0.5)).template cast<Scalar>();
}

}  // namespace ovdd
