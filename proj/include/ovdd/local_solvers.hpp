#pragma once

// Accelerated primal-dual solvers for the proximal local problems
//
//   min_u  sum_{target} T(u) + eta/2 ||u - u_hat||^2
//
// posed on one window (source = subdomain box, target = tile). The saddle
// form pairs u with the dual fields of the model:
//
//   Chan-Vese:  p ~ grad+ u,            |p| <= 1, linear term alpha g on the tile
//   TV-L1:      p ~ grad+ u, q ~ A u,   |p| <= 1, |q| <= alpha
//   Hessian-L1: P ~ hess u,  q ~ u,     |P| <= 1, |q| <= alpha
//
// With eta = 0 and gamma = 0 the same iteration is the plain full-domain
// primal-dual method used by the baseline.

#include "ovdd/field.hpp"
#include "ovdd/models.hpp"
#include "ovdd/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace ovdd {

template <typename Scalar>
struct InnerParams {
  Scalar sigma0 = 0;
  Scalar tau0 = 0;
  Scalar gamma = 0;
  int iterations = 10;
  // Residual-targeted mode when positive: iterate until the local duality
  // gap is at most this value (checked every `check_every` steps), capped
  // at `max_iterations`. `iterations` is ignored in that mode.
  Scalar gap_tolerance = 0;
  int max_iterations = 1000000;
  int check_every = 10;

  bool residual_mode() const { return gap_tolerance > 0; }
};

/// Dual fields of one local problem, all over the window target. Only the
/// fields the model uses are allocated.
template <typename Scalar>
struct LocalDuals {
  VectorField<Scalar> p;
  ScalarField<Scalar> q;
  TensorField<Scalar> P;
};

template <typename Scalar>
struct LocalReport {
  int iterations = 0;
  Scalar gap = std::numeric_limits<Scalar>::quiet_NaN();  // residual mode only
  Scalar sigma = 0;
  Scalar tau = 0;
};

/// Upper bound on sigma * tau: 1 / ||K||^2 for the model's operator.
template <typename Scalar>
Scalar step_product_bound(const Model<Scalar>& model) {
  if (model.template is<ChanVese<Scalar>>()) return Scalar(1) / 8;
  if (model.template is<TvL1<Scalar>>()) return Scalar(1) / 9;
  return Scalar(1) / 65;
}

template <typename Scalar>
void validate_steps(const Model<Scalar>& model, Scalar sigma, Scalar tau, const char* who) {
  if (!(sigma > 0) || !(tau > 0) || !std::isfinite(sigma) || !std::isfinite(tau))
    throw std::invalid_argument(std::string(who) + ": step sizes must be positive and finite");
  const Scalar bound = step_product_bound(model);
  if (sigma * tau > bound * (1 + Scalar(1e-12)))
    throw std::invalid_argument(std::string(who) + ": sigma*tau = " + std::to_string(sigma * tau) +
                                " exceeds the bound " + std::to_string(bound) + " for model " +
                                model.name());
}

template <typename Scalar>
void validate_inner(const Model<Scalar>& model, const InnerParams<Scalar>& params, Scalar eta) {
  if (!(eta >= 0) || !std::isfinite(eta)) throw std::invalid_argument("local_solve: eta must be >= 0");
  validate_steps(model, params.sigma0, params.tau0, "local_solve");
  if (!(params.gamma >= 0 && params.gamma <= eta))
    throw std::invalid_argument("local_solve: gamma must lie in [0, eta]");
  if (params.residual_mode()) {
    if (params.max_iterations < 1 || params.check_every < 1)
      throw std::invalid_argument("local_solve: residual mode needs max_iterations, check_every >= 1");
  } else if (params.iterations < 1) {
    throw std::invalid_argument("local_solve: iterations must be >= 1");
  }
}

template <typename Scalar>
LocalDuals<Scalar> make_local_duals(const Model<Scalar>& model, const Rect& target) {
  LocalDuals<Scalar> y;
  if (model.template is<HessianL1<Scalar>>()) {
    y.P.setZero(target.rows, target.cols);
  } else {
    y.p.setZero(target.rows, target.cols);
  }
  if (!model.template is<ChanVese<Scalar>>()) y.q.setZero(target.rows, target.cols);
  return y;
}

namespace detail {

// Saddle-point pieces of one local problem on a fixed window.
template <typename Scalar>
class PdProblem {
 public:
  PdProblem(const Model<Scalar>& model, const Window& w) : model_(model), w_(w) {
    const Rect& t = w.target;
    f_t_ = model.data().block(t.row0, t.col0, t.rows, t.cols);
    if (model.template is<ChanVese<Scalar>>()) {
      linear_ = ScalarField<Scalar>::Zero(w.source.rows, w.source.cols);
      target_block(linear_) = model.alpha() * model.g().block(t.row0, t.col0, t.rows, t.cols);
    }
  }

  bool boxed() const { return model_.template is<ChanVese<Scalar>>(); }

  // y <- prox_{sigma F*}(y + sigma K ubar)
  void dual_step(const ScalarField<Scalar>& ubar, Scalar sigma, LocalDuals<Scalar>& y) const {
    const Scalar alpha = model_.alpha();
    if (const auto* tv = std::get_if<TvL1<Scalar>>(&model_.kind())) {
      y.p += sigma * grad_plus(ubar, w_);
      y.p = project_ball(std::move(y.p), Scalar(1));
      y.q = project_ball(y.q + sigma * (blur(ubar, tv->kernel, w_) - f_t_), alpha);
    } else if (model_.template is<HessianL1<Scalar>>()) {
      y.P += sigma * hessian(ubar, w_);
      y.P = project_ball(std::move(y.P), Scalar(1));
      y.q = project_ball(y.q + sigma * (target_block(ubar) - f_t_), alpha);
    } else {
      y.p += sigma * grad_plus(ubar, w_);
      y.p = project_ball(std::move(y.p), Scalar(1));
    }
  }

  // K* y plus the linear data term; source-sized.
  ScalarField<Scalar> adjoint(const LocalDuals<Scalar>& y) const {
    if (const auto* tv = std::get_if<TvL1<Scalar>>(&model_.kind())) {
      return grad_plus_adjoint(y.p, w_) + blur_adjoint(y.q, tv->kernel, w_);
    }
    if (model_.template is<HessianL1<Scalar>>()) {
      ScalarField<Scalar> out = hessian_adjoint(y.P, w_);
      target_block(out) += y.q;
      return out;
    }
    return grad_plus_adjoint(y.p, w_) + linear_;
  }

  // argmin_u G(u) + <u, v> + 1/(2 tau) ||u - u_old||^2 with
  // G = eta/2 ||u - u_hat||^2 (+ box indicator for Chan-Vese).
  ScalarField<Scalar> primal_step(const ScalarField<Scalar>& u_old, const ScalarField<Scalar>& v,
                                  const ScalarField<Scalar>& u_hat, Scalar tau, Scalar eta) const {
    ScalarField<Scalar> u = (u_old - tau * v + (tau * eta) * u_hat) / (1 + tau * eta);
    if (boxed()) u = project_box01(u);
    return u;
  }

  Scalar primal_value(const ScalarField<Scalar>& u, const ScalarField<Scalar>& u_hat,
                      Scalar eta) const {
    if (boxed() && ((u < Scalar(0)).any() || (u > Scalar(1)).any()))
      return std::numeric_limits<Scalar>::infinity();
    return integrand(model_, u, w_).values.sum() + eta / 2 * (u - u_hat).square().sum();
  }

  // Dual objective at y and the primal point it induces (eta > 0).
  std::pair<Scalar, ScalarField<Scalar>> dual_value(const LocalDuals<Scalar>& y,
                                                    const ScalarField<Scalar>& u_hat,
                                                    Scalar eta) const {
    const ScalarField<Scalar> v = adjoint(y);
    ScalarField<Scalar> u = u_hat - v / eta;
    if (boxed()) {
      u = project_box01(u);
      return {(u * v).sum() + eta / 2 * (u - u_hat).square().sum(), std::move(u)};
    }
    const Scalar value = -inner(f_t_, y.q) + (u_hat * v).sum() - v.square().sum() / (2 * eta);
    return {value, std::move(u)};
  }

  template <typename A>
  auto target_block(A& a) const {
    const Rect& t = w_.target;
    return a.block(t.row0 - w_.source.row0, t.col0 - w_.source.col0, t.rows, t.cols);
  }

 private:
  const Model<Scalar>& model_;
  Window w_;
  ScalarField<Scalar> f_t_;
  ScalarField<Scalar> linear_;
};

}  // namespace detail

/// Duality gap of the local problem at (u, y); an upper bound on the
/// suboptimality of u. Requires eta > 0.
template <typename Scalar>
Scalar local_gap(const Model<Scalar>& model, const Window& w, const ScalarField<Scalar>& u_hat,
                 Scalar eta, const ScalarField<Scalar>& u, const LocalDuals<Scalar>& y) {
  if (!(eta > 0)) throw std::invalid_argument("local_gap: eta must be positive");
  const detail::PdProblem<Scalar> prob(model, w);
  return prob.primal_value(u, u_hat, eta) - prob.dual_value(y, u_hat, eta).first;
}

/// Local objective sum_{target} T(u) + eta/2 ||u - u_hat||^2 (infinite when
/// a Chan-Vese iterate leaves [0, 1]).
template <typename Scalar>
Scalar local_objective(const Model<Scalar>& model, const Window& w,
                       const ScalarField<Scalar>& u_hat, Scalar eta, const ScalarField<Scalar>& u) {
  return detail::PdProblem<Scalar>(model, w).primal_value(u, u_hat, eta);
}

/// Runs the accelerated primal-dual iteration on one local problem, warm
/// started from (u, y), which are updated in place. Step sizes restart from
/// (sigma0, tau0) on every call.
template <typename Scalar>
LocalReport<Scalar> local_solve(const Model<Scalar>& model, const Window& w,
                                const ScalarField<Scalar>& u_hat, Scalar eta,
                                const InnerParams<Scalar>& params, ScalarField<Scalar>& u,
                                LocalDuals<Scalar>& y) {
  validate_inner(model, params, eta);
  detail::require_extent(u_hat, w.source, "local_solve");
  detail::require_extent(u, w.source, "local_solve");
  const detail::PdProblem<Scalar> prob(model, w);

  LocalReport<Scalar> report;
  Scalar sigma = params.sigma0, tau = params.tau0;

  // Residual mode certifies with whichever of u and the dual-induced point
  // is better, and returns that point once the loop ends.
  ScalarField<Scalar> best;
  bool dual_point_better = false;
  auto certify = [&]() {
    auto [dual, u_dual] = prob.dual_value(y, u_hat, eta);
    const Scalar primal = prob.primal_value(u, u_hat, eta);
    const Scalar primal_dual = prob.primal_value(u_dual, u_hat, eta);
    dual_point_better = primal_dual < primal;
    if (dual_point_better) best = std::move(u_dual);
    report.gap = std::min(primal, primal_dual) - dual;
    return report.gap <= params.gap_tolerance;
  };

  const bool residual = params.residual_mode();
  if (!residual || !certify()) {
    const int budget = residual ? params.max_iterations : params.iterations;
    ScalarField<Scalar> ubar = u;
    for (int k = 0; k < budget; ++k) {
      prob.dual_step(ubar, sigma, y);
      ScalarField<Scalar> u_new = prob.primal_step(u, prob.adjoint(y), u_hat, tau, eta);
      const Scalar theta = 1 / std::sqrt(1 + 2 * params.gamma * tau);
      tau *= theta;
      sigma /= theta;
      ubar = (1 + theta) * u_new - theta * u;
      u = std::move(u_new);
      report.iterations = k + 1;
      if (residual && (k + 1) % params.check_every == 0 && certify()) break;
    }
    if (residual && report.iterations % params.check_every != 0) certify();
  }
  if (residual && dual_point_better) u = std::move(best);
  report.sigma = sigma;
  report.tau = tau;
  return report;
}

}  // namespace ovdd
