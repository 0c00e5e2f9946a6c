#pragma once

// Full-domain primal-dual baseline (no decomposition, no acceleration).

#include "ovdd/local_solvers.hpp"
#include "ovdd/models.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace ovdd {

template <typename Scalar>
struct CpParams {
  Scalar sigma = 0;
  Scalar tau = 0;
  int iterations = 1000;
};

template <typename Scalar>
CpParams<Scalar> default_cp_params(const Model<Scalar>& model, int iterations = 1000) {
  if (model.template is<ChanVese<Scalar>>()) {
    const Scalar s = 1 / std::sqrt(Scalar(8));
    return {s, s, iterations};
  }
  const Scalar tau = Scalar(0.02);
  return {step_product_bound(model) / tau, tau, iterations};
}

template <typename Scalar>
struct CpResult {
  ScalarField<Scalar> u;
  LocalDuals<Scalar> duals;
  std::vector<Scalar> energies;  // E(u^k) after every iteration k = 1..iterations
  int iterations = 0;
};

/// Plain primal-dual iteration from u = 0, y = 0. The observer sees
/// (k, u^k, E(u^k)) after each step and may return false to stop early.
template <typename Scalar>
CpResult<Scalar> cp_full(
    const Model<Scalar>& model, const CpParams<Scalar>& params,
    const std::function<bool(int, const ScalarField<Scalar>&, Scalar)>& observer = {},
    bool trace = true) {
  validate_steps(model, params.sigma, params.tau, "cp_full");
  if (params.iterations < 0) throw std::invalid_argument("cp_full: iterations must be >= 0");
  const GridShape g = model.grid();
  const Window w = Window::whole(g);
  const detail::PdProblem<Scalar> prob(model, w);
  const ScalarField<Scalar> zero = ScalarField<Scalar>::Zero(g.rows, g.cols);

  CpResult<Scalar> out;
  out.u = zero;
  out.duals = make_local_duals(model, w.target);
  ScalarField<Scalar> ubar = out.u;
  for (int k = 0; k < params.iterations; ++k) {
    prob.dual_step(ubar, params.sigma, out.duals);
    ScalarField<Scalar> u_new =
        prob.primal_step(out.u, prob.adjoint(out.duals), zero, params.tau, Scalar(0));
    ubar = 2 * u_new - out.u;
    out.u = std::move(u_new);
    out.iterations = k + 1;
    if (trace || observer) {
      const Scalar e = energy(model, out.u);
      if (trace) out.energies.push_back(e);
      if (observer && !observer(k + 1, out.u, e)) break;
    }
  }
  return out;
}

}  // namespace ovdd
