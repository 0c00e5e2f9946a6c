#pragma once

// Decoupled augmented Lagrangian outer loop over an overlapping layout.
//
// One outer step:
//   u_hat_s = (P u~)_s - lambda_s / eta                      for every s
//   u~_s   <- approx argmin E_s(v) + eta/2 ||v - u_hat_s||^2  (local solver)
//   lambda <- lambda + eta (I - P) u~
// where P is the consensus projection. Only P reads across subdomains.

#include "ovdd/baseline.hpp"
#include "ovdd/decomposition.hpp"
#include "ovdd/local_solvers.hpp"
#include "ovdd/models.hpp"
#include "ovdd/parallel.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace ovdd {

template <typename Scalar>
struct AlmParams {
  Scalar eta = 1;
  int max_outer = 1000;
  Scalar tol = Scalar(1e-4);
  InnerParams<Scalar> inner;
  int workers = 1;
};

template <typename Scalar>
AlmParams<Scalar> default_alm_params(const Model<Scalar>& model) {
  AlmParams<Scalar> p;
  if (model.template is<ChanVese<Scalar>>()) {
    p.eta = 1;
    p.tol = Scalar(1e-4);
    p.inner.sigma0 = p.inner.tau0 = 1 / std::sqrt(Scalar(8));
    p.inner.gamma = Scalar(0.125) * p.eta;
    p.inner.iterations = 10;
  } else if (model.template is<TvL1<Scalar>>()) {
    p.eta = 10;
    p.tol = Scalar(1e-3);
    p.inner.sigma0 = p.inner.tau0 = Scalar(1) / 3;
    p.inner.iterations = 50;
  } else {
    p.eta = 20;
    p.tol = Scalar(1e-3);
    p.inner.sigma0 = p.inner.tau0 = 1 / std::sqrt(Scalar(65));
    p.inner.iterations = 50;
  }
  return p;
}

template <typename Scalar>
void validate_alm(const Model<Scalar>& model, const AlmParams<Scalar>& params) {
  if (!(params.eta > 0) || !std::isfinite(params.eta))
    throw std::invalid_argument("alm: eta must be positive");
  if (params.max_outer < 0) throw std::invalid_argument("alm: max_outer must be >= 0");
  if (!(params.tol > 0)) throw std::invalid_argument("alm: tol must be positive");
  validate_inner(model, params.inner, params.eta);
}

template <typename Scalar>
struct AlmState {
  int n = 0;
  StackedField<Scalar> u_tilde;
  StackedField<Scalar> lambda;
  ScalarField<Scalar> u;  // assemble_global(u_tilde)
  std::vector<LocalDuals<Scalar>> duals;
  std::vector<LocalReport<Scalar>> reports;  // from the step that produced n
};

template <typename Scalar>
AlmState<Scalar> alm_init(const Model<Scalar>& model, const OverlapLayout& layout) {
  if (model.grid() != layout.grid()) throw std::invalid_argument("alm_init: grid mismatch");
  if (!stencil_subsumes(layout.stencil(), stencil_of(model)))
    throw std::invalid_argument("alm_init: layout stencil does not cover the model");
  AlmState<Scalar> st;
  st.u_tilde = StackedField<Scalar>(layout);
  st.lambda = StackedField<Scalar>(layout);
  st.u = ScalarField<Scalar>::Zero(layout.grid().rows, layout.grid().cols);
  for (int s = 0; s < layout.size(); ++s) st.duals.push_back(make_local_duals(model, layout.tile(s)));
  st.reports.resize(static_cast<std::size_t>(layout.size()));
  return st;
}

template <typename Scalar>
AlmState<Scalar> alm_step(AlmState<Scalar> st, const Model<Scalar>& model,
                          const OverlapLayout& layout, const AlmParams<Scalar>& params) {
  validate_alm(model, params);
  const Scalar eta = params.eta;
  const ScalarField<Scalar> avg = assemble_global(st.u_tilde, params.workers);
  const auto ns = static_cast<std::size_t>(layout.size());

  parallel_for(ns, params.workers, [&](std::size_t k) {
    const int s = static_cast<int>(k);
    const Rect& b = layout.box(s);
    const ScalarField<Scalar> u_hat =
        layout.mask(s).select(avg.block(b.row0, b.col0, b.rows, b.cols), Scalar(0)) -
        st.lambda.part(s) / eta;
    st.reports[k] = local_solve(model, layout.window(s), u_hat, eta, params.inner,
                                st.u_tilde.part(s), st.duals[k]);
  });

  st.u = assemble_global(st.u_tilde, params.workers);
  parallel_for(ns, params.workers, [&](std::size_t k) {
    const int s = static_cast<int>(k);
    const Rect& b = layout.box(s);
    st.lambda.part(s) += eta * (st.u_tilde.part(s) -
                                layout.mask(s).select(st.u.block(b.row0, b.col0, b.rows, b.cols),
                                                      Scalar(0)));
  });
  ++st.n;
  return st;
}

// ---- stop rule ---------------------------------------------------------------

/// max(|E_prev - E_cur| / denom, ||u_prev - u_cur|| / ||f||) < tol with
/// denom = |E(f)|, or 1 when |E(f)| < 1e-12.
template <typename Scalar, typename DA, typename DB, typename DF>
bool stop_check(Scalar e_prev, Scalar e_cur, const Eigen::ArrayBase<DA>& u_prev,
                const Eigen::ArrayBase<DB>& u_cur, const Eigen::ArrayBase<DF>& f,
                Scalar energy_of_f, Scalar tol) {
  const Scalar fnorm = std::sqrt(squared_norm(f));
  if (!(fnorm > 0)) throw std::invalid_argument("stop_check: data image must be nonzero");
  const Scalar denom = std::abs(energy_of_f) < Scalar(1e-12) ? Scalar(1) : std::abs(energy_of_f);
  const Scalar de = e_prev == e_cur ? Scalar(0) : std::abs(e_prev - e_cur) / denom;
  const Scalar du = std::sqrt(squared_norm(u_prev.derived() - u_cur.derived())) / fnorm;
  return std::max(de, du) < tol;
}

template <typename Scalar>
class StopRule {
 public:
  StopRule(const Model<Scalar>& model, Scalar tol)
      : f_(&model.data()), energy_of_f_(energy(model, model.data())), tol_(tol) {
    if (!(squared_norm(model.data()) > 0))
      throw std::invalid_argument("stop rule: data image must be nonzero");
    if (!std::isfinite(energy_of_f_)) energy_of_f_ = 1;
  }
  bool operator()(Scalar e_prev, Scalar e_cur, const ScalarField<Scalar>& u_prev,
                  const ScalarField<Scalar>& u_cur) const {
    return stop_check(e_prev, e_cur, u_prev, u_cur, *f_, energy_of_f_, tol_);
  }
  Scalar energy_of_data() const { return energy_of_f_; }

 private:
  const ScalarField<Scalar>* f_;
  Scalar energy_of_f_;
  Scalar tol_;
};

// ---- diagnostics -------------------------------------------------------------

/// Fixed point (u~*, lambda*) used for the distance measure.
template <typename Scalar>
struct AlmReference {
  StackedField<Scalar> u_tilde;
  StackedField<Scalar> lambda;
};

/// eta ||P(a.u~ - b.u~)||^2 + ||a.lambda - b.lambda||^2 / eta
template <typename Scalar>
Scalar lyapunov_distance(const StackedField<Scalar>& ua, const StackedField<Scalar>& la,
                         const StackedField<Scalar>& ub, const StackedField<Scalar>& lb,
                         Scalar eta) {
  return eta * squared_norm(project_consensus(ua - ub)) + squared_norm(la - lb) / eta;
}

/// d_n for the step prev -> cur.
template <typename Scalar>
Scalar displacement(const AlmState<Scalar>& prev, const AlmState<Scalar>& cur, Scalar eta) {
  return lyapunov_distance(prev.u_tilde, prev.lambda, cur.u_tilde, cur.lambda, eta);
}

/// e_n of a state against the reference.
template <typename Scalar>
Scalar distance(const AlmState<Scalar>& st, const AlmReference<Scalar>& ref, Scalar eta) {
  return lyapunov_distance(st.u_tilde, st.lambda, ref.u_tilde, ref.lambda, eta);
}

/// One metrics row. Row n describes iterate n; d_n is the displacement of the
/// step that produced it.
struct DiagRecord {
  int n = 0;
  double energy = 0;
  std::optional<double> rel_gap;
  double consensus_residual = 0;
  std::optional<double> d_n;
  std::optional<double> e_n;
  std::optional<double> psnr;
  double elapsed_s = 0;
};

template <typename Scalar>
struct DiagInputs {
  std::optional<Scalar> reference_energy;
  const AlmReference<Scalar>* reference = nullptr;
  const ScalarField<Scalar>* ground_truth = nullptr;
};

inline std::optional<double> relative_gap(double e, std::optional<double> e_star) {
  if (!e_star) return std::nullopt;
  return (e - *e_star) / std::abs(*e_star);
}

template <typename Scalar>
DiagRecord diagnostics(const AlmState<Scalar>* prev, const AlmState<Scalar>& cur,
                       const Model<Scalar>& model, Scalar eta, const DiagInputs<Scalar>& in) {
  DiagRecord r;
  r.n = cur.n;
  r.energy = double(energy(model, cur.u));
  if (in.reference_energy) r.rel_gap = relative_gap(r.energy, double(*in.reference_energy));
  r.consensus_residual = double(consensus_residual(cur.u_tilde));
  if (prev) r.d_n = double(displacement(*prev, cur, eta));
  if (in.reference) r.e_n = double(distance(cur, *in.reference, eta));
  if (in.ground_truth) r.psnr = psnr(cur.u, *in.ground_truth);
  return r;
}

// ---- drivers -----------------------------------------------------------------

template <typename Scalar>
struct AlmRunOptions {
  DiagInputs<Scalar> diag;
  bool use_stop_rule = true;
  // Sees every row as it is produced; returning false stops the run.
  std::function<bool(const DiagRecord&, const AlmState<Scalar>&)> observer;
};

template <typename Scalar>
struct AlmRunResult {
  AlmState<Scalar> state;
  std::vector<DiagRecord> records;
  bool converged = false;
};

/// Runs up to params.max_outer outer steps from the zero initial guess,
/// emitting one record per step (n = 1, 2, ...).
template <typename Scalar>
AlmRunResult<Scalar> run_alm(const Model<Scalar>& model, const OverlapLayout& layout,
                             const AlmParams<Scalar>& params,
                             const AlmRunOptions<Scalar>& options = {}) {
  validate_alm(model, params);
  const auto start = std::chrono::steady_clock::now();
  std::optional<StopRule<Scalar>> stop;
  if (options.use_stop_rule) stop.emplace(model, params.tol);

  AlmRunResult<Scalar> out;
  out.state = alm_init(model, layout);
  Scalar e_prev = energy(model, out.state.u);
  for (int k = 0; k < params.max_outer; ++k) {
    AlmState<Scalar> next = alm_step(out.state, model, layout, params);
    DiagRecord r = diagnostics(&out.state, next, model, params.eta, options.diag);
    r.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const Scalar e_cur = Scalar(r.energy);
    const bool done = stop && (*stop)(e_prev, e_cur, out.state.u, next.u);
    e_prev = e_cur;
    out.state = std::move(next);
    out.records.push_back(r);
    if (options.observer && !options.observer(r, out.state)) break;
    if (done) {
      out.converged = true;
      break;
    }
  }
  return out;
}

template <typename Scalar>
struct BaselineRun {
  ScalarField<Scalar> u;
  std::vector<DiagRecord> records;
  bool converged = false;
};

/// Undecomposed path: the baseline primal-dual iteration with its default
/// steps, one record per iteration, stopped by the same rule as run_alm.
template <typename Scalar>
BaselineRun<Scalar> run_full_domain(
    const Model<Scalar>& model, Scalar tol, int max_iterations,
    const DiagInputs<Scalar>& diag = {},
    const std::function<void(const DiagRecord&)>& observer = {}) {
  const StopRule<Scalar> stop(model, tol);
  const auto start = std::chrono::steady_clock::now();
  BaselineRun<Scalar> out;
  ScalarField<Scalar> u_prev = ScalarField<Scalar>::Zero(model.grid().rows, model.grid().cols);
  Scalar e_prev = energy(model, u_prev);
  const auto cp = cp_full<Scalar>(
      model, default_cp_params(model, max_iterations),
      [&](int k, const ScalarField<Scalar>& uk, Scalar e) {
        DiagRecord r;
        r.n = k;
        r.energy = double(e);
        if (diag.reference_energy) r.rel_gap = relative_gap(r.energy, double(*diag.reference_energy));
        if (diag.ground_truth) r.psnr = psnr(uk, *diag.ground_truth);
        r.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.records.push_back(r);
        if (observer) observer(r);
        out.converged = stop(e_prev, e, u_prev, uk);
        e_prev = e;
        u_prev = uk;
        return !out.converged;
      },
      false);
  out.u = cp.u;
  return out;
}

/// High-accuracy fixed point for the distance measure: outer steps with the
/// given (residual-mode) inner parameters until both the consensus residual
/// and ||P(u~^n - u~^{n+1})|| are at most `tol`.
template <typename Scalar>
AlmReference<Scalar> solve_reference(const Model<Scalar>& model, const OverlapLayout& layout,
                                     const AlmParams<Scalar>& params, Scalar tol,
                                     int max_outer) {
  validate_alm(model, params);
  AlmState<Scalar> st = alm_init(model, layout);
  for (int k = 0; k < max_outer; ++k) {
    AlmState<Scalar> next = alm_step(st, model, layout, params);
    const Scalar move = std::sqrt(squared_norm(project_consensus(next.u_tilde - st.u_tilde)));
    const Scalar jump = consensus_residual(next.u_tilde);
    st = std::move(next);
    if (jump <= tol && move <= tol) return {st.u_tilde, st.lambda};
  }
  throw std::runtime_error("solve_reference: no fixed point within the outer budget");
}

}  // namespace ovdd
