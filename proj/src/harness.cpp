#include "ovdd/harness.hpp"

#include "ovdd/baseline.hpp"
#include "ovdd/decomposition.hpp"
#include "ovdd/pgm.hpp"
#include "ovdd/phantom.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <stdexcept>

namespace ovdd {

namespace {

std::string number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string cell(const std::optional<double>& v) { return v ? number(*v) : std::string(); }

class CsvSink {
 public:
  CsvSink(const std::string& path, bool omit_timing) : omit_timing_(omit_timing) {
    if (path.empty()) return;
    out_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*out_) throw std::runtime_error("cannot write metrics file " + path);
    *out_ << kCsvHeader << '\n';
  }
  void write(const DiagRecord& r) {
    if (out_) *out_ << csv_row(r, omit_timing_) << '\n';
  }
  void close() {
    if (!out_) return;
    out_->flush();
    if (!*out_) throw std::runtime_error("metrics write failed");
  }

 private:
  std::unique_ptr<std::ofstream> out_;
  bool omit_timing_;
};

}  // namespace

std::pair<int, int> parse_subdomains(const std::string& text) {
  const auto x = text.find_first_of("xX");
  auto parse = [&](const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s.size() > 6)
      throw std::invalid_argument("subdomains must look like PxQ, got '" + text + "'");
    return std::stoi(s);
  };
  if (x == std::string::npos) throw std::invalid_argument("subdomains must look like PxQ, got '" + text + "'");
  const int P = parse(text.substr(0, x)), Q = parse(text.substr(x + 1));
  if (P < 1 || Q < 1) throw std::invalid_argument("subdomain counts must be positive");
  return {P, Q};
}

Model<double> build_model(const RunConfig& cfg, ScalarFieldd f) {
  if (cfg.model == "ccv")
    return make_chan_vese(std::move(f), cfg.alpha.value_or(10.0), cfg.c1, cfg.c2);
  if (cfg.model == "tvl1")
    return make_tv_l1(std::move(f), cfg.alpha.value_or(10.0), BlurKernel(cfg.kernel_halfwidth.value_or(4)));
  if (cfg.model == "hessl1") return make_hessian_l1(std::move(f), cfg.alpha.value_or(1.0));
  throw std::invalid_argument("unknown model '" + cfg.model + "' (expected ccv, tvl1 or hessl1)");
}

AlmParams<double> build_params(const RunConfig& cfg, const Model<double>& model) {
  AlmParams<double> p = default_alm_params(model);
  if (cfg.eta) {
    // gamma keeps its ratio to eta.
    p.inner.gamma *= *cfg.eta / p.eta;
    p.eta = *cfg.eta;
  }
  if (cfg.tol) p.tol = *cfg.tol;
  if (cfg.inner_iters) p.inner.iterations = *cfg.inner_iters;
  p.max_outer = cfg.max_outer;
  p.workers = cfg.workers;
  if (cfg.workers < 1) throw std::invalid_argument("workers must be >= 1");
  validate_alm(model, p);
  return p;
}

std::string csv_row(const DiagRecord& r, bool omit_timing) {
  std::string s = std::to_string(r.n);
  s += ',' + number(r.energy);
  s += ',' + cell(r.rel_gap);
  s += ',' + number(r.consensus_residual);
  s += ',' + cell(r.d_n);
  s += ',' + cell(r.e_n);
  s += ',' + cell(r.psnr);
  s += ',' + (omit_timing ? std::string() : number(r.elapsed_s));
  return s;
}

std::string mask_path(const std::string& output) {
  const std::filesystem::path p(output);
  return (p.parent_path() / (p.stem().string() + "_mask.pgm")).string();
}

int cmd_corrupt(const RunConfig& cfg, std::ostream& log) {
  if (cfg.input.empty() || cfg.output.empty())
    throw std::invalid_argument("corrupt needs --input and --output");
  ScalarFieldd u = load_pgm(cfg.input);
  if (cfg.kernel_halfwidth) u = blur(u, BlurKernel(*cfg.kernel_halfwidth));
  if (cfg.noise_sp > 0) u = salt_pepper(u, cfg.noise_sp, cfg.seed);
  save_pgm(u, cfg.output);
  log << "wrote " << cfg.output << '\n';
  return kConverged;
}

int cmd_energy(const RunConfig& cfg, std::ostream& out) {
  if (cfg.input.empty()) throw std::invalid_argument("energy needs --input");
  const Model<double> model = build_model(cfg, load_pgm(cfg.input));
  const ScalarFieldd u = cfg.eval.empty() ? model.data() : load_pgm(cfg.eval);
  if (shape_of(u) != model.grid())
    throw std::invalid_argument("--eval image does not match the input size");
  out << number(energy(model, u)) << '\n';
  return kConverged;
}

int cmd_phantom(Index rows, Index cols, const std::string& output) {
  if (output.empty()) throw std::invalid_argument("phantom needs --output");
  save_pgm(make_phantom(rows, cols), output);
  return kConverged;
}

int cmd_solve(const RunConfig& cfg, std::ostream& log) {
  if (cfg.input.empty()) throw std::invalid_argument("solve needs --input");
  const Model<double> model = build_model(cfg, load_pgm(cfg.input));
  const AlmParams<double> params = build_params(cfg, model);
  std::optional<ScalarFieldd> truth;
  if (!cfg.ground_truth.empty()) {
    truth = load_pgm(cfg.ground_truth);
    if (shape_of(*truth) != model.grid())
      throw std::invalid_argument("ground truth does not match the input size");
  }
  const Partition partition = partition_rect(model.grid(), cfg.row_tiles, cfg.col_tiles);

  std::optional<double> e_star = cfg.reference_energy;
  if (!e_star && cfg.compute_reference_iters) {
    if (*cfg.compute_reference_iters < 1)
      throw std::invalid_argument("--compute-reference-iters must be >= 1");
    const auto ref = cp_full(model, default_cp_params(model, *cfg.compute_reference_iters), {}, false);
    e_star = energy(model, ref.u);
    log << "reference energy " << number(*e_star) << " from " << ref.iterations
        << " baseline iterations\n";
  }

  CsvSink csv(cfg.metrics, cfg.omit_timing);
  ScalarFieldd u;
  bool converged = false;
  int steps = 0;
  if (partition.size() == 1) {
    DiagInputs<double> diag;
    diag.reference_energy = e_star;
    diag.ground_truth = truth ? &*truth : nullptr;
    auto result = run_full_domain<double>(model, params.tol, params.max_outer, diag,
                                          [&](const DiagRecord& r) { csv.write(r); });
    u = std::move(result.u);
    converged = result.converged;
    steps = static_cast<int>(result.records.size());
  } else {
    const OverlapLayout layout(partition, stencil_of(model));
    AlmRunOptions<double> opts;
    opts.diag.reference_energy = e_star;
    opts.diag.ground_truth = truth ? &*truth : nullptr;
    opts.observer = [&](const DiagRecord& r, const AlmState<double>&) {
      csv.write(r);
      return true;
    };
    const auto result = run_alm(model, layout, params, opts);
    u = result.state.u;
    converged = result.converged;
    steps = result.state.n;
  }
  csv.close();

  if (!cfg.output.empty()) {
    save_pgm(u, cfg.output);
    if (model.is<ChanVese<double>>()) save_pgm(threshold_half(u), mask_path(cfg.output));
  }
  log << (converged ? "converged" : "iteration budget exhausted") << " after " << steps
      << " iterations; energy " << number(energy(model, u)) << '\n';
  return converged ? kConverged : kBudgetExhausted;
}

}  // namespace ovdd
