#include "imagls/imagls_opt.h"

#include <chrono>
#include <cmath>
#include <sstream>

#include "imagls/errors.h"

namespace imagls {

void ImaglsConfig::Validate() const {
  if (lambda && !(*lambda >= 0.0 && std::isfinite(*lambda))) {
    throw ValidationError("lambda must be finite and >= 0");
  }
  if (!(band_hi_hz > band_lo_hz)) throw ValidationError("empty iMagLS band");
  if (!(smooth_eps_db > 0.0)) throw ValidationError("smooth_eps_db must be > 0");
  if (max_iters < 0) throw ValidationError("max_iters must be >= 0");
  if (!(grad_tol > 0.0)) throw ValidationError("grad_tol must be > 0");
  if (lbfgs_memory < 1) throw ValidationError("lbfgs memory must be >= 1");
}

IldSetup MakeIldSetup(const ShHrtf& reference, GammatoneBank bank,
                      std::vector<double> azimuths) {
  IldCurve curve = ComputeIldCurve(reference, azimuths, bank);
  return IldSetup{std::move(bank), std::move(azimuths), std::move(curve)};
}

double AutoLambda(double mag_term, double ild_term) {
  if (!(ild_term > 0.0) || !std::isfinite(ild_term)) {
    throw ValidationError(
        "ILD term is zero at the starting point; set lambda explicitly");
  }
  return mag_term / ild_term;
}

double AutoLambda(const ImaglsProblem& problem, const Eigen::VectorXd& x0) {
  const LossTerms t = EvaluateLoss(problem, x0, 0.0);
  if (t.degenerate) {
    throw NumericalError("degenerate starting point: zero band energy");
  }
  return AutoLambda(t.mag, t.ild);
}

std::vector<int> OptimizationBand(const FrequencyGrid& freqs,
                                  const ImaglsConfig& config) {
  std::vector<int> bins = freqs.BinsInRange(config.band_lo_hz, config.band_hi_hz);
  if (bins.empty()) {
    throw ValidationError("no frequency bins inside the iMagLS band");
  }
  return bins;
}

ImaglsProblem BuildProblem(const HrtfSet& ref, const ShHrtf& init,
                           const ImaglsConfig& config, const IldSetup& ild) {
  return ImaglsProblem::Build(ref, init, OptimizationBand(ref.freqs, config),
                              ild.bank, ild.azimuths, ild.reference,
                              config.smooth_eps_db, config.include_ild);
}

std::pair<ShHrtf, OptimReport> OptimizeImagls(const HrtfSet& ref, int order,
                                              const ImaglsConfig& config,
                                              const MaglsConfig& magls_config,
                                              const IldSetup& ild) {
  config.Validate();
  const auto start = std::chrono::steady_clock::now();
  ShHrtf solution = MaglsEncode(ref, order, magls_config);
  const ImaglsProblem problem = BuildProblem(ref, solution, config, ild);
  const Eigen::VectorXd x0 = problem.packing.Pack(solution);

  const LossTerms t0 = EvaluateLoss(problem, x0, 0.0, nullptr, config.policy);
  if (t0.degenerate || !std::isfinite(t0.mag) || !std::isfinite(t0.ild)) {
    throw NumericalError("iMagLS loss is not finite at the MagLS start");
  }
  OptimReport report;
  report.lambda_used =
      !config.include_ild ? 0.0
      : config.lambda     ? *config.lambda
                          : AutoLambda(t0.mag, t0.ild);
  const double lambda = report.lambda_used;

  GradientFunction fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    return EvaluateLoss(problem, x, lambda, grad, config.policy).total;
  };
  IterationCallback record = [&](int iter, const Eigen::VectorXd& x, double) {
    const LossTerms t = EvaluateLoss(problem, x, lambda, nullptr, config.policy);
    report.loss_trace.push_back(
        TraceEntry{iter, t.mag + lambda * t.ild, t.mag, t.ild});
  };

  QuasiNewtonOptions options;
  options.method = config.optimizer;
  options.lbfgs_memory = config.lbfgs_memory;
  options.max_iters = config.max_iters;
  options.grad_tol = config.grad_tol;
  const QuasiNewtonResult result =
      MinimizeQuasiNewton(fn, x0, options, record);

  problem.packing.Unpack(result.x, &solution);
  solution.provenance = Provenance::kIMagLs;
  report.converged = result.converged;
  report.grad_norm_final = result.grad_inf_norm;
  report.iterations = result.iterations;
  report.evaluations = result.evaluations;
  report.status = result.status;
  report.wall_time_s = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  return {std::move(solution), std::move(report)};
}

}  // namespace imagls
