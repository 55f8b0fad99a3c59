#ifndef IMAGLS_IMAGLS_OPT_H_
#define IMAGLS_IMAGLS_OPT_H_

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "imagls/baseline_renderers.h"
#include "imagls/hrtf_model.h"
#include "imagls/loss_kernel.h"
#include "imagls/psychoacoustics.h"
#include "imagls/quasi_newton.h"

namespace imagls {

struct ImaglsConfig {
  // Unset: chosen by AutoLambda() at the MagLS starting point.
  std::optional<double> lambda;
  double band_lo_hz = 1200.0;
  double band_hi_hz = 20000.0;
  double smooth_eps_db = 1e-4;
  int max_iters = 500;
  double grad_tol = 1e-6;
  QuasiNewtonMethod optimizer = QuasiNewtonMethod::kBfgs;
  int lbfgs_memory = 10;
  // false drops the ILD term entirely (magnitude-only refinement).
  bool include_ild = true;
  ExecutionPolicy policy = ExecutionPolicy::kParallel;

  void Validate() const;
};

// What the ILD term is measured against: the gammatone bank, the horizontal
// azimuths and the reference ILD (azimuths x centers) on those azimuths.
struct IldSetup {
  GammatoneBank bank;
  std::vector<double> azimuths;
  IldCurve reference;
};

// Reference ILD from the plane-wave rendering of a (high-order) SH-HRTF.
IldSetup MakeIldSetup(const ShHrtf& reference, GammatoneBank bank,
                      std::vector<double> azimuths);

struct TraceEntry {
  int iteration = 0;
  double total = 0.0;
  double mag = 0.0;
  double ild = 0.0;
};

struct OptimReport {
  std::vector<TraceEntry> loss_trace;
  double lambda_used = 0.0;
  bool converged = false;
  double grad_norm_final = 0.0;
  double wall_time_s = 0.0;
  int iterations = 0;
  int evaluations = 0;
  std::string status;
};

// lambda = mag / ild, so both weighted terms start equal. Throws
// ValidationError if ild is not positive.
double AutoLambda(double mag_term, double ild_term);
double AutoLambda(const ImaglsProblem& problem, const Eigen::VectorXd& x0);

// Band bins of `freqs` per the config's [band_lo_hz, band_hi_hz).
std::vector<int> OptimizationBand(const FrequencyGrid& freqs,
                                  const ImaglsConfig& config);

// Builds the objective around `init` (usually the MagLS solution).
ImaglsProblem BuildProblem(const HrtfSet& ref, const ShHrtf& init,
                           const ImaglsConfig& config, const IldSetup& ild);

// Starting from MagLS, minimizes the joint magnitude + ILD objective over
// the band coefficients of both ears. Bins outside the band keep their
// MagLS values.
std::pair<ShHrtf, OptimReport> OptimizeImagls(const HrtfSet& ref, int order,
                                              const ImaglsConfig& config,
                                              const MaglsConfig& magls_config,
                                              const IldSetup& ild);

}  // namespace imagls

#endif  // IMAGLS_IMAGLS_OPT_H_
