#ifndef IMAGLS_QUASI_NEWTON_H_
#define IMAGLS_QUASI_NEWTON_H_

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace imagls {

enum class QuasiNewtonMethod { kBfgs, kLbfgs };

struct QuasiNewtonOptions {
  QuasiNewtonMethod method = QuasiNewtonMethod::kBfgs;
  int lbfgs_memory = 10;
  int max_iters = 500;
  // Stop once |g|_inf < grad_tol * max(1, |f|).
  double grad_tol = 1e-6;
  // Strong Wolfe constants.
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search_evals = 40;
};

// Returns f(x); writes the gradient into *grad.
using GradientFunction =
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

// Called at x0 (iteration 0) and after every accepted step.
using IterationCallback =
    std::function<void(int iteration, const Eigen::VectorXd& x, double value)>;

struct QuasiNewtonResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_inf_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string status;
};

// BFGS (dense inverse-Hessian) or L-BFGS with a strong-Wolfe line search.
// Accepted steps never increase f. On line-search failure the best point so
// far is returned with converged = false.
QuasiNewtonResult MinimizeQuasiNewton(const GradientFunction& fn,
                                      Eigen::VectorXd x0,
                                      const QuasiNewtonOptions& options,
                                      const IterationCallback& on_iterate = {});

}  // namespace imagls

#endif  // IMAGLS_QUASI_NEWTON_H_
