#include "imagls/quasi_newton.h"

#include <cmath>
#include <deque>
#include <limits>

#include "imagls/errors.h"

namespace imagls {

namespace {

struct Sample {
  double alpha = 0.0;
  double value = 0.0;
  double slope = 0.0;
};

// Minimizer of the cubic through two samples, kept inside the middle 80% of
// the bracket; falls back to bisection.
double CubicStep(const Sample& lo, const Sample& hi) {
  const double a = lo.alpha;
  const double b = hi.alpha;
  const double d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (a - b);
  const double disc = d1 * d1 - lo.slope * hi.slope;
  double t = 0.5 * (a + b);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = hi.slope - lo.slope + 2.0 * d2;
    if (denom != 0.0) t = b - (b - a) * (hi.slope + d2 - d1) / denom;
  }
  const double lo_edge = std::min(a, b) + 0.1 * std::abs(b - a);
  const double hi_edge = std::max(a, b) - 0.1 * std::abs(b - a);
  if (!std::isfinite(t) || t < lo_edge || t > hi_edge) t = 0.5 * (a + b);
  return t;
}

class LineSearch {
 public:
  LineSearch(const GradientFunction& fn, const QuasiNewtonOptions& options,
             const Eigen::VectorXd& x, const Eigen::VectorXd& dir, double f0,
             double slope0, int* evaluations)
      : fn_(fn),
        options_(options),
        x_(x),
        dir_(dir),
        f0_(f0),
        slope0_(slope0),
        evaluations_(evaluations) {}

  // Returns true with *alpha, *f, *g set at a strong-Wolfe point.
  bool Run(double alpha_init, double* alpha, double* f, Eigen::VectorXd* g) {
    Sample prev{0.0, f0_, slope0_};
    double a = alpha_init;
    for (int i = 0; i < options_.max_line_search_evals; ++i) {
      const Sample cur = Eval(a);
      if (!Armijo(cur) || (i > 0 && cur.value >= prev.value)) {
        return Zoom(prev, cur, alpha, f, g);
      }
      if (std::abs(cur.slope) <= -options_.c2 * slope0_) return Accept(alpha, f, g);
      if (cur.slope >= 0.0) return Zoom(cur, prev, alpha, f, g);
      prev = cur;
      a *= 2.0;
    }
    return AcceptBestArmijo(alpha, f, g);
  }

 private:
  Sample Eval(double alpha) {
    Eigen::VectorXd g;
    const Eigen::VectorXd xa = x_ + alpha * dir_;
    double f = fn_(xa, &g);
    ++*evaluations_;
    if (!std::isfinite(f)) f = std::numeric_limits<double>::infinity();
    last_ = Sample{alpha, f, g.dot(dir_)};
    last_g_ = g;
    if (Armijo(last_) && f < best_.value) {
      best_ = last_;
      best_g_ = g;
    }
    return last_;
  }

  bool Armijo(const Sample& s) const {
    return s.value <= f0_ + options_.c1 * s.alpha * slope0_;
  }

  bool Accept(double* alpha, double* f, Eigen::VectorXd* g) const {
    *alpha = last_.alpha;
    *f = last_.value;
    *g = last_g_;
    return true;
  }

  // Falls back to the best sufficient-decrease point, if any.
  bool AcceptBestArmijo(double* alpha, double* f, Eigen::VectorXd* g) const {
    if (!(best_.value < f0_)) return false;
    *alpha = best_.alpha;
    *f = best_.value;
    *g = best_g_;
    return true;
  }

  bool Zoom(Sample lo, Sample hi, double* alpha, double* f,
            Eigen::VectorXd* g) {
    for (int i = 0; i < options_.max_line_search_evals; ++i) {
      if (std::abs(hi.alpha - lo.alpha) <
          1e-16 * std::max(1.0, std::abs(lo.alpha))) {
        break;
      }
      const Sample cur = Eval(CubicStep(lo, hi));
      if (!Armijo(cur) || cur.value >= lo.value) {
        hi = cur;
      } else {
        if (std::abs(cur.slope) <= -options_.c2 * slope0_) {
          return Accept(alpha, f, g);
        }
        if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = cur;
      }
    }
    return AcceptBestArmijo(alpha, f, g);
  }

  const GradientFunction& fn_;
  const QuasiNewtonOptions& options_;
  const Eigen::VectorXd& x_;
  const Eigen::VectorXd& dir_;
  double f0_;
  double slope0_;
  int* evaluations_;
  Sample last_;
  Eigen::VectorXd last_g_;
  Sample best_{0.0, std::numeric_limits<double>::infinity(), 0.0};
  Eigen::VectorXd best_g_;
};

}  // namespace

QuasiNewtonResult MinimizeQuasiNewton(const GradientFunction& fn,
                                      Eigen::VectorXd x0,
                                      const QuasiNewtonOptions& options,
                                      const IterationCallback& on_iterate) {
  const Eigen::Index n = x0.size();
  QuasiNewtonResult result;
  result.x = std::move(x0);
  Eigen::VectorXd g;
  result.value = fn(result.x, &g);
  result.evaluations = 1;
  if (!std::isfinite(result.value)) {
    throw NumericalError("objective is not finite at the starting point");
  }
  if (on_iterate) on_iterate(0, result.x, result.value);

  const bool dense = options.method == QuasiNewtonMethod::kBfgs;
  Eigen::MatrixXd h_inv;
  bool h_scaled = false;
  if (dense) h_inv = Eigen::MatrixXd::Identity(n, n);
  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  std::deque<double> rho_hist;
  double gamma = 1.0;

  auto converged = [&](const Eigen::VectorXd& grad, double f) {
    return grad.lpNorm<Eigen::Infinity>() <
           options.grad_tol * std::max(1.0, std::abs(f));
  };

  result.status = "max_iters";
  for (int iter = 1; iter <= options.max_iters; ++iter) {
    if (converged(g, result.value)) {
      result.converged = true;
      result.status = "grad_tol";
      break;
    }
    Eigen::VectorXd dir;
    if (dense) {
      dir = -(h_inv * g);
    } else {
      // Two-loop recursion.
      Eigen::VectorXd q = g;
      std::vector<double> alphas(s_hist.size());
      for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
        alphas[i] = rho_hist[i] * s_hist[i].dot(q);
        q -= alphas[i] * y_hist[i];
      }
      q *= gamma;
      for (std::size_t i = 0; i < s_hist.size(); ++i) {
        const double beta = rho_hist[i] * y_hist[i].dot(q);
        q += (alphas[i] - beta) * s_hist[i];
      }
      dir = -q;
    }
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      // Lost descent: restart from steepest descent.
      dir = -g;
      slope = -g.squaredNorm();
      if (dense) h_inv.setIdentity();
      h_scaled = false;
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      gamma = 1.0;
    }
    const bool first_step = dense ? !h_scaled : s_hist.empty();
    const double alpha_init =
        first_step ? std::min(1.0, 1.0 / dir.lpNorm<Eigen::Infinity>()) : 1.0;

    LineSearch search(fn, options, result.x, dir, result.value, slope,
                      &result.evaluations);
    double alpha = 0.0;
    double f_new = 0.0;
    Eigen::VectorXd g_new;
    if (!search.Run(alpha_init, &alpha, &f_new, &g_new)) {
      result.status = "line_search_failed";
      break;
    }
    const Eigen::VectorXd s = alpha * dir;
    const Eigen::VectorXd y = g_new - g;
    result.x += s;
    result.value = f_new;
    g = std::move(g_new);
    result.iterations = iter;
    if (on_iterate) on_iterate(iter, result.x, result.value);

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      if (dense) {
        if (!h_scaled) {
          h_inv *= sy / y.squaredNorm();
          h_scaled = true;
        }
        const Eigen::VectorXd hy = h_inv * y;
        const double yhy = y.dot(hy);
        h_inv.noalias() -= rho * (hy * s.transpose() + s * hy.transpose());
        h_inv.noalias() += (rho * rho * yhy + rho) * (s * s.transpose());
      } else {
        s_hist.push_back(s);
        y_hist.push_back(y);
        rho_hist.push_back(rho);
        if (static_cast<int>(s_hist.size()) > options.lbfgs_memory) {
          s_hist.pop_front();
          y_hist.pop_front();
          rho_hist.pop_front();
        }
        gamma = sy / y.squaredNorm();
      }
    }
  }
  if (!result.converged && result.status == "max_iters" &&
      converged(g, result.value)) {
    result.converged = true;
    result.status = "grad_tol";
  }
  result.grad_inf_norm = g.lpNorm<Eigen::Infinity>();
  return result;
}

}  // namespace imagls
