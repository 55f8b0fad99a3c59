#ifndef IMAGLS_TESTS_TEST_SUPPORT_H_
#define IMAGLS_TESTS_TEST_SUPPORT_H_

#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "imagls/baseline_renderers.h"
#include "imagls/hrtf_model.h"
#include "imagls/imagls_opt.h"
#include "imagls/loss_kernel.h"
#include "imagls/pipeline.h"
#include "imagls/psychoacoustics.h"
#include "imagls/sh_core.h"

namespace imagls::test {

inline Eigen::MatrixXcd RandomComplex(int rows, int cols, std::mt19937_64* rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXcd m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = Complex(normal(*rng), normal(*rng));
  }
  return m;
}

inline Direction RandomDirection(std::mt19937_64* rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return Direction(2.0 * kPi * u(*rng), std::acos(1.0 - 2.0 * u(*rng)));
}

// Direction-domain set whose two ears are random order-`order` functions
// sampled on `grid`, so a truncation at `order` reproduces it exactly.
inline HrtfSet BandlimitedSet(const SphericalGrid& grid, int order,
                              const FrequencyGrid& freqs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXcd y = ShMatrix(order, grid.directions());
  HrtfSet set{grid, freqs,
              y * RandomComplex(NumCoeffs(order), freqs.size(), &rng),
              y * RandomComplex(NumCoeffs(order), freqs.size(), &rng),
              "bandlimited"};
  return set;
}

// H(q, f) = B(q) s(f): one bandlimited spatial pattern per ear times a
// random complex spectrum. Magnitude-only phase continuation stays inside
// the order-`order` subspace for such sets.
inline HrtfSet SeparableSet(const SphericalGrid& grid, int order,
                            const FrequencyGrid& freqs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXcd y = ShMatrix(order, grid.directions());
  HrtfSet set{grid, freqs, Eigen::MatrixXcd(), Eigen::MatrixXcd(), "separable"};
  for (Ear e : kEars) {
    const Eigen::VectorXcd pattern = y * RandomComplex(NumCoeffs(order), 1, &rng);
    const Eigen::MatrixXcd spectrum = RandomComplex(1, freqs.size(), &rng);
    (e == Ear::kLeft ? set.left : set.right) = pattern * spectrum;
  }
  return set;
}

// A reduced rigid-sphere problem that keeps unit tests fast.
inline FrequencyGrid SmallFrequencies() {
  return FrequencyGrid::Uniform(375.0, 375.0, 48);
}

inline HrtfSet SmallSphereSet(int grid_order = 12) {
  return RigidSphereHrtf(SphereModelConfig{}, GaussGrid(grid_order),
                         SmallFrequencies());
}

// Reference set, MagLS start and ILD setup of a reduced N = 1 problem.
struct SmallProblem {
  HrtfSet ref;
  ShHrtf init;
  IldSetup ild;
};

inline SmallProblem MakeSmallProblem(int grid_order = 12, int order = 1,
                                     int azimuth_count = 24) {
  HrtfSet ref = SmallSphereSet(grid_order);
  ShHrtf init = MaglsEncode(ref, order, MaglsConfig{});
  IldSetup ild = MakeIldSetup(TruncateReference(ref, grid_order),
                              GammatoneBank(ref.freqs, 1200.0, 18000.0),
                              HorizontalAzimuths(azimuth_count));
  return {std::move(ref), std::move(init), std::move(ild)};
}

// Independent extended-precision evaluation of the iMagLS objective, used as
// the finite-difference oracle for the kernel's analytic gradient. The
// magnitude term is kept per (ear, band bin) so a difference quotient only
// touches the bin a coordinate belongs to.
class LongDoubleLoss {
 public:
  using Real = long double;
  using Cx = std::complex<long double>;

  LongDoubleLoss(const HrtfSet& ref, const ShHrtf& init,
                 const std::vector<int>& band_bins, const IldSetup& ild,
                 double smooth_eps_db)
      : ref_(ref), init_(init), bins_(band_bins), ild_(ild), eps_(smooth_eps_db) {
    grid_basis_ = ShMatrix(init.order, ref.grid.directions());
    std::vector<Direction> az;
    for (double a : ild.azimuths) az.emplace_back(a, kPi / 2.0);
    az_basis_ = ShMatrix(init.order, az);
  }

  int size() const { return 2 * static_cast<int>(bins_.size()) * NumCoeffs(init_.order) * 2; }

  // Coefficients of (ear, band position) from the packed vector.
  std::vector<Cx> Coeffs(const Eigen::VectorXd& x, int ear, int b) const {
    const int k_count = NumCoeffs(init_.order);
    std::vector<Cx> c(k_count);
    for (int k = 0; k < k_count; ++k) {
      const int i = ((ear * static_cast<int>(bins_.size()) + b) * k_count + k) * 2;
      c[k] = Cx(x[i], x[i + 1]);
    }
    return c;
  }

  Real MagBin(const Eigen::VectorXd& x, int ear, int b) const {
    const std::vector<Cx> c = Coeffs(x, ear, b);
    const Eigen::MatrixXcd& h = ear == 0 ? ref_.left : ref_.right;
    Real sum = 0.0L;
    for (int q = 0; q < ref_.grid.size(); ++q) {
      Cx y = 0.0L;
      for (std::size_t k = 0; k < c.size(); ++k) {
        y += Cx(grid_basis_(q, k).real(), grid_basis_(q, k).imag()) * c[k];
      }
      const Real d = std::abs(y) - std::abs(Cx(h(q, bins_[b]).real(), h(q, bins_[b]).imag()));
      sum += static_cast<Real>(ref_.grid.weight(q)) * d * d;
    }
    return sum / static_cast<Real>(bins_.size());
  }

  Real Mag(const Eigen::VectorXd& x) const {
    Real sum = 0.0L;
    for (int e = 0; e < 2; ++e) {
      for (int b = 0; b < static_cast<int>(bins_.size()); ++b) sum += MagBin(x, e, b);
    }
    return sum;
  }

  Real Ild(const Eigen::VectorXd& x) const {
    const int f_count = ref_.freqs.size();
    const int a_count = static_cast<int>(ild_.azimuths.size());
    const Eigen::MatrixXd& t = ild_.bank.band_weights();
    const int c_count = static_cast<int>(t.rows());
    std::vector<int> pos(f_count, -1);
    for (std::size_t b = 0; b < bins_.size(); ++b) pos[bins_[b]] = static_cast<int>(b);
    Real total = 0.0L;
    for (int a = 0; a < a_count; ++a) {
      std::vector<Real> power[2];
      for (int e = 0; e < 2; ++e) {
        power[e].assign(f_count, 0.0L);
        for (int f = 0; f < f_count; ++f) {
          std::vector<Cx> c;
          if (pos[f] >= 0) {
            c = Coeffs(x, e, pos[f]);
          } else {
            const Eigen::MatrixXcd& m = e == 0 ? init_.left : init_.right;
            for (Eigen::Index k = 0; k < m.rows(); ++k) {
              c.emplace_back(m(k, f).real(), m(k, f).imag());
            }
          }
          Cx p = 0.0L;
          for (std::size_t k = 0; k < c.size(); ++k) {
            p += Cx(az_basis_(a, k).real(), az_basis_(a, k).imag()) * c[k];
          }
          power[e][f] = std::norm(p);
        }
      }
      Real mean = 0.0L;
      for (int c = 0; c < c_count; ++c) {
        Real el = 0.0L;
        Real er = 0.0L;
        for (int f = 0; f < f_count; ++f) {
          el += static_cast<Real>(t(c, f)) * power[0][f];
          er += static_cast<Real>(t(c, f)) * power[1][f];
        }
        const Real u = static_cast<Real>(ild_.reference.values_db(a, c)) -
                       10.0L * std::log10(el / er);
        const Real eps = static_cast<Real>(eps_);
        mean += std::sqrt(u * u + eps * eps) - eps;
      }
      total += mean / static_cast<Real>(c_count);
    }
    return total;
  }

  // Central difference of coordinate i with step h.
  double Derivative(const Eigen::VectorXd& x, int i, double h, double lambda) const {
    const int k_count = NumCoeffs(init_.order);
    const int b_count = static_cast<int>(bins_.size());
    const int ear = i / (2 * k_count * b_count);
    const int b = (i / (2 * k_count)) % b_count;
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp[i] += h;
    xm[i] -= h;
    const Real d_mag = MagBin(xp, ear, b) - MagBin(xm, ear, b);
    const Real d_ild = lambda == 0.0 ? 0.0L : Ild(xp) - Ild(xm);
    const Real step = static_cast<Real>(xp[i]) - static_cast<Real>(xm[i]);
    return static_cast<double>((d_mag + static_cast<Real>(lambda) * d_ild) / step);
  }

 private:
  const HrtfSet& ref_;
  const ShHrtf& init_;
  std::vector<int> bins_;
  const IldSetup& ild_;
  double eps_;
  Eigen::MatrixXcd grid_basis_;
  Eigen::MatrixXcd az_basis_;
};

struct GradientCheck {
  double max_rel_error = 0.0;
  int significant = 0;
  int failures = 0;
};

// Analytic kernel gradient against central differences of the oracle with
// step rel_step * max(1, |x_i|); coordinates with |g| > 1e-8 must agree to
// `tol` in relative error.
inline GradientCheck CheckGradient(const ImaglsProblem& problem,
                                   const LongDoubleLoss& oracle,
                                   const Eigen::VectorXd& x, double lambda,
                                   double rel_step = 1e-6, double tol = 1e-5) {
  Eigen::VectorXd grad;
  EvaluateLoss(problem, x, lambda, &grad);
  GradientCheck out;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::abs(grad[i]) <= 1e-8) continue;
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    const double fd = oracle.Derivative(x, static_cast<int>(i), h, lambda);
    ++out.significant;
    const double rel = std::abs(fd - grad[i]) / std::abs(grad[i]);
    out.max_rel_error = std::max(out.max_rel_error, rel);
    if (rel >= tol) ++out.failures;
  }
  return out;
}

// A random point near `x`: Gaussian noise of `scale` times the rms of x.
inline Eigen::VectorXd Perturbed(const Eigen::VectorXd& x, double scale,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double rms = x.norm() / std::sqrt(static_cast<double>(x.size()));
  Eigen::VectorXd out = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] += scale * rms * normal(rng);
  return out;
}

inline double MaxAbsDiff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// Pipeline settings small enough for unit tests: order-10 grid, 48 bins.
inline PipelineConfig SmallPipelineConfig(const std::string& out_dir) {
  PipelineConfig c;
  c.grid_order = 10;
  c.reference_order = 10;
  c.freq_start_hz = 375.0;
  c.freq_step_hz = 375.0;
  c.freq_count = 48;
  c.azimuth_count = 24;
  c.imagls.max_iters = 60;
  c.out_dir = out_dir;
  return c;
}

}  // namespace imagls::test

#endif  // IMAGLS_TESTS_TEST_SUPPORT_H_
