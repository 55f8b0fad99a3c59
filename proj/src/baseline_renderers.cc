#include "imagls/baseline_renderers.h"

#include <cmath>
#include <sstream>

#include <Eigen/SVD>

#include "imagls/errors.h"

namespace imagls {

namespace {

// Lower Cholesky factor of a Hermitian 2x2 matrix. Returns false when a
// pivot falls below `tol`.
bool Cholesky2(const Eigen::Matrix2cd& r, double tol, Eigen::Matrix2cd* l) {
  const double d0 = r(0, 0).real();
  if (!(d0 > tol)) return false;
  const double l00 = std::sqrt(d0);
  const Complex l10 = r(1, 0) / l00;
  const double d1 = r(1, 1).real() - std::norm(l10);
  if (!(d1 > tol)) return false;
  *l << l00, 0.0, l10, std::sqrt(d1);
  return true;
}

}  // namespace

void MaglsConfig::Validate(const FrequencyGrid& freqs) const {
  if (!(cutoff_hz >= freqs.front() && cutoff_hz <= freqs.back())) {
    std::ostringstream msg;
    msg << "MagLS cutoff " << cutoff_hz << " Hz outside the frequency grid ["
        << freqs.front() << ", " << freqs.back() << "] Hz";
    throw ValidationError(msg.str());
  }
}

AmbisonicsSignal PlaneWaveAmbisonics(const Direction& dir, int order,
                                     const FrequencyGrid& freqs) {
  const Eigen::VectorXcd a = ShBasisAll(order, dir).conjugate();
  return AmbisonicsSignal{order, freqs, a.replicate(1, freqs.size())};
}

BinauralSpectra RenderBinaural(const AmbisonicsSignal& signal,
                               const ShHrtf& hrtf) {
  if (signal.order != hrtf.order) {
    throw ValidationError("Ambisonics order does not match HRTF order");
  }
  if (!(signal.freqs == hrtf.freqs)) {
    throw ValidationError("Ambisonics and HRTF frequency grids differ");
  }
  const int f_count = hrtf.freqs.size();
  BinauralSpectra out{std::vector<Complex>(f_count),
                      std::vector<Complex>(f_count)};
  for (int f = 0; f < f_count; ++f) {
    // Eigen's dot conjugates its first argument.
    out.left[f] = signal.coeffs.col(f).dot(hrtf.left.col(f));
    out.right[f] = signal.coeffs.col(f).dot(hrtf.right.col(f));
  }
  return out;
}

ShHrtf LsEncode(const HrtfSet& ref, int order) {
  ShHrtf out = TruncateReference(ref, order);
  out.provenance = Provenance::kLs;
  return out;
}

ShHrtf MaglsEncode(const HrtfSet& ref, int order, const MaglsConfig& config) {
  config.Validate(ref.freqs);
  ShHrtf out = LsEncode(ref, order);
  out.provenance = Provenance::kMagLs;

  const Eigen::MatrixXcd y = ShMatrix(order, ref.grid.directions());
  const Eigen::Map<const Eigen::VectorXd> w(ref.grid.weights().data(),
                                            ref.grid.size());
  // Projection onto order-N coefficients: Y^H diag(w).
  const Eigen::MatrixXcd analysis = y.adjoint() * w.cast<Complex>().asDiagonal();

  int first = 0;
  while (first < ref.freqs.size() && ref.freqs[first] <= config.cutoff_hz) {
    ++first;
  }
  // Ears are independent; bins are sequential.
#pragma omp parallel for schedule(static)
  for (int e = 0; e < 2; ++e) {
    const Eigen::MatrixXcd& h = ref.ear(kEars[e]);
    Eigen::MatrixXcd& c = out.ear(kEars[e]);
    for (int f = std::max(first, 1); f < ref.freqs.size(); ++f) {
      const Eigen::VectorXcd prev = y * c.col(f - 1);
      Eigen::VectorXcd target(ref.grid.size());
      for (int q = 0; q < ref.grid.size(); ++q) {
        target[q] = std::polar(std::abs(h(q, f)), std::arg(prev[q]));
      }
      c.col(f) = analysis * target;
    }
  }
  return out;
}

Eigen::Matrix2cd EarCovariance(const SphericalGrid& grid,
                               const Eigen::VectorXcd& left,
                               const Eigen::VectorXcd& right) {
  Eigen::Matrix2cd r = Eigen::Matrix2cd::Zero();
  for (int q = 0; q < grid.size(); ++q) {
    const double w = grid.weight(q);
    r(0, 0) += w * std::norm(left[q]);
    r(1, 1) += w * std::norm(right[q]);
    r(1, 0) += w * right[q] * std::conj(left[q]);
  }
  r(0, 1) = std::conj(r(1, 0));
  return r;
}

CovarianceMixing ComputeCovarianceMixing(const ShHrtf& low, const HrtfSet& ref) {
  if (!(low.freqs == ref.freqs)) {
    throw ValidationError("covariance correction needs matching frequency grids");
  }
  const int f_count = ref.freqs.size();
  const Eigen::MatrixXcd synth_l = IshtColumns(low.left, ref.grid.directions());
  const Eigen::MatrixXcd synth_r = IshtColumns(low.right, ref.grid.directions());

  CovarianceMixing out;
  out.mixing.resize(f_count);
  std::vector<char> regularized(f_count, 0);
  std::vector<char> failed(f_count, 0);
#pragma omp parallel for schedule(static)
  for (int f = 0; f < f_count; ++f) {
    const Eigen::Matrix2cd r_ref =
        EarCovariance(ref.grid, ref.left.col(f), ref.right.col(f));
    Eigen::Matrix2cd r_low =
        EarCovariance(ref.grid, synth_l.col(f), synth_r.col(f));
    Eigen::Matrix2cd l_ref;
    Eigen::Matrix2cd l_low;
    const double low_tol = 1e-12 * r_low.trace().real();
    if (!Cholesky2(r_low, low_tol, &l_low)) {
      const double eps = 1e-12 * r_low.trace().real();
      r_low += eps * Eigen::Matrix2cd::Identity();
      regularized[f] = 1;
      if (!Cholesky2(r_low, 0.0, &l_low)) {
        failed[f] = 1;
        continue;
      }
    }
    if (!Cholesky2(r_ref, 0.0, &l_ref)) {
      failed[f] = 1;
      continue;
    }
    Eigen::JacobiSVD<Eigen::Matrix2cd> svd(l_low.adjoint() * l_ref,
                                           Eigen::ComputeFullU |
                                               Eigen::ComputeFullV);
    const Eigen::Matrix2cd l_low_inv =
        l_low.triangularView<Eigen::Lower>().solve(Eigen::Matrix2cd::Identity());
    out.mixing[f] = l_ref * svd.matrixV() * svd.matrixU().adjoint() * l_low_inv;
  }
  for (int f = 0; f < f_count; ++f) {
    if (failed[f]) {
      throw NumericalError("singular ear covariance at bin " +
                           std::to_string(f));
    }
    if (regularized[f]) out.regularized_bins.push_back(f);
  }
  return out;
}

ShHrtf CovarianceCorrection(const ShHrtf& low, const HrtfSet& ref) {
  const CovarianceMixing cm = ComputeCovarianceMixing(low, ref);
  ShHrtf out = low;
  out.provenance = Provenance::kMagLsCc;
  out.regularized_bins = cm.regularized_bins;
  for (int f = 0; f < low.freqs.size(); ++f) {
    const Eigen::Matrix2cd& m = cm.mixing[f];
    out.left.col(f) = m(0, 0) * low.left.col(f) + m(0, 1) * low.right.col(f);
    out.right.col(f) = m(1, 0) * low.left.col(f) + m(1, 1) * low.right.col(f);
  }
  return out;
}

}  // namespace imagls
