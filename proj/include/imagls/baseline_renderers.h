#ifndef IMAGLS_BASELINE_RENDERERS_H_
#define IMAGLS_BASELINE_RENDERERS_H_

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "imagls/hrtf_model.h"
#include "imagls/sh_core.h"

namespace imagls {

// The modified Ambisonics signal ã_nm(f), one (N+1)^2 column per
// frequency.
struct AmbisonicsSignal {
  int order;
  FrequencyGrid freqs;
  Eigen::MatrixXcd coeffs;
};

struct BinauralSpectra {
  std::vector<Complex> left;
  std::vector<Complex> right;
};

struct MaglsConfig {
  double cutoff_hz = 2000.0;

  // Cutoff must lie within [freqs.front(), freqs.back()].
  void Validate(const FrequencyGrid& freqs) const;
};

// Unit plane wave from `dir`: ã_nm = conj(Y_n^m(dir)) at every frequency, so
// RenderBinaural() returns sum_nm h_nm Y_n^m(dir).
AmbisonicsSignal PlaneWaveAmbisonics(const Direction& dir, int order,
                                     const FrequencyGrid& freqs);

// p(f) = sum_nm conj(ã_nm(f)) h_nm(f) for each ear.
BinauralSpectra RenderBinaural(const AmbisonicsSignal& signal,
                               const ShHrtf& hrtf);

// Least-squares (quadrature SHT) encoding.
ShHrtf LsEncode(const HrtfSet& ref, int order);

// Magnitude least squares: LS up to the cutoff, then per bin in ascending
// order the previous bin's phase is imposed on the reference magnitude and
// re-projected.
ShHrtf MaglsEncode(const HrtfSet& ref, int order, const MaglsConfig& config);

// 2 x 2 ear covariance R = A A^H of the sqrt(w)-weighted responses at one
// bin (row 0 left, row 1 right).
Eigen::Matrix2cd EarCovariance(const SphericalGrid& grid,
                               const Eigen::VectorXcd& left,
                               const Eigen::VectorXcd& right);

struct CovarianceMixing {
  std::vector<Eigen::Matrix2cd> mixing;  // one M per frequency bin
  std::vector<int> regularized_bins;
};

// Mixing matrices M with M R_low M^H = R_ref per bin, built from Cholesky
// factors and the SVD polar alignment M = L_ref V U^H L_low^-1.
CovarianceMixing ComputeCovarianceMixing(const ShHrtf& low, const HrtfSet& ref);

// Applies ComputeCovarianceMixing() across the ear dimension.
ShHrtf CovarianceCorrection(const ShHrtf& low, const HrtfSet& ref);

}  // namespace imagls

#endif  // IMAGLS_BASELINE_RENDERERS_H_
