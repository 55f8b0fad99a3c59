#ifndef IMAGLS_LOSS_KERNEL_H_
#define IMAGLS_LOSS_KERNEL_H_

// The iMagLS objective over all band coefficients of both ears:
//
//   total = mag + lambda * ild
//   mag   = sum_ear sum_q w_q mean_{f in band} (|H(q,f)| - |y(q,f)|)^2
//   ild   = sum_az mean_{centers} s(ILD_ref(az,c) - ILD(az,c))
//   s(u)  = sqrt(u^2 + eps^2) - eps
//
// where y is the order-N synthesis on the quadrature grid and ILD the
// gammatone band-energy ratio of the horizontal-plane plane-wave rendering.
// Bins outside the band keep fixed coefficients but still feed the ILD
// band energies.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "imagls/hrtf_model.h"
#include "imagls/psychoacoustics.h"
#include "imagls/sh_core.h"

namespace imagls {

// Packing of (ear, band bin, ACN index, re/im) into one real vector.
class ParamPacking {
 public:
  ParamPacking(int order, std::vector<int> band_bins);

  int order() const { return order_; }
  int num_coeffs() const { return num_coeffs_; }
  int num_band_bins() const { return static_cast<int>(band_bins_.size()); }
  const std::vector<int>& band_bins() const { return band_bins_; }
  int size() const { return 2 * num_band_bins() * num_coeffs_ * 2; }

  // Index of the real part; the imaginary part follows it.
  int Offset(Ear ear, int band_pos, int acn) const {
    return ((static_cast<int>(ear) * num_band_bins() + band_pos) * num_coeffs_ +
            acn) *
           2;
  }

  Eigen::VectorXd Pack(const ShHrtf& hrtf) const;
  // Overwrites the band coefficients of `hrtf`; other bins are untouched.
  void Unpack(std::span<const double> x, ShHrtf* hrtf) const;
  void Unpack(const Eigen::VectorXd& x, ShHrtf* hrtf) const {
    Unpack(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
           hrtf);
  }

 private:
  int order_;
  int num_coeffs_;
  std::vector<int> band_bins_;
};

struct LossTerms {
  double total = 0.0;
  double mag = 0.0;
  double ild = 0.0;
  // A band energy vanished; total carries kDegeneratePenalty.
  bool degenerate = false;
};

inline constexpr double kDegeneratePenalty = 1e9;

// Immutable precomputed data for the objective. Row-major flat arrays.
struct ImaglsProblem {
  explicit ImaglsProblem(ParamPacking p) : packing(std::move(p)) {}

  ParamPacking packing;
  int num_dirs = 0;
  int num_azimuths = 0;
  int num_centers = 0;
  double smooth_eps_db = 1e-4;
  bool include_ild = true;

  std::vector<double> quad_weights;   // Q
  std::vector<Complex> grid_basis;    // Q x K
  std::vector<double> target_mag;     // [ear][band_pos][q]
  std::vector<Complex> az_basis;      // A x K

  // Bins with nonzero gammatone weight, their band position (-1 = fixed),
  // and the band position -> ILD bin map (-1 = not used by the ILD).
  std::vector<int> ild_bins;
  std::vector<int> ild_band_pos;
  std::vector<int> band_ild_index;
  std::vector<Complex> fixed_az_response;  // [ear][ild_bin][a], fixed bins only
  std::vector<double> band_weights;        // C x ild_bins
  std::vector<double> ref_ild_db;          // A x C

  // `init` supplies the coefficients of bins outside the band.
  static ImaglsProblem Build(const HrtfSet& ref, const ShHrtf& init,
                             const std::vector<int>& band_bins,
                             const GammatoneBank& bank,
                             std::span<const double> azimuths,
                             const IldCurve& ref_ild, double smooth_eps_db,
                             bool include_ild = true);
};

enum class ExecutionPolicy { kSerial, kParallel };

// Loss terms at `x`; fills `grad` (same length as x) with d total / dx when
// non-empty. kSerial runs the plain reference loops, kParallel the OpenMP
// kernel. Both produce the same values up to rounding.
LossTerms EvaluateLoss(const ImaglsProblem& problem, std::span<const double> x,
                       double lambda, std::span<double> grad = {},
                       ExecutionPolicy policy = ExecutionPolicy::kParallel);

inline LossTerms EvaluateLoss(
    const ImaglsProblem& problem, const Eigen::VectorXd& x, double lambda,
    Eigen::VectorXd* grad = nullptr,
    ExecutionPolicy policy = ExecutionPolicy::kParallel) {
  std::span<double> g;
  if (grad != nullptr) {
    grad->resize(x.size());
    g = std::span<double>(grad->data(), static_cast<std::size_t>(grad->size()));
  }
  return EvaluateLoss(problem,
                      std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                      lambda, g, policy);
}

namespace serial_reference {
LossTerms EvaluateLoss(const ImaglsProblem& problem, std::span<const double> x,
                       double lambda, std::span<double> grad);
}  // namespace serial_reference

}  // namespace imagls

#endif  // IMAGLS_LOSS_KERNEL_H_
