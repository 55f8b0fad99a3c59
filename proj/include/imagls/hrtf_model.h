#ifndef IMAGLS_HRTF_MODEL_H_
#define IMAGLS_HRTF_MODEL_H_

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "imagls/sh_core.h"

namespace imagls {

// Strictly increasing, positive frequencies in Hz.
class FrequencyGrid {
 public:
  explicit FrequencyGrid(std::vector<double> freqs_hz);
  static FrequencyGrid Uniform(double start_hz, double step_hz, int count);

  int size() const { return static_cast<int>(freqs_hz_.size()); }
  double operator[](int i) const { return freqs_hz_[i]; }
  const std::vector<double>& values() const { return freqs_hz_; }
  double front() const { return freqs_hz_.front(); }
  double back() const { return freqs_hz_.back(); }

  // Indices of the bins with lo <= f < hi.
  std::vector<int> BinsInRange(double lo_hz, double hi_hz) const;

  bool operator==(const FrequencyGrid&) const = default;

 private:
  std::vector<double> freqs_hz_;
};

// 96 bins, 187.5 Hz to 18 kHz in 187.5 Hz steps.
FrequencyGrid DefaultFrequencyGrid();

enum class Ear { kLeft = 0, kRight = 1 };
inline constexpr std::array<Ear, 2> kEars = {Ear::kLeft, Ear::kRight};

// Direction-domain HRTF: left/right are Q x F (directions x frequencies).
struct HrtfSet {
  SphericalGrid grid;
  FrequencyGrid freqs;
  Eigen::MatrixXcd left;
  Eigen::MatrixXcd right;
  std::string label;

  const Eigen::MatrixXcd& ear(Ear e) const {
    return e == Ear::kLeft ? left : right;
  }
  // Throws ValidationError on shape mismatch, non-finite entries or
  // magnitudes above 1e6.
  void Validate() const;
};

enum class Provenance { kLs, kMagLs, kMagLsCc, kIMagLs, kTruncation };
std::string_view ProvenanceName(Provenance p);
Provenance ParseProvenance(std::string_view name);

// SH-domain HRTF: left/right are (N+1)^2 x F, one coefficient column per bin.
struct ShHrtf {
  // Zero coefficients of the given order on `freqs`.
  ShHrtf(int order, FrequencyGrid freqs, Provenance provenance);

  int order = 0;
  FrequencyGrid freqs;
  Eigen::MatrixXcd left;
  Eigen::MatrixXcd right;
  Provenance provenance = Provenance::kLs;
  // Bins where the covariance correction had to regularize R_low.
  std::vector<int> regularized_bins;

  const Eigen::MatrixXcd& ear(Ear e) const {
    return e == Ear::kLeft ? left : right;
  }
  Eigen::MatrixXcd& ear(Ear e) { return e == Ear::kLeft ? left : right; }
  ShCoeffVec Coeffs(Ear e, int bin) const {
    return ShCoeffVec(order, ear(e).col(bin));
  }
  void Validate() const;
};

struct SphereModelConfig {
  double radius_m = 0.0875;
  std::array<double, 2> ear_azimuths_rad = {kPi / 2.0, 3.0 * kPi / 2.0};
  std::array<double, 2> ear_colatitudes_rad = {kPi / 2.0, kPi / 2.0};
  double speed_of_sound_mps = 343.0;
  int series_order = 60;

  Direction ear_direction(Ear e) const {
    const int i = static_cast<int>(e);
    return Direction(ear_azimuths_rad[i], ear_colatitudes_rad[i]);
  }

  // Parameter sanity plus the truncation check: the last series term must be
  // below 1e-10 of the partial sum at `max_freq_hz`.
  void Validate(double max_freq_hz) const;
};

// Pressure on a rigid sphere at angle acos(cos_angle) from the incidence
// direction of a unit plane wave, time convention exp(+i w t):
//   H = sum_n (2n+1) i^(n-1) P_n(cos) / ((ka)^2 h_n'(ka)),  h_n = h_n^(2).
Complex RigidSphereResponse(double ka, double cos_angle, int series_order);

// Magnitude of the series term n at cos_angle = 1 relative to the partial sum.
double RigidSphereTailRatio(double ka, int series_order);

HrtfSet RigidSphereHrtf(const SphereModelConfig& config,
                        const SphericalGrid& grid, const FrequencyGrid& freqs);

// Exact model evaluation for one source direction: {left, right} spectra.
std::array<std::vector<Complex>, 2> RigidSphereEars(
    const SphereModelConfig& config, const Direction& source,
    const FrequencyGrid& freqs);

// Per-frequency, per-ear SHT of the reference samples.
ShHrtf TruncateReference(const HrtfSet& ref, int order);

}  // namespace imagls

#endif  // IMAGLS_HRTF_MODEL_H_
