#ifndef IMAGLS_PSYCHOACOUSTICS_H_
#define IMAGLS_PSYCHOACOUSTICS_H_

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "imagls/hrtf_model.h"
#include "imagls/sh_core.h"

namespace imagls {

// Glasberg-Moore equivalent rectangular bandwidth, Hz.
double ErbBandwidth(double f0_hz);
// ERB-rate scale (number of ERBs below f) and its inverse.
double ErbRate(double f_hz);
double InverseErbRate(double erb_rate);

// Magnitude-squared gammatone response normalized to 1 at f0:
//   [1 + ((f - f0) / (1.019 erb(f0)))^2]^(-order)
double GammatoneWeight(double f0_hz, double f_hz, int order);

// ERB-spaced gammatone weighting of a frequency grid. Each row holds
// G(f0, f) on the grid, scaled so the row peaks at 1 on the bin nearest f0,
// and is zero outside [f1, f2].
class GammatoneBank {
 public:
  GammatoneBank(const FrequencyGrid& freqs, double f1_hz, double f2_hz,
                int filter_order = 4);

  int num_centers() const { return static_cast<int>(centers_hz_.size()); }
  const std::vector<double>& centers_hz() const { return centers_hz_; }
  const FrequencyGrid& freqs() const { return freqs_; }
  double f1_hz() const { return f1_hz_; }
  double f2_hz() const { return f2_hz_; }
  int filter_order() const { return filter_order_; }
  // centers x F gammatone weights.
  const Eigen::MatrixXd& weights() const { return weights_; }
  // weights() times the trapezoid rule of the frequency grid; the band
  // energy of a power spectrum is band_weights() * |p|^2.
  const Eigen::MatrixXd& band_weights() const { return band_weights_; }

 private:
  FrequencyGrid freqs_;
  double f1_hz_;
  double f2_hz_;
  int filter_order_;
  std::vector<double> centers_hz_;
  Eigen::MatrixXd weights_;
  Eigen::MatrixXd band_weights_;
};

// 10 log10 of the left/right gammatone band-energy ratio per center.
// Throws NumericalError when a band energy is zero.
std::vector<double> Ild(std::span<const Complex> left,
                        std::span<const Complex> right,
                        const GammatoneBank& bank);

// ILD over horizontal-plane azimuths: values_db is azimuths x centers, or
// azimuths x 1 once averaged over centers.
struct IldCurve {
  std::vector<double> azimuths_rad;
  Eigen::MatrixXd values_db;
  bool frequency_averaged = false;
};

// `count` azimuths uniformly spaced over [0, 2*pi).
std::vector<double> HorizontalAzimuths(int count = 72);

// Plane-wave rendering of an SH-HRTF on the horizontal plane.
IldCurve ComputeIldCurve(const ShHrtf& hrtf, std::span<const double> azimuths,
                         const GammatoneBank& bank);
// Direction-domain set: uses the nearest grid direction to each azimuth.
IldCurve ComputeIldCurve(const HrtfSet& hrtf, std::span<const double> azimuths,
                         const GammatoneBank& bank);
// Exact rigid-sphere model evaluation.
IldCurve ComputeIldCurve(const SphereModelConfig& model,
                         std::span<const double> azimuths,
                         const GammatoneBank& bank);

IldCurve FrequencyAverage(const IldCurve& curve);

// |ref - test| elementwise, azimuths x centers (or x 1).
Eigen::MatrixXd IldError(const IldCurve& ref, const IldCurve& test);
// Mean over centers of IldError(), one value per azimuth.
Eigen::VectorXd IldErrorAveraged(const IldCurve& ref, const IldCurve& test);

// (|H| - |isht(test)|)^2 per direction and frequency (Q x F) for one ear.
Eigen::MatrixXd MagError(const HrtfSet& ref, const ShHrtf& test, Ear ear);

// Direction-averaged magnitude error per frequency in dB, both ears pooled:
//   10 log10( sum_e sum_q w_q eps / sum_e sum_q w_q |H|^2 ).
std::vector<double> MagErrorDb(const HrtfSet& ref, const ShHrtf& test);

}  // namespace imagls

#endif  // IMAGLS_PSYCHOACOUSTICS_H_
