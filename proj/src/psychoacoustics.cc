#include "imagls/psychoacoustics.h"

#include <cmath>
#include <sstream>

#include "imagls/baseline_renderers.h"
#include "imagls/errors.h"

namespace imagls {

namespace {

// Trapezoid rule weights of the frequency grid.
std::vector<double> TrapezoidWeights(const FrequencyGrid& freqs) {
  const int n = freqs.size();
  std::vector<double> t(n, 0.0);
  if (n == 1) {
    t[0] = 1.0;
    return t;
  }
  for (int i = 0; i < n; ++i) {
    const double lo = i > 0 ? freqs[i - 1] : freqs[i];
    const double hi = i + 1 < n ? freqs[i + 1] : freqs[i];
    t[i] = 0.5 * (hi - lo);
  }
  return t;
}

IldCurve CurveFromPairs(std::span<const double> azimuths,
                        const GammatoneBank& bank, const auto& pair_at) {
  IldCurve curve;
  curve.azimuths_rad.assign(azimuths.begin(), azimuths.end());
  const int a_count = static_cast<int>(azimuths.size());
  curve.values_db.resize(a_count, bank.num_centers());
  std::vector<std::string> errors(a_count);
#pragma omp parallel for schedule(static)
  for (int a = 0; a < a_count; ++a) {
    try {
      const auto [left, right] = pair_at(azimuths[a]);
      const std::vector<double> ild = Ild(left, right, bank);
      for (int c = 0; c < bank.num_centers(); ++c) {
        curve.values_db(a, c) = ild[c];
      }
    } catch (const std::exception& e) {
      errors[a] = e.what();
    }
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw NumericalError(e);
  }
  return curve;
}

}  // namespace

double ErbBandwidth(double f0_hz) { return 24.7 * (4.37 * f0_hz / 1000.0 + 1.0); }

double ErbRate(double f_hz) {
  return 21.4 * std::log10(4.37 * f_hz / 1000.0 + 1.0);
}

double InverseErbRate(double erb_rate) {
  return (std::pow(10.0, erb_rate / 21.4) - 1.0) * 1000.0 / 4.37;
}

double GammatoneWeight(double f0_hz, double f_hz, int order) {
  const double detune = (f_hz - f0_hz) / (1.019 * ErbBandwidth(f0_hz));
  return std::pow(1.0 + detune * detune, -order);
}

GammatoneBank::GammatoneBank(const FrequencyGrid& freqs, double f1_hz,
                             double f2_hz, int filter_order)
    : freqs_(freqs),
      f1_hz_(f1_hz),
      f2_hz_(f2_hz),
      filter_order_(filter_order) {
  if (!(f1_hz > 0.0) || !(f2_hz > f1_hz)) {
    throw ValidationError("gammatone band needs 0 < f1 < f2");
  }
  if (filter_order < 1) throw ValidationError("gammatone order must be >= 1");
  bool any_in_band = false;
  for (double f : freqs.values()) any_in_band |= (f >= f1_hz && f <= f2_hz);
  if (!any_in_band) {
    throw ValidationError("no frequency bins inside the gammatone band");
  }
  const double e1 = ErbRate(f1_hz);
  const double e2 = ErbRate(f2_hz);
  for (int k = 0; e1 + k <= e2 + 1e-12; ++k) {
    centers_hz_.push_back(InverseErbRate(e1 + k));
  }
  const std::vector<double> trap = TrapezoidWeights(freqs);
  weights_ = Eigen::MatrixXd::Zero(num_centers(), freqs.size());
  for (int c = 0; c < num_centers(); ++c) {
    double row_max = 0.0;
    for (int f = 0; f < freqs.size(); ++f) {
      if (freqs[f] < f1_hz || freqs[f] > f2_hz) continue;
      const double g = GammatoneWeight(centers_hz_[c], freqs[f], filter_order);
      weights_(c, f) = g;
      row_max = std::max(row_max, g);
    }
    if (row_max > 0.0) weights_.row(c) /= row_max;
  }
  band_weights_ = weights_;
  for (int f = 0; f < freqs.size(); ++f) band_weights_.col(f) *= trap[f];
}

std::vector<double> Ild(std::span<const Complex> left,
                        std::span<const Complex> right,
                        const GammatoneBank& bank) {
  const int f_count = bank.freqs().size();
  if (static_cast<int>(left.size()) != f_count ||
      static_cast<int>(right.size()) != f_count) {
    throw ValidationError("spectra do not match the gammatone bank's grid");
  }
  Eigen::VectorXd pow_l(f_count);
  Eigen::VectorXd pow_r(f_count);
  for (int f = 0; f < f_count; ++f) {
    pow_l[f] = std::norm(left[f]);
    pow_r[f] = std::norm(right[f]);
  }
  const Eigen::VectorXd e_l = bank.band_weights() * pow_l;
  const Eigen::VectorXd e_r = bank.band_weights() * pow_r;
  std::vector<double> ild(bank.num_centers());
  for (int c = 0; c < bank.num_centers(); ++c) {
    if (!(e_l[c] > 0.0) || !(e_r[c] > 0.0)) {
      std::ostringstream msg;
      msg << "zero band energy at center " << bank.centers_hz()[c] << " Hz";
      throw NumericalError(msg.str());
    }
    ild[c] = 10.0 * std::log10(e_l[c] / e_r[c]);
  }
  return ild;
}

std::vector<double> HorizontalAzimuths(int count) {
  if (count < 1) throw ValidationError("azimuth count must be >= 1");
  std::vector<double> az(count);
  for (int i = 0; i < count; ++i) az[i] = 2.0 * kPi * i / count;
  return az;
}

IldCurve ComputeIldCurve(const ShHrtf& hrtf, std::span<const double> azimuths,
                         const GammatoneBank& bank) {
  if (!(hrtf.freqs == bank.freqs())) {
    throw ValidationError("SH-HRTF and gammatone bank grids differ");
  }
  return CurveFromPairs(azimuths, bank, [&](double az) {
    const BinauralSpectra p = RenderBinaural(
        PlaneWaveAmbisonics(Direction(az, kPi / 2.0), hrtf.order, hrtf.freqs),
        hrtf);
    return std::pair{p.left, p.right};
  });
}

IldCurve ComputeIldCurve(const HrtfSet& hrtf, std::span<const double> azimuths,
                         const GammatoneBank& bank) {
  if (!(hrtf.freqs == bank.freqs())) {
    throw ValidationError("HRTF set and gammatone bank grids differ");
  }
  return CurveFromPairs(azimuths, bank, [&](double az) {
    const Direction target(az, kPi / 2.0);
    int best = 0;
    double best_cos = -2.0;
    for (int q = 0; q < hrtf.grid.size(); ++q) {
      const double c = hrtf.grid.direction(q).CosAngleTo(target);
      if (c > best_cos) {
        best_cos = c;
        best = q;
      }
    }
    std::vector<Complex> left(hrtf.left.row(best).begin(),
                              hrtf.left.row(best).end());
    std::vector<Complex> right(hrtf.right.row(best).begin(),
                               hrtf.right.row(best).end());
    return std::pair{std::move(left), std::move(right)};
  });
}

IldCurve ComputeIldCurve(const SphereModelConfig& model,
                         std::span<const double> azimuths,
                         const GammatoneBank& bank) {
  return CurveFromPairs(azimuths, bank, [&](double az) {
    auto ears = RigidSphereEars(model, Direction(az, kPi / 2.0), bank.freqs());
    return std::pair{std::move(ears[0]), std::move(ears[1])};
  });
}

IldCurve FrequencyAverage(const IldCurve& curve) {
  if (curve.frequency_averaged) return curve;
  IldCurve out;
  out.azimuths_rad = curve.azimuths_rad;
  out.values_db = curve.values_db.rowwise().mean();
  out.frequency_averaged = true;
  return out;
}

Eigen::MatrixXd IldError(const IldCurve& ref, const IldCurve& test) {
  if (ref.values_db.rows() != test.values_db.rows() ||
      ref.values_db.cols() != test.values_db.cols()) {
    throw ValidationError("ILD curves differ in shape");
  }
  return (ref.values_db - test.values_db).cwiseAbs();
}

Eigen::VectorXd IldErrorAveraged(const IldCurve& ref, const IldCurve& test) {
  return IldError(ref, test).rowwise().mean();
}

Eigen::MatrixXd MagError(const HrtfSet& ref, const ShHrtf& test, Ear ear) {
  if (!(ref.freqs == test.freqs)) {
    throw ValidationError("reference and test frequency grids differ");
  }
  const Eigen::MatrixXcd synth =
      IshtColumns(test.ear(ear), ref.grid.directions());
  const Eigen::MatrixXd diff = ref.ear(ear).cwiseAbs() - synth.cwiseAbs();
  return diff.cwiseAbs2();
}

std::vector<double> MagErrorDb(const HrtfSet& ref, const ShHrtf& test) {
  const Eigen::Map<const Eigen::VectorXd> w(ref.grid.weights().data(),
                                            ref.grid.size());
  Eigen::RowVectorXd num = Eigen::RowVectorXd::Zero(ref.freqs.size());
  Eigen::RowVectorXd den = Eigen::RowVectorXd::Zero(ref.freqs.size());
  for (Ear e : kEars) {
    num += w.transpose() * MagError(ref, test, e);
    den += w.transpose() * ref.ear(e).cwiseAbs2();
  }
  std::vector<double> out(ref.freqs.size());
  for (int f = 0; f < ref.freqs.size(); ++f) {
    // Floored at -300 dB so exact representations stay finite.
    out[f] = 10.0 * std::log10(std::max(num[f] / den[f], 1e-30));
  }
  return out;
}

}  // namespace imagls
