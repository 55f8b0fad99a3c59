#include "imagls/hrtf_model.h"

#include <cmath>
#include <sstream>

#include "imagls/errors.h"

namespace imagls {

namespace {

// b_n = (2n+1) i^(n-1) / ((ka)^2 h_n'(ka)) for n = 0..series_order, so that
// H(cos) = sum_n b_n P_n(cos).
std::vector<Complex> SeriesWeights(double ka, int series_order) {
  if (!(ka > 0.0)) throw ValidationError("ka must be positive (f = 0 Hz?)");
  std::vector<Complex> h(series_order + 2);
  for (int n = 0; n <= series_order + 1; ++n) {
    const unsigned un = static_cast<unsigned>(n);
    h[n] = Complex(std::sph_bessel(un, ka), -std::sph_neumann(un, ka));
  }
  std::vector<Complex> b(series_order + 1);
  const Complex kI(0.0, 1.0);
  Complex i_pow = -kI;  // i^(n-1) at n = 0
  for (int n = 0; n <= series_order; ++n) {
    const Complex dh = n == 0 ? -h[1] : h[n - 1] - (n + 1.0) / ka * h[n];
    b[n] = (2.0 * n + 1.0) * i_pow / (ka * ka * dh);
    i_pow *= kI;
  }
  return b;
}

Complex SumLegendreSeries(const std::vector<Complex>& b, double x) {
  double p0 = 1.0;
  double p1 = x;
  Complex sum = b[0];
  if (b.size() > 1) sum += b[1] * x;
  for (std::size_t n = 2; n < b.size(); ++n) {
    const double p2 = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
    sum += b[n] * p2;
    p0 = p1;
    p1 = p2;
  }
  return sum;
}

void CheckFinite(const Eigen::MatrixXcd& m, const char* what) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const Complex v = m.data()[i];
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw ValidationError(std::string(what) + " has non-finite entries");
    }
  }
}

}  // namespace

FrequencyGrid::FrequencyGrid(std::vector<double> freqs_hz)
    : freqs_hz_(std::move(freqs_hz)) {
  if (freqs_hz_.empty()) throw ValidationError("frequency grid is empty");
  for (std::size_t i = 0; i < freqs_hz_.size(); ++i) {
    if (!std::isfinite(freqs_hz_[i]) || freqs_hz_[i] <= 0.0) {
      throw ValidationError("frequencies must be finite and > 0 Hz");
    }
    if (i > 0 && freqs_hz_[i] <= freqs_hz_[i - 1]) {
      throw ValidationError("frequencies must be strictly increasing");
    }
  }
}

FrequencyGrid FrequencyGrid::Uniform(double start_hz, double step_hz,
                                     int count) {
  if (count < 1) throw ValidationError("frequency count must be >= 1");
  std::vector<double> f(count);
  for (int i = 0; i < count; ++i) f[i] = start_hz + i * step_hz;
  return FrequencyGrid(std::move(f));
}

std::vector<int> FrequencyGrid::BinsInRange(double lo_hz, double hi_hz) const {
  std::vector<int> bins;
  for (int i = 0; i < size(); ++i) {
    if (freqs_hz_[i] >= lo_hz && freqs_hz_[i] < hi_hz) bins.push_back(i);
  }
  return bins;
}

FrequencyGrid DefaultFrequencyGrid() {
  return FrequencyGrid::Uniform(187.5, 187.5, 96);
}

void HrtfSet::Validate() const {
  const Eigen::Index q = grid.size();
  const Eigen::Index f = freqs.size();
  if (left.rows() != q || right.rows() != q || left.cols() != f ||
      right.cols() != f) {
    std::ostringstream msg;
    msg << "HRTF matrices must be " << q << " x " << f;
    throw ValidationError(msg.str());
  }
  CheckFinite(left, "left HRTF");
  CheckFinite(right, "right HRTF");
  if (left.cwiseAbs().maxCoeff() > 1e6 || right.cwiseAbs().maxCoeff() > 1e6) {
    throw ValidationError("HRTF magnitude exceeds 1e6");
  }
}

std::string_view ProvenanceName(Provenance p) {
  switch (p) {
    case Provenance::kLs:
      return "LS";
    case Provenance::kMagLs:
      return "MagLS";
    case Provenance::kMagLsCc:
      return "MagLS_CC";
    case Provenance::kIMagLs:
      return "iMagLS";
    case Provenance::kTruncation:
      return "Truncation";
  }
  return "unknown";
}

Provenance ParseProvenance(std::string_view name) {
  for (Provenance p : {Provenance::kLs, Provenance::kMagLs, Provenance::kMagLsCc,
                       Provenance::kIMagLs, Provenance::kTruncation}) {
    if (ProvenanceName(p) == name) return p;
  }
  throw ValidationError("unknown provenance '" + std::string(name) + "'");
}

ShHrtf::ShHrtf(int order_in, FrequencyGrid freqs_in, Provenance provenance_in)
    : order(order_in),
      freqs(std::move(freqs_in)),
      left(Eigen::MatrixXcd::Zero(NumCoeffs(order_in), freqs.size())),
      right(Eigen::MatrixXcd::Zero(NumCoeffs(order_in), freqs.size())),
      provenance(provenance_in) {
  if (order < 0) throw ValidationError("SH order must be >= 0");
}

void ShHrtf::Validate() const {
  if (order < 0) throw ValidationError("SH order must be >= 0");
  const Eigen::Index k = NumCoeffs(order);
  const Eigen::Index f = freqs.size();
  if (left.rows() != k || right.rows() != k || left.cols() != f ||
      right.cols() != f) {
    throw ValidationError("SH-HRTF coefficient matrices do not match order");
  }
  CheckFinite(left, "left SH coefficients");
  CheckFinite(right, "right SH coefficients");
}

void SphereModelConfig::Validate(double max_freq_hz) const {
  if (!(radius_m > 0.0) || !std::isfinite(radius_m)) {
    throw ValidationError("sphere radius must be > 0");
  }
  if (!(speed_of_sound_mps > 0.0) || !std::isfinite(speed_of_sound_mps)) {
    throw ValidationError("speed of sound must be > 0");
  }
  if (series_order < 1) throw ValidationError("series order must be >= 1");
  ear_direction(Ear::kLeft);
  ear_direction(Ear::kRight);
  const double ka = 2.0 * kPi * max_freq_hz * radius_m / speed_of_sound_mps;
  const double tail = RigidSphereTailRatio(ka, series_order);
  if (!(tail < 1e-10)) {
    std::ostringstream msg;
    msg << "series order " << series_order << " too small for ka = " << ka
        << " (last term ratio " << tail << ")";
    throw ValidationError(msg.str());
  }
}

Complex RigidSphereResponse(double ka, double cos_angle, int series_order) {
  return SumLegendreSeries(SeriesWeights(ka, series_order), cos_angle);
}

double RigidSphereTailRatio(double ka, int series_order) {
  const std::vector<Complex> b = SeriesWeights(ka, series_order);
  Complex sum = 0.0;
  for (const Complex& v : b) sum += v;
  return std::abs(b.back()) / std::abs(sum);
}

HrtfSet RigidSphereHrtf(const SphereModelConfig& config,
                        const SphericalGrid& grid, const FrequencyGrid& freqs) {
  config.Validate(freqs.back());
  const int q_count = grid.size();
  const int f_count = freqs.size();
  std::array<std::vector<double>, 2> cos_angles;
  for (Ear e : kEars) {
    const Direction ear = config.ear_direction(e);
    auto& c = cos_angles[static_cast<int>(e)];
    c.resize(q_count);
    for (int q = 0; q < q_count; ++q) c[q] = grid.direction(q).CosAngleTo(ear);
  }
  HrtfSet out{grid, freqs, Eigen::MatrixXcd(q_count, f_count),
              Eigen::MatrixXcd(q_count, f_count), "rigid-sphere"};
#pragma omp parallel for schedule(static)
  for (int f = 0; f < f_count; ++f) {
    const double ka =
        2.0 * kPi * freqs[f] * config.radius_m / config.speed_of_sound_mps;
    const std::vector<Complex> b = SeriesWeights(ka, config.series_order);
    for (int q = 0; q < q_count; ++q) {
      out.left(q, f) = SumLegendreSeries(b, cos_angles[0][q]);
      out.right(q, f) = SumLegendreSeries(b, cos_angles[1][q]);
    }
  }
  return out;
}

std::array<std::vector<Complex>, 2> RigidSphereEars(
    const SphereModelConfig& config, const Direction& source,
    const FrequencyGrid& freqs) {
  config.Validate(freqs.back());
  const double cos_l = source.CosAngleTo(config.ear_direction(Ear::kLeft));
  const double cos_r = source.CosAngleTo(config.ear_direction(Ear::kRight));
  std::array<std::vector<Complex>, 2> out;
  out[0].resize(freqs.size());
  out[1].resize(freqs.size());
  for (int f = 0; f < freqs.size(); ++f) {
    const double ka =
        2.0 * kPi * freqs[f] * config.radius_m / config.speed_of_sound_mps;
    const std::vector<Complex> b = SeriesWeights(ka, config.series_order);
    out[0][f] = SumLegendreSeries(b, cos_l);
    out[1][f] = SumLegendreSeries(b, cos_r);
  }
  return out;
}

ShHrtf TruncateReference(const HrtfSet& ref, int order) {
  ShHrtf out(order, ref.freqs, Provenance::kTruncation);
  out.left = ShtColumns(ref.grid, ref.left, order);
  out.right = ShtColumns(ref.grid, ref.right, order);
  return out;
}

}  // namespace imagls
