#include "imagls/loss_kernel.h"

#include <cmath>
#include <sstream>

#include "imagls/baseline_renderers.h"
#include "imagls/errors.h"

namespace imagls {

namespace {

constexpr double kDbPerNeper = 10.0 / 2.302585092994045684;  // 10 / ln 10

void CheckSizes(const ImaglsProblem& problem, std::span<const double> x,
                std::span<double> grad) {
  if (static_cast<int>(x.size()) != problem.packing.size()) {
    throw ValidationError("parameter vector does not match the packing");
  }
  if (!grad.empty() && grad.size() != x.size()) {
    throw ValidationError("gradient buffer does not match the packing");
  }
}

}  // namespace

ParamPacking::ParamPacking(int order, std::vector<int> band_bins)
    : order_(order),
      num_coeffs_(NumCoeffs(order)),
      band_bins_(std::move(band_bins)) {
  if (order < 0) throw ValidationError("SH order must be >= 0");
  if (band_bins_.empty()) throw ValidationError("optimization band is empty");
}

Eigen::VectorXd ParamPacking::Pack(const ShHrtf& hrtf) const {
  if (hrtf.order != order_) throw ValidationError("packing order mismatch");
  Eigen::VectorXd x(size());
  for (Ear e : kEars) {
    const Eigen::MatrixXcd& c = hrtf.ear(e);
    for (int b = 0; b < num_band_bins(); ++b) {
      for (int k = 0; k < num_coeffs_; ++k) {
        const int o = Offset(e, b, k);
        x[o] = c(k, band_bins_[b]).real();
        x[o + 1] = c(k, band_bins_[b]).imag();
      }
    }
  }
  return x;
}

void ParamPacking::Unpack(std::span<const double> x, ShHrtf* hrtf) const {
  if (hrtf->order != order_) throw ValidationError("packing order mismatch");
  if (static_cast<int>(x.size()) != size()) {
    throw ValidationError("parameter vector does not match the packing");
  }
  for (Ear e : kEars) {
    Eigen::MatrixXcd& c = hrtf->ear(e);
    for (int b = 0; b < num_band_bins(); ++b) {
      for (int k = 0; k < num_coeffs_; ++k) {
        const int o = Offset(e, b, k);
        c(k, band_bins_[b]) = Complex(x[o], x[o + 1]);
      }
    }
  }
}

ImaglsProblem ImaglsProblem::Build(const HrtfSet& ref, const ShHrtf& init,
                                   const std::vector<int>& band_bins,
                                   const GammatoneBank& bank,
                                   std::span<const double> azimuths,
                                   const IldCurve& ref_ild,
                                   double smooth_eps_db, bool include_ild) {
  if (!(init.freqs == ref.freqs) || !(bank.freqs() == ref.freqs)) {
    throw ValidationError("reference, initial solution and bank grids differ");
  }
  if (!(smooth_eps_db > 0.0)) throw ValidationError("smooth_eps_db must be > 0");
  const int a_count = static_cast<int>(azimuths.size());
  if (include_ild &&
      (ref_ild.frequency_averaged || ref_ild.values_db.rows() != a_count ||
       ref_ild.values_db.cols() != bank.num_centers())) {
    throw ValidationError("reference ILD must be azimuths x centers");
  }

  ImaglsProblem p(ParamPacking(init.order, band_bins));
  const int k_count = p.packing.num_coeffs();
  const int q_count = ref.grid.size();
  const int b_count = p.packing.num_band_bins();
  p.num_dirs = q_count;
  p.num_azimuths = a_count;
  p.num_centers = bank.num_centers();
  p.smooth_eps_db = smooth_eps_db;
  p.include_ild = include_ild;

  p.quad_weights = ref.grid.weights();
  const Eigen::MatrixXcd y = ShMatrix(init.order, ref.grid.directions());
  p.grid_basis.resize(static_cast<std::size_t>(q_count) * k_count);
  for (int q = 0; q < q_count; ++q) {
    for (int k = 0; k < k_count; ++k) p.grid_basis[q * k_count + k] = y(q, k);
  }
  p.target_mag.resize(2 * static_cast<std::size_t>(b_count) * q_count);
  for (Ear e : kEars) {
    for (int b = 0; b < b_count; ++b) {
      for (int q = 0; q < q_count; ++q) {
        p.target_mag[(static_cast<int>(e) * b_count + b) * q_count + q] =
            std::abs(ref.ear(e)(q, band_bins[b]));
      }
    }
  }

  std::vector<Direction> az_dirs;
  for (double az : azimuths) az_dirs.emplace_back(az, kPi / 2.0);
  const Eigen::MatrixXcd y_az = ShMatrix(init.order, az_dirs);
  p.az_basis.resize(static_cast<std::size_t>(a_count) * k_count);
  for (int a = 0; a < a_count; ++a) {
    for (int k = 0; k < k_count; ++k) p.az_basis[a * k_count + k] = y_az(a, k);
  }

  if (!include_ild) return p;

  std::vector<int> pos_of_bin(ref.freqs.size(), -1);
  for (int b = 0; b < b_count; ++b) pos_of_bin[band_bins[b]] = b;
  for (int f = 0; f < ref.freqs.size(); ++f) {
    if (bank.band_weights().col(f).cwiseAbs().maxCoeff() > 0.0) {
      p.ild_bins.push_back(f);
      p.ild_band_pos.push_back(pos_of_bin[f]);
    }
  }
  const int j_count = static_cast<int>(p.ild_bins.size());
  p.band_ild_index.assign(b_count, -1);
  for (int j = 0; j < j_count; ++j) {
    if (p.ild_band_pos[j] >= 0) p.band_ild_index[p.ild_band_pos[j]] = j;
  }
  const Eigen::MatrixXcd fixed_l = y_az * init.left;
  const Eigen::MatrixXcd fixed_r = y_az * init.right;
  p.fixed_az_response.assign(2 * static_cast<std::size_t>(j_count) * a_count,
                             Complex(0.0));
  for (int j = 0; j < j_count; ++j) {
    if (p.ild_band_pos[j] >= 0) continue;
    for (int a = 0; a < a_count; ++a) {
      p.fixed_az_response[(0 * j_count + j) * a_count + a] =
          fixed_l(a, p.ild_bins[j]);
      p.fixed_az_response[(1 * j_count + j) * a_count + a] =
          fixed_r(a, p.ild_bins[j]);
    }
  }
  p.band_weights.resize(static_cast<std::size_t>(p.num_centers) * j_count);
  for (int c = 0; c < p.num_centers; ++c) {
    for (int j = 0; j < j_count; ++j) {
      p.band_weights[c * j_count + j] = bank.band_weights()(c, p.ild_bins[j]);
    }
  }
  p.ref_ild_db.resize(static_cast<std::size_t>(a_count) * p.num_centers);
  for (int a = 0; a < a_count; ++a) {
    for (int c = 0; c < p.num_centers; ++c) {
      p.ref_ild_db[a * p.num_centers + c] = ref_ild.values_db(a, c);
    }
  }
  return p;
}

LossTerms EvaluateLoss(const ImaglsProblem& problem, std::span<const double> x,
                       double lambda, std::span<double> grad,
                       ExecutionPolicy policy) {
  CheckSizes(problem, x, grad);
  if (policy == ExecutionPolicy::kSerial) {
    return serial_reference::EvaluateLoss(problem, x, lambda, grad);
  }
  const ParamPacking& pk = problem.packing;
  const int k_count = pk.num_coeffs();
  const int b_count = pk.num_band_bins();
  const int q_count = problem.num_dirs;
  const int a_count = problem.num_azimuths;
  const int c_count = problem.num_centers;
  const bool want_grad = !grad.empty();
  const bool use_ild = problem.include_ild;
  const double inv_bins = 1.0 / b_count;

  // Phase 1: per band bin, magnitude term, its gradient and the
  // horizontal-plane responses [ear][band_pos][a].
  std::vector<double> mag_part(b_count, 0.0);
  std::vector<Complex> az_resp(use_ild ? 2 * b_count * a_count : 0);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < b_count; ++b) {
    for (int e = 0; e < 2; ++e) {
      const Ear ear = kEars[e];
      const double* xc = x.data() + pk.Offset(ear, b, 0);
      double* gc = want_grad ? grad.data() + pk.Offset(ear, b, 0) : nullptr;
      if (gc != nullptr) std::fill(gc, gc + 2 * k_count, 0.0);
      const double* target = problem.target_mag.data() +
                             static_cast<std::size_t>(e * b_count + b) * q_count;
      double acc = 0.0;
      for (int q = 0; q < q_count; ++q) {
        const Complex* yq = problem.grid_basis.data() + q * k_count;
        Complex s(0.0);
        for (int k = 0; k < k_count; ++k) {
          s += yq[k] * Complex(xc[2 * k], xc[2 * k + 1]);
        }
        const double mag = std::abs(s);
        const double diff = mag - target[q];
        acc += problem.quad_weights[q] * diff * diff;
        if (gc != nullptr && mag > 0.0) {
          const Complex g = (2.0 * problem.quad_weights[q] * inv_bins * diff /
                             mag) * s;
          for (int k = 0; k < k_count; ++k) {
            const Complex d = std::conj(yq[k]) * g;
            gc[2 * k] += d.real();
            gc[2 * k + 1] += d.imag();
          }
        }
      }
      mag_part[b] += acc * inv_bins;
      if (use_ild) {
        Complex* out = az_resp.data() + (e * b_count + b) * a_count;
        for (int a = 0; a < a_count; ++a) {
          const Complex* ya = problem.az_basis.data() + a * k_count;
          Complex s(0.0);
          for (int k = 0; k < k_count; ++k) {
            s += ya[k] * Complex(xc[2 * k], xc[2 * k + 1]);
          }
          out[a] = s;
        }
      }
    }
  }
  LossTerms terms;
  for (double m : mag_part) terms.mag += m;
  if (!use_ild) {
    terms.total = terms.mag;
    return terms;
  }

  // Phase 2: per azimuth, band energies, ILD term and dTotal/dE factors.
  const int j_count = static_cast<int>(problem.ild_bins.size());
  const double eps = problem.smooth_eps_db;
  std::vector<double> ild_part(a_count, 0.0);
  std::vector<char> degenerate(a_count, 0);
  std::vector<double> dcoef(want_grad ? 2 * a_count * c_count : 0);
  auto response = [&](int e, int j, int a) {
    const int b = problem.ild_band_pos[j];
    return b >= 0 ? az_resp[(e * b_count + b) * a_count + a]
                  : problem.fixed_az_response[(e * j_count + j) * a_count + a];
  };
#pragma omp parallel for schedule(static)
  for (int a = 0; a < a_count; ++a) {
    for (int c = 0; c < c_count; ++c) {
      const double* t = problem.band_weights.data() + c * j_count;
      double e_l = 0.0;
      double e_r = 0.0;
      for (int j = 0; j < j_count; ++j) {
        e_l += t[j] * std::norm(response(0, j, a));
        e_r += t[j] * std::norm(response(1, j, a));
      }
      if (!(e_l > 0.0) || !(e_r > 0.0)) {
        degenerate[a] = 1;
        continue;
      }
      const double ild = kDbPerNeper * std::log(e_l / e_r);
      const double u = problem.ref_ild_db[a * c_count + c] - ild;
      const double root = std::sqrt(u * u + eps * eps);
      ild_part[a] += (root - eps) / c_count;
      if (want_grad) {
        // d total / d ILD = -lambda u / (C root); d ILD / d E = +-k / E.
        const double d_ild = -lambda * u / (c_count * root) * kDbPerNeper;
        dcoef[(0 * a_count + a) * c_count + c] = d_ild / e_l;
        dcoef[(1 * a_count + a) * c_count + c] = -d_ild / e_r;
      }
    }
  }
  for (int a = 0; a < a_count; ++a) {
    if (degenerate[a]) {
      terms.degenerate = true;
      terms.ild = kDegeneratePenalty;
      terms.total = kDegeneratePenalty;
      if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
      return terms;
    }
    terms.ild += ild_part[a];
  }
  terms.total = terms.mag + lambda * terms.ild;
  if (!want_grad) return terms;

  // Phase 3: chain the ILD factors back to each band bin's coefficients.
#pragma omp parallel for schedule(static)
  for (int b = 0; b < b_count; ++b) {
    const int j = problem.band_ild_index[b];
    if (j < 0) continue;
    for (int e = 0; e < 2; ++e) {
      double* gc = grad.data() + pk.Offset(kEars[e], b, 0);
      const Complex* resp = az_resp.data() + (e * b_count + b) * a_count;
      for (int a = 0; a < a_count; ++a) {
        const double* dc = dcoef.data() + (e * a_count + a) * c_count;
        double w = 0.0;
        for (int c = 0; c < c_count; ++c) {
          w += dc[c] * problem.band_weights[c * j_count + j];
        }
        const Complex g = 2.0 * w * resp[a];
        const Complex* ya = problem.az_basis.data() + a * k_count;
        for (int k = 0; k < k_count; ++k) {
          const Complex d = std::conj(ya[k]) * g;
          gc[2 * k] += d.real();
          gc[2 * k + 1] += d.imag();
        }
      }
    }
  }
  return terms;
}

}  // namespace imagls
