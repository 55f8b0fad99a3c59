// Plain single-threaded evaluation of the iMagLS objective. Kept as the
// reference the OpenMP kernel is tested and benchmarked against.

#include <cmath>
#include <vector>

#include "imagls/loss_kernel.h"

namespace imagls::serial_reference {

LossTerms EvaluateLoss(const ImaglsProblem& problem, std::span<const double> x,
                       double lambda, std::span<double> grad) {
  const ParamPacking& pk = problem.packing;
  const int k_count = pk.num_coeffs();
  const int b_count = pk.num_band_bins();
  const int q_count = problem.num_dirs;
  const int a_count = problem.num_azimuths;
  const int c_count = problem.num_centers;
  const int j_count = static_cast<int>(problem.ild_bins.size());
  const bool want_grad = !grad.empty();

  auto coeff = [&](int e, int b, int k) {
    const int o = pk.Offset(kEars[e], b, k);
    return Complex(x[o], x[o + 1]);
  };
  auto add_grad = [&](int e, int b, int k, Complex d) {
    const int o = pk.Offset(kEars[e], b, k);
    grad[o] += d.real();
    grad[o + 1] += d.imag();
  };
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

  LossTerms terms;
  for (int e = 0; e < 2; ++e) {
    for (int q = 0; q < q_count; ++q) {
      const double w = problem.quad_weights[q];
      for (int b = 0; b < b_count; ++b) {
        Complex y(0.0);
        for (int k = 0; k < k_count; ++k) {
          y += problem.grid_basis[q * k_count + k] * coeff(e, b, k);
        }
        const double target =
            problem.target_mag[(e * b_count + b) * q_count + q];
        const double diff = std::abs(y) - target;
        terms.mag += w * diff * diff / b_count;
        if (want_grad && std::abs(y) > 0.0) {
          const Complex g = 2.0 * w * diff / (b_count * std::abs(y)) * y;
          for (int k = 0; k < k_count; ++k) {
            add_grad(e, b, k, std::conj(problem.grid_basis[q * k_count + k]) * g);
          }
        }
      }
    }
  }
  if (!problem.include_ild) {
    terms.total = terms.mag;
    return terms;
  }

  // Horizontal-plane responses for every ILD bin: p[e][j][a].
  std::vector<Complex> p(2 * j_count * a_count);
  for (int e = 0; e < 2; ++e) {
    for (int j = 0; j < j_count; ++j) {
      const int b = problem.ild_band_pos[j];
      for (int a = 0; a < a_count; ++a) {
        Complex v(0.0);
        if (b >= 0) {
          for (int k = 0; k < k_count; ++k) {
            v += problem.az_basis[a * k_count + k] * coeff(e, b, k);
          }
        } else {
          v = problem.fixed_az_response[(e * j_count + j) * a_count + a];
        }
        p[(e * j_count + j) * a_count + a] = v;
      }
    }
  }

  const double eps = problem.smooth_eps_db;
  const double db_per_neper = 10.0 / std::log(10.0);
  for (int a = 0; a < a_count; ++a) {
    for (int c = 0; c < c_count; ++c) {
      double energy[2] = {0.0, 0.0};
      for (int e = 0; e < 2; ++e) {
        for (int j = 0; j < j_count; ++j) {
          energy[e] += problem.band_weights[c * j_count + j] *
                       std::norm(p[(e * j_count + j) * a_count + a]);
        }
      }
      if (!(energy[0] > 0.0) || !(energy[1] > 0.0)) {
        terms.degenerate = true;
        terms.ild = kDegeneratePenalty;
        terms.total = kDegeneratePenalty;
        if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
        return terms;
      }
      const double ild = 10.0 * std::log10(energy[0] / energy[1]);
      const double u = problem.ref_ild_db[a * c_count + c] - ild;
      const double root = std::sqrt(u * u + eps * eps);
      terms.ild += (root - eps) / c_count;
      if (!want_grad) continue;
      const double d_ild = -lambda * u / (c_count * root);
      for (int e = 0; e < 2; ++e) {
        const double sign = e == 0 ? 1.0 : -1.0;
        for (int j = 0; j < j_count; ++j) {
          const int b = problem.ild_band_pos[j];
          if (b < 0) continue;
          const double d_pow = d_ild * sign * db_per_neper / energy[e] *
                               problem.band_weights[c * j_count + j];
          const Complex g = 2.0 * d_pow * p[(e * j_count + j) * a_count + a];
          for (int k = 0; k < k_count; ++k) {
            add_grad(e, b, k, std::conj(problem.az_basis[a * k_count + k]) * g);
          }
        }
      }
    }
  }
  terms.total = terms.mag + lambda * terms.ild;
  return terms;
}

}  // namespace imagls::serial_reference
