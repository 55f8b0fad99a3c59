#ifndef IMAGLS_SH_CORE_H_
#define IMAGLS_SH_CORE_H_

// Complex spherical harmonics, quadrature grids and the forward/inverse
// transforms between direction samples and SH coefficients.
//
// Conventions: orthonormal complex harmonics with the Condon-Shortley phase,
//   Y_n^m(az, col) = N_nm P_n^m(cos col) exp(i m az),
// ACN channel ordering (index = n^2 + n + m) and quadrature weights that sum
// to 4*pi, so Sht() is the discrete surface integral with no hidden factors.

#include <complex>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace imagls {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kFourPi = 4.0 * kPi;

inline constexpr int NumCoeffs(int order) { return (order + 1) * (order + 1); }
inline constexpr int AcnIndex(int n, int m) { return n * n + n + m; }

// A point on the unit sphere. Azimuth is wrapped into [0, 2*pi); colatitude
// outside [0, pi] is rejected with ValidationError.
class Direction {
 public:
  Direction() = default;
  Direction(double azimuth, double colatitude);

  double azimuth() const { return azimuth_; }
  double colatitude() const { return colatitude_; }

  // Cosine of the great-circle angle to `other`.
  double CosAngleTo(const Direction& other) const;

 private:
  double azimuth_ = 0.0;
  double colatitude_ = 0.0;
};

// Coefficients of one order-N function in ACN order.
class ShCoeffVec {
 public:
  explicit ShCoeffVec(int order);
  ShCoeffVec(int order, Eigen::VectorXcd coeffs);

  int order() const { return order_; }
  const Eigen::VectorXcd& coeffs() const { return coeffs_; }
  Eigen::VectorXcd& coeffs() { return coeffs_; }
  Complex operator()(int n, int m) const { return coeffs_[AcnIndex(n, m)]; }
  Complex& operator()(int n, int m) { return coeffs_[AcnIndex(n, m)]; }

 private:
  int order_;
  Eigen::VectorXcd coeffs_;
};

// Directions with quadrature weights. `max_exact_order` is the highest SH
// order whose pairwise products the weights integrate exactly; -1 marks a
// plain sampling (weights only usable for averaging, no SH analysis).
class SphericalGrid {
 public:
  SphericalGrid(std::vector<Direction> directions, std::vector<double> weights,
                int max_exact_order);

  int size() const { return static_cast<int>(directions_.size()); }
  const std::vector<Direction>& directions() const { return directions_; }
  const std::vector<double>& weights() const { return weights_; }
  const Direction& direction(int q) const { return directions_[q]; }
  double weight(int q) const { return weights_[q]; }
  int max_exact_order() const { return max_exact_order_; }
  bool is_quadrature() const { return max_exact_order_ >= 0; }

 private:
  std::vector<Direction> directions_;
  std::vector<double> weights_;
  int max_exact_order_;
};

// Orthonormal associated Legendre values P̄_n^m(cos colatitude) for
// 0 <= m <= n <= order, including the Condon-Shortley phase and the
// sqrt((2n+1)/(4 pi) (n-m)!/(n+m)!) factor. Indexed [n*(n+1)/2 + m].
std::vector<double> NormalizedLegendre(int order, double colatitude);

Complex ShBasis(int n, int m, const Direction& dir);

// All (order+1)^2 harmonics at `dir`, ACN order.
Eigen::VectorXcd ShBasisAll(int order, const Direction& dir);

// Q x (order+1)^2 matrix of harmonics sampled at `dirs`.
Eigen::MatrixXcd ShMatrix(int order, std::span<const Direction> dirs);

ShCoeffVec Sht(const SphericalGrid& grid, std::span<const Complex> values,
               int order);

// Column-wise transform of a Q x F sample matrix; returns (order+1)^2 x F.
Eigen::MatrixXcd ShtColumns(const SphericalGrid& grid,
                            const Eigen::MatrixXcd& values, int order);

std::vector<Complex> Isht(const ShCoeffVec& coeffs,
                          std::span<const Direction> dirs);

// Column-wise synthesis of a K x F coefficient matrix; returns Q x F.
Eigen::MatrixXcd IshtColumns(const Eigen::MatrixXcd& coeffs,
                             std::span<const Direction> dirs);

// Largest |G - I| entry of the discrete Gram matrix up to `order`.
double GramDeviation(const SphericalGrid& grid, int order);

// Gauss-Legendre colatitudes x uniform azimuths: (order+1) x (2*order+2)
// points, exact to `order`.
SphericalGrid GaussGrid(int order);

// Reads a `sphgrid v1` file. The declared order is verified by the Gram
// check up to min(declared, 10), or fully when `full_gram_check` is set.
SphericalGrid LoadGrid(const std::filesystem::path& path,
                       bool full_gram_check = false);
SphericalGrid ParseGrid(std::istream& in, bool full_gram_check = false);
void WriteGrid(const SphericalGrid& grid, std::ostream& out);

}  // namespace imagls

#endif  // IMAGLS_SH_CORE_H_
