#include "imagls/sh_core.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "imagls/errors.h"

namespace imagls {

namespace {

constexpr double kTwoPi = 2.0 * kPi;

int TriIndex(int n, int m) { return n * (n + 1) / 2 + m; }

// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1], nodes
// descending (so colatitudes ascend).
void GaussLegendre(int n, std::vector<double>* nodes,
                   std::vector<double>* weights) {
  nodes->assign(n, 0.0);
  weights->assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (n == 1) p0 = 1.0;
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    (*nodes)[i] = x;
    (*nodes)[n - 1 - i] = -x;
    (*weights)[i] = w;
    (*weights)[n - 1 - i] = w;
  }
  if (n % 2 == 1) (*nodes)[n / 2] = 0.0;
}

void CheckGram(const SphericalGrid& grid, int order) {
  const double dev = GramDeviation(grid, order);
  if (!(dev <= 1e-8)) {
    std::ostringstream msg;
    msg << "grid fails the orthonormality check at order " << order
        << " (max deviation " << dev << ")";
    throw GramCheckError(msg.str());
  }
}

}  // namespace

Direction::Direction(double azimuth, double colatitude) {
  if (!std::isfinite(azimuth) || !std::isfinite(colatitude)) {
    throw ValidationError("direction has non-finite angle");
  }
  if (colatitude < 0.0 || colatitude > kPi) {
    std::ostringstream msg;
    msg << "colatitude " << colatitude << " outside [0, pi]";
    throw ValidationError(msg.str());
  }
  double az = std::fmod(azimuth, kTwoPi);
  if (az < 0.0) az += kTwoPi;
  if (az >= kTwoPi) az = 0.0;
  azimuth_ = az;
  colatitude_ = colatitude;
}

double Direction::CosAngleTo(const Direction& other) const {
  const double s1 = std::sin(colatitude_);
  const double s2 = std::sin(other.colatitude_);
  const double c = s1 * s2 * std::cos(azimuth_ - other.azimuth_) +
                   std::cos(colatitude_) * std::cos(other.colatitude_);
  return std::clamp(c, -1.0, 1.0);
}

ShCoeffVec::ShCoeffVec(int order)
    : ShCoeffVec(order, Eigen::VectorXcd::Zero(NumCoeffs(order))) {}

ShCoeffVec::ShCoeffVec(int order, Eigen::VectorXcd coeffs)
    : order_(order), coeffs_(std::move(coeffs)) {
  if (order < 0) throw ValidationError("SH order must be >= 0");
  if (coeffs_.size() != NumCoeffs(order)) {
    throw ValidationError("coefficient count does not match (order+1)^2");
  }
}

SphericalGrid::SphericalGrid(std::vector<Direction> directions,
                             std::vector<double> weights, int max_exact_order)
    : directions_(std::move(directions)),
      weights_(std::move(weights)),
      max_exact_order_(max_exact_order) {
  if (directions_.empty()) throw ValidationError("grid has no directions");
  if (directions_.size() != weights_.size()) {
    throw ValidationError("grid directions and weights differ in length");
  }
  if (max_exact_order_ < -1) {
    throw ValidationError("grid max_exact_order must be >= -1");
  }
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ValidationError("grid weights must be finite and nonnegative");
    }
  }
  const double sum = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::abs(sum - kFourPi) > 1e-9 * kFourPi) {
    std::ostringstream msg;
    msg << std::setprecision(17) << "grid weights sum to " << sum
        << ", expected 4*pi";
    throw WeightSumError(msg.str());
  }
}

std::vector<double> NormalizedLegendre(int order, double colatitude) {
  std::vector<double> p(TriIndex(order, order) + 1, 0.0);
  const double x = std::cos(colatitude);
  const double s = std::sin(colatitude);
  p[0] = 1.0 / std::sqrt(kFourPi);
  for (int m = 1; m <= order; ++m) {
    p[TriIndex(m, m)] =
        -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * p[TriIndex(m - 1, m - 1)];
  }
  for (int m = 0; m < order; ++m) {
    p[TriIndex(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * p[TriIndex(m, m)];
  }
  for (int m = 0; m <= order; ++m) {
    for (int n = m + 2; n <= order; ++n) {
      const double nn = static_cast<double>(n) * n;
      const double mm = static_cast<double>(m) * m;
      const double a = std::sqrt((4.0 * nn - 1.0) / (nn - mm));
      const double b = std::sqrt(((n - 1.0) * (n - 1.0) - mm) /
                                 (4.0 * (n - 1.0) * (n - 1.0) - 1.0));
      p[TriIndex(n, m)] =
          a * (x * p[TriIndex(n - 1, m)] - b * p[TriIndex(n - 2, m)]);
    }
  }
  return p;
}

Complex ShBasis(int n, int m, const Direction& dir) {
  if (n < 0 || std::abs(m) > n) {
    std::ostringstream msg;
    msg << "invalid SH index (n=" << n << ", m=" << m << ")";
    throw ValidationError(msg.str());
  }
  const int am = std::abs(m);
  const double p = NormalizedLegendre(n, dir.colatitude())[TriIndex(n, am)];
  const Complex phase = std::polar(1.0, m * dir.azimuth());
  const double sign = (m < 0 && am % 2 == 1) ? -1.0 : 1.0;
  return sign * p * phase;
}

Eigen::VectorXcd ShBasisAll(int order, const Direction& dir) {
  Eigen::VectorXcd y(NumCoeffs(order));
  const std::vector<double> p = NormalizedLegendre(order, dir.colatitude());
  for (int m = 0; m <= order; ++m) {
    const Complex phase = std::polar(1.0, m * dir.azimuth());
    const double sign = (m % 2 == 1) ? -1.0 : 1.0;
    for (int n = m; n <= order; ++n) {
      const double pnm = p[TriIndex(n, m)];
      y[AcnIndex(n, m)] = pnm * phase;
      if (m > 0) y[AcnIndex(n, -m)] = sign * pnm * std::conj(phase);
    }
  }
  return y;
}

Eigen::MatrixXcd ShMatrix(int order, std::span<const Direction> dirs) {
  Eigen::MatrixXcd y(static_cast<Eigen::Index>(dirs.size()), NumCoeffs(order));
  for (std::size_t q = 0; q < dirs.size(); ++q) {
    y.row(static_cast<Eigen::Index>(q)) = ShBasisAll(order, dirs[q]).transpose();
  }
  return y;
}

ShCoeffVec Sht(const SphericalGrid& grid, std::span<const Complex> values,
               int order) {
  if (static_cast<int>(values.size()) != grid.size()) {
    throw ValidationError("sample count does not match grid size");
  }
  Eigen::MatrixXcd v(grid.size(), 1);
  for (int q = 0; q < grid.size(); ++q) v(q, 0) = values[q];
  return ShCoeffVec(order, ShtColumns(grid, v, order).col(0));
}

Eigen::MatrixXcd ShtColumns(const SphericalGrid& grid,
                            const Eigen::MatrixXcd& values, int order) {
  if (order < 0) throw ValidationError("SH order must be >= 0");
  if (order > grid.max_exact_order()) {
    std::ostringstream msg;
    msg << "order " << order << " exceeds the grid's exact order "
        << grid.max_exact_order();
    throw ValidationError(msg.str());
  }
  if (values.rows() != grid.size()) {
    throw ValidationError("sample rows do not match grid size");
  }
  const Eigen::MatrixXcd y = ShMatrix(order, grid.directions());
  const Eigen::Map<const Eigen::VectorXd> w(grid.weights().data(), grid.size());
  return y.adjoint() * (w.cast<Complex>().asDiagonal() * values);
}

std::vector<Complex> Isht(const ShCoeffVec& coeffs,
                          std::span<const Direction> dirs) {
  std::vector<Complex> out(dirs.size());
  for (std::size_t q = 0; q < dirs.size(); ++q) {
    out[q] = ShBasisAll(coeffs.order(), dirs[q]).cwiseProduct(coeffs.coeffs()).sum();
  }
  return out;
}

Eigen::MatrixXcd IshtColumns(const Eigen::MatrixXcd& coeffs,
                             std::span<const Direction> dirs) {
  const int k = static_cast<int>(coeffs.rows());
  const int order = static_cast<int>(std::lround(std::sqrt(k))) - 1;
  if (NumCoeffs(order) != k) {
    throw ValidationError("coefficient rows are not a square count");
  }
  return ShMatrix(order, dirs) * coeffs;
}

double GramDeviation(const SphericalGrid& grid, int order) {
  const Eigen::MatrixXcd y = ShMatrix(order, grid.directions());
  const Eigen::Map<const Eigen::VectorXd> w(grid.weights().data(), grid.size());
  Eigen::MatrixXcd g = y.adjoint() * (w.cast<Complex>().asDiagonal() * y);
  g -= Eigen::MatrixXcd::Identity(g.rows(), g.cols());
  return g.cwiseAbs().maxCoeff();
}

SphericalGrid GaussGrid(int order) {
  if (order < 0) throw ValidationError("grid order must be >= 0");
  const int n_col = order + 1;
  const int n_az = 2 * order + 2;
  std::vector<double> nodes;
  std::vector<double> gl_weights;
  GaussLegendre(n_col, &nodes, &gl_weights);
  std::vector<Direction> dirs;
  std::vector<double> weights;
  dirs.reserve(n_col * n_az);
  weights.reserve(n_col * n_az);
  for (int i = 0; i < n_col; ++i) {
    const double col = std::acos(std::clamp(nodes[i], -1.0, 1.0));
    for (int j = 0; j < n_az; ++j) {
      dirs.emplace_back(kTwoPi * j / n_az, col);
      weights.push_back(gl_weights[i] * kTwoPi / n_az);
    }
  }
  return SphericalGrid(std::move(dirs), std::move(weights), order);
}

SphericalGrid ParseGrid(std::istream& in, bool full_gram_check) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("grid file is empty");
  std::istringstream header(line);
  std::string magic;
  std::string version;
  long long count = -1;
  int order = -2;
  if (!(header >> magic >> version >> count >> order) || magic != "sphgrid" ||
      version != "v1" || count < 1 || order < -1) {
    throw ParseError("bad grid header, expected 'sphgrid v1 <Q> <order>'");
  }
  std::vector<Direction> dirs;
  std::vector<double> weights;
  dirs.reserve(count);
  weights.reserve(count);
  for (long long q = 0; q < count; ++q) {
    if (!std::getline(in, line)) {
      throw ParseError("grid file ends after " + std::to_string(q) + " of " +
                       std::to_string(count) + " points");
    }
    std::istringstream row(line);
    double az = 0.0;
    double col = 0.0;
    double w = 0.0;
    std::string rest;
    if (!(row >> az >> col >> w) || (row >> rest)) {
      throw ParseError("malformed grid line " + std::to_string(q + 2));
    }
    try {
      dirs.emplace_back(az, col);
    } catch (const ValidationError& e) {
      throw ParseError("grid line " + std::to_string(q + 2) + ": " + e.what());
    }
    weights.push_back(w);
  }
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      throw ParseError("trailing data after the declared grid points");
    }
  }
  SphericalGrid grid(std::move(dirs), std::move(weights), order);
  if (order >= 0) CheckGram(grid, full_gram_check ? order : std::min(order, 10));
  return grid;
}

SphericalGrid LoadGrid(const std::filesystem::path& path, bool full_gram_check) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open grid file " + path.string());
  return ParseGrid(in, full_gram_check);
}

void WriteGrid(const SphericalGrid& grid, std::ostream& out) {
  out << "sphgrid v1 " << grid.size() << ' ' << grid.max_exact_order() << '\n';
  out << std::setprecision(17);
  for (int q = 0; q < grid.size(); ++q) {
    out << grid.direction(q).azimuth() << ' ' << grid.direction(q).colatitude()
        << ' ' << grid.weight(q) << '\n';
  }
}

}  // namespace imagls
