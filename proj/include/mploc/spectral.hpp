#pragma once

#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "mploc/model.hpp"

// Dense eigendecomposition, Green functions via sparse resolvent solves
// or the eigenbasis, time-evolution kernels restricted to an energy
// window, and extraction of configurations carrying non-negligible
// eigenprojection weight.

namespace mploc {

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  static Interval all() { return {}; }
  static Interval of(double a, double b) { return {a, b}; }
  bool contains(double e) const { return e >= lo && e <= hi; }
  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
  double length() const { return hi - lo; }
};

// Eigenvalues ascending, orthonormal eigenvector columns, and maximal
// groups of indices whose eigenvalues chain within the gap tolerance
// 1e-9 * max(1, spectral radius). The correlator weighs projections per
// group, so exactly degenerate levels must share one.
struct EigenSystem {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  std::vector<std::pair<int, int>> degeneracy_groups;  // [begin, end) ranges

  int dim() const { return static_cast<int>(eigenvalues.size()); }
  double spectral_radius() const;
  double group_energy(int g) const;  // mean eigenvalue of the group
  // <delta_x P_g delta_y> for degeneracy group g.
  double projection(int g, int ix, int iy) const;
};

inline constexpr std::size_t kDenseCap = 4096;

EigenSystem diagonalize_dense(const Eigen::MatrixXd& h);
EigenSystem diagonalize(const OperatorMatrix& op, std::size_t dense_cap = kDenseCap);

// <delta_x, (H - z)^{-1} delta_y> by sparse direct solve (iterative
// fallback for very large matrices). Requires Im z != 0 or real z at
// distance > 1e-12 from the spectrum; a near-singular solve is reported.
std::complex<double> green(const OperatorMatrix& op, const Configuration& x,
                           const Configuration& y, std::complex<double> z);
std::complex<double> green(const OperatorMatrix& op, std::size_t ix, std::size_t iy,
                           std::complex<double> z);

// Same matrix element through the eigen-expansion.
std::complex<double> green(const EigenSystem& es, int ix, int iy, std::complex<double> z);

// Solves (H - z) u = delta_y once and exposes every row: the column of
// Green values G(., y; z).
Eigen::VectorXcd green_column(const OperatorMatrix& op, std::size_t iy,
                              std::complex<double> z);

// <delta_x, P_I(H) e^{-itH} delta_y>. Window membership is decided per
// exact eigenvalue.
std::complex<double> evolve_kernel(const EigenSystem& es, int ix, int iy, Interval I,
                                   double t);

// Configurations y with <delta_y P_E delta_y> above the polynomial
// threshold (1+|y|)^{-(nd+1)} normalized over the finite volume. E must
// lie within grouping tolerance of the spectrum; never empty.
std::vector<Configuration> representative_configs(const EigenSystem& es, double E,
                                                  const OperatorMatrix& op);

void write_spectrum_csv(const EigenSystem& es, const std::string& path);

}  // namespace mploc
