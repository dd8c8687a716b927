#include "mploc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

namespace mploc {

double EigenSystem::spectral_radius() const {
  if (eigenvalues.size() == 0) return 0.0;
  return std::max(std::abs(eigenvalues[0]), std::abs(eigenvalues[eigenvalues.size() - 1]));
}

double EigenSystem::group_energy(int g) const {
  const auto [b, e] = degeneracy_groups[static_cast<std::size_t>(g)];
  double s = 0.0;
  for (int i = b; i < e; ++i) s += eigenvalues[i];
  return s / (e - b);
}

double EigenSystem::projection(int g, int ix, int iy) const {
  const auto [b, e] = degeneracy_groups[static_cast<std::size_t>(g)];
  double s = 0.0;
  for (int i = b; i < e; ++i) s += eigenvectors(ix, i) * eigenvectors(iy, i);
  return s;
}

namespace {

std::vector<std::pair<int, int>> group_by_gap(const Eigen::VectorXd& ev, double tol) {
  std::vector<std::pair<int, int>> groups;
  const int n = static_cast<int>(ev.size());
  int begin = 0;
  for (int i = 1; i <= n; ++i) {
    if (i == n || ev[i] - ev[i - 1] > tol) {
      groups.emplace_back(begin, i);
      begin = i;
    }
  }
  return groups;
}

}  // namespace

EigenSystem diagonalize_dense(const Eigen::MatrixXd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("diagonalize: eigensolver failed to converge");
  EigenSystem es;
  es.eigenvalues = solver.eigenvalues();
  es.eigenvectors = solver.eigenvectors();
  const double tol = 1e-9 * std::max(1.0, es.spectral_radius());
  es.degeneracy_groups = group_by_gap(es.eigenvalues, tol);
  return es;
}

EigenSystem diagonalize(const OperatorMatrix& op, std::size_t dense_cap) {
  if (op.dim() > dense_cap)
    throw std::invalid_argument("diagonalize: dimension exceeds dense cap");
  return diagonalize_dense(op.dense());
}

namespace {

constexpr std::size_t kDirectSolveNnzCap = 200000;

Eigen::VectorXcd solve_shifted(const OperatorMatrix& op, std::size_t iy,
                               std::complex<double> z) {
  using SpMatC = Eigen::SparseMatrix<std::complex<double>>;
  const auto dim = static_cast<Eigen::Index>(op.dim());
  SpMatC a = op.matrix().cast<std::complex<double>>();
  for (Eigen::Index i = 0; i < dim; ++i) a.coeffRef(i, i) -= z;
  a.makeCompressed();
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(dim);
  rhs[static_cast<Eigen::Index>(iy)] = 1.0;
  Eigen::VectorXcd u;
  if (static_cast<std::size_t>(a.nonZeros()) <= kDirectSolveNnzCap) {
    Eigen::SparseLU<SpMatC> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success)
      throw std::runtime_error("green: factorization failed (z too close to spectrum?)");
    u = lu.solve(rhs);
  } else {
    Eigen::BiCGSTAB<SpMatC, Eigen::DiagonalPreconditioner<std::complex<double>>> it;
    it.setTolerance(1e-12);
    it.setMaxIterations(20000);
    it.compute(a);
    u = it.solve(rhs);
    if (it.info() != Eigen::Success)
      throw std::runtime_error("green: iterative solve did not converge");
  }
  const double resid = (a * u - rhs).norm();
  if (!(resid <= 1e-10 * std::max(1.0, u.norm())))
    throw std::runtime_error("green: solve residual too large (z within spectrum?)");
  // 1/||u|| estimates the distance from z to the spectrum
  if (!(u.norm() < 1e12))
    throw std::runtime_error("green: z within 1e-12 of the spectrum");
  return u;
}

}  // namespace

Eigen::VectorXcd green_column(const OperatorMatrix& op, std::size_t iy,
                              std::complex<double> z) {
  return solve_shifted(op, iy, z);
}

std::complex<double> green(const OperatorMatrix& op, std::size_t ix, std::size_t iy,
                           std::complex<double> z) {
  return solve_shifted(op, iy, z)[static_cast<Eigen::Index>(ix)];
}

std::complex<double> green(const OperatorMatrix& op, const Configuration& x,
                           const Configuration& y, std::complex<double> z) {
  return green(op, op.index_of(x), op.index_of(y), z);
}

std::complex<double> green(const EigenSystem& es, int ix, int iy, std::complex<double> z) {
  std::complex<double> acc = 0.0;
  for (int i = 0; i < es.dim(); ++i) {
    const double w = es.eigenvectors(ix, i) * es.eigenvectors(iy, i);
    acc += w / (es.eigenvalues[i] - z);
  }
  return acc;
}

std::complex<double> evolve_kernel(const EigenSystem& es, int ix, int iy, Interval I,
                                   double t) {
  std::complex<double> acc = 0.0;
  for (int i = 0; i < es.dim(); ++i) {
    const double e = es.eigenvalues[i];
    if (!I.contains(e)) continue;
    const double w = es.eigenvectors(ix, i) * es.eigenvectors(iy, i);
    acc += std::polar(w, -t * e);
  }
  return acc;
}

std::vector<Configuration> representative_configs(const EigenSystem& es, double E,
                                                  const OperatorMatrix& op) {
  const double tol = 1e-9 * std::max(1.0, es.spectral_radius());
  int group = -1;
  for (std::size_t g = 0; g < es.degeneracy_groups.size(); ++g) {
    const auto [b, e] = es.degeneracy_groups[g];
    if (E >= es.eigenvalues[b] - tol && E <= es.eigenvalues[e - 1] + tol) {
      group = static_cast<int>(g);
      break;
    }
  }
  if (group < 0)
    throw std::invalid_argument("representative_configs: E is not an eigenvalue");

  // Polynomial weights normalized over the finite configuration space.
  const int nd = op.n() * op.region().dim();
  const auto weight = [&](std::size_t idx) {
    const double norm = std::sqrt(static_cast<double>(norm2(op.config_at(idx))));
    return std::pow(1.0 + norm, -(nd + 1));
  };
  double total = 0.0;
  for (std::size_t idx = 0; idx < op.dim(); ++idx) total += weight(idx);

  std::vector<Configuration> out;
  for (std::size_t idx = 0; idx < op.dim(); ++idx) {
    const double diag =
        es.projection(group, static_cast<int>(idx), static_cast<int>(idx));
    if (diag >= weight(idx) / total) out.push_back(op.config_at(idx));
  }
  return out;
}

void write_spectrum_csv(const EigenSystem& es, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "index,eigenvalue\n";
  char buf[64];
  for (int i = 0; i < es.dim(); ++i) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g\n", i, es.eigenvalues[i]);
    out << buf;
  }
}

}  // namespace mploc
