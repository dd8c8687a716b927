#pragma once

// Internal helper shared by correlator / moments / certify: fractional
// power of the Green function integrated over an energy window, with the
// eigen-expansion evaluated at real energies and the spectrum supplying
// the singular split points.

#include <Eigen/Core>

#include "mploc/quadrature.hpp"
#include "mploc/spectral.hpp"

namespace mploc::detail {

inline double frac_green_integral(const EigenSystem& es, int ix, int iy, Interval I,
                                  double s, double tol = 1e-6) {
  Eigen::VectorXd w(es.dim());
  for (int i = 0; i < es.dim(); ++i)
    w[i] = es.eigenvectors(ix, i) * es.eigenvectors(iy, i);
  std::vector<double> poles;
  poles.reserve(es.degeneracy_groups.size());
  for (std::size_t g = 0; g < es.degeneracy_groups.size(); ++g)
    poles.push_back(es.group_energy(static_cast<int>(g)));
  auto f = [&](double E) {
    double acc = 0.0;
    for (int i = 0; i < es.dim(); ++i) acc += w[i] / (es.eigenvalues[i] - E);
    return std::pow(std::abs(acc), s);
  };
  const auto r = quad::integrate_with_singularities(f, I.lo, I.hi, poles, s, tol);
  return r.value;
}

}  // namespace mploc::detail
