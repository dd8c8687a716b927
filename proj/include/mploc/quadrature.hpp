#pragma once

#include <functional>
#include <vector>

// Adaptive Gauss-Kronrod (G7,K15) integration, plus wrappers that
// regularize integrable endpoint singularities |x - x0|^{-s}, s < 1, by
// the substitution x = x0 +/- w^{1/(1-s)}. Nodes are interior, so the
// integrand is never evaluated at a singular point.

namespace mploc::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;   // accumulated error estimate
  bool converged = false;
  int evaluations = 0;
};

using Fn = std::function<double(double)>;

Result integrate(const Fn& f, double a, double b, double rel_tol = 1e-9,
                 double abs_tol = 1e-14, int max_intervals = 4000);

// Integral of f over [a,b] where f ~ c|x-a|^{-s} near a (singular_left)
// or ~ c|x-b|^{-s} near b.
Result integrate_singular_left(const Fn& f, double a, double b, double s,
                               double rel_tol = 1e-9);
Result integrate_singular_right(const Fn& f, double a, double b, double s,
                                double rel_tol = 1e-9);

// Integral of f over [a,b] with integrable |x - p|^{-s} singularities at
// the given interior/boundary points p (sorted not required). Pieces
// between singularities are split at midpoints so each sub-integral has
// at most one singular endpoint.
Result integrate_with_singularities(const Fn& f, double a, double b,
                                    const std::vector<double>& points, double s,
                                    double rel_tol = 1e-9);

// n-point Gauss-Legendre rule on [a,b].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussRule gauss_legendre(int n, double a, double b);

}  // namespace mploc::quad
