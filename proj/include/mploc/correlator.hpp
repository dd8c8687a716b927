#pragma once

#include <string>
#include <vector>

#include "mploc/ensemble.hpp"
#include "mploc/report.hpp"
#include "mploc/spectral.hpp"

// Eigenfunction correlators Q(x,y;I;s), their structural inequalities,
// the two bridges between Q and fractional Green-function integrals, the
// level-set identity behind the lower bridge, the single-site spectral
// averaging identity, and the high-energy tail bound.

namespace mploc {

struct CorrelatorQuery {
  Configuration x, y;
  Interval I;
  double s = 1.0;
};

// sum over distinct eigenvalue groups E in I of
//   <dx P_E dx>^{1-s} |<dx P_E dy>|^s.
// At s=1 the diagonal factor drops; at s=0 the off-diagonal one does.
double correlator(const EigenSystem& es, int ix, int iy, Interval I, double s);

struct ConvexityReport {
  bool ok = true;
  double worst_gap = 0.0;       // most positive lhs - rhs over all checks
  std::string counterexample;   // filled on violation
};

// Log-convexity in s plus the monotone-exponent consequence
// Q(t) <= Q(s)^{(t-s)/(1-s)} for s < t <= 1.
ConvexityReport check_logconvexity(const EigenSystem& es, int ix, int iy, Interval I,
                                   double s0, double s1, double theta,
                                   double tol = 1e-12);

// integral_I |G(x,y;E)|^s dE  vs  (2|I|^{1-s}/(1-s)) Q(x,y;R;1)^s.
CheckReport gf_from_correlator_bound(const EigenSystem& es, int ix, int iy, Interval I,
                                     double s, double quad_tol = 1e-6);

// Lebesgue measure of { E : |sum_k p_k/(x_k - E)| > t }, computed
// exactly by root bracketing, against the closed form 2 sum(p)/t.
CheckReport boole_check(const std::vector<double>& weights,
                        const std::vector<double>& poles, double t);

struct SpectralAverageOptions {
  double tol = 5e-2;        // relative agreement required
  double quad_tol = 1e-7;
  double tail_fraction = 5e-3;  // stop growing the v-cutoff below this
  double v_start = 1.0;
  int max_doublings = 24;
};

struct SpectralAverageReport {
  double lhs = 0.0;   // weighted v-average of the shifted correlator
  double rhs = 0.0;   // energy integral over the sandwiched-resolvent data
  double rel_gap = 0.0;
  double v_max = 0.0;
  bool ok = false;
};

// Single-site averaging identity: redrawing the potential at u with the
// |v|^{-s} weight equals an energy integral built from
// K_u(E) = sqrt(N_u)(H-E)^{-1} sqrt(N_u) on the occupied sector.
SpectralAverageReport spectral_average_check(const Region& region, int n, const Site& u,
                                             const Configuration& x,
                                             const Configuration& y, Interval I, double s,
                                             const DisorderSpec& dspec,
                                             const InteractionSpec& ispec,
                                             std::uint64_t realization = 0,
                                             const SpectralAverageOptions& opt = {});

// MC comparison N_u(x) E[Q(x,y;I,s)]
//   <= K E0^s / |lambda|^{1-s} * sum_w (N_u(w)/N_u(x))^{s/2}
//        integral_I E|G(y,w;E)|^s dE,
// both sides over common realizations.
CheckReport correlator_from_gf_bound_mc(const EnsembleSpec& ens, const Configuration& x,
                                        const Configuration& y, const Site& u, Interval I,
                                        double s);

// MC mean of <dx P_{R \ (-E,E)} dx> against the closed-form
// exp-moment bound.
CheckReport tail_bound_check(const EnsembleSpec& ens, const Configuration& x, double E);

}  // namespace mploc
