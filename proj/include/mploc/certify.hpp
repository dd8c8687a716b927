#pragma once

#include <complex>
#include <string>
#include <vector>

#include "mploc/correlator.hpp"
#include "mploc/ensemble.hpp"
#include "mploc/moments.hpp"

// The finite-volume localization certificate: boundary-clustered sums
// B_s(L) on the centered box, the two-scale rescaling consistency check,
// the exact recursion arithmetic that converts smallness at one scale
// into exponential decay, exponential decay-length fits, composites of
// non-interacting subsystems, and clustered-configuration decay
// experiments.

namespace mploc {

struct CertifyOptions {
  int M = 200;
  int nodes_per_unit = 64;
  double epsilon = 1e-6;
  int threads = 0;
  // Energy window: fixed, or width-2 window centered on the median of a
  // pilot spectrum when auto_center is set.
  Interval I = Interval::of(-1.0, 1.0);
  bool auto_center = true;
  int restricted_spot_checks = 0;  // extra sub-region evaluations, reported only
};

struct BValue {
  double L = 0;
  double r_cut = 0;  // diameter cut L/2
  double s = 0;
  Interval I;
  MomentEstimate estimate;       // |boundary| * triple sum, with MC error
  std::size_t n_pairs = 0;
  std::size_t boundary_size = 0;
  double apriori_shape = 0;      // n^2 L^{2d(n-1)} / lambda^s
  double c_fit = 0;              // estimate.mean / apriori_shape
  std::vector<double> restricted_values;  // spot checks on sub-regions
};

BValue compute_B(const ModelSpec& base, Coord L, double s, const CertifyOptions& opt);

struct RescalingReport {
  std::vector<double> ladder;       // L_0, L_1 = 2(L_0+1), ...
  std::vector<BValue> B;
  std::string status;               // consistent | violated | inconclusive
  double a_fit = 0;                 // B(L_1) lambda^s / B(L_0)^2
  std::string detail;
};

RescalingReport rescaling_check(const ModelSpec& base, Coord L0, double s, int k_max,
                                const CertifyOptions& opt);

struct RecursionParams {
  double a = 1, b = 0, p = 0, nu = 1;
  double L0 = 1;
  double eta = 1;
  double S0 = 0;
  int k_max = 40;
};

struct RecursionReport {
  bool hypotheses_ok = false;
  std::string failed_condition;  // which hypothesis broke, when any
  double mu = 0;
  bool conclusion_ok = false;
  double worst_slack = 0;        // max over k of log S_k - log bound_k
  std::vector<double> log_S;     // iterates of the worst-case recursion
};

// Pure arithmetic, no randomness. The iteration runs in log space so the
// k<=40 scales stay representable.
RecursionReport recursion_lemma(const RecursionParams& params);

struct DecayFit {
  double xi = 0;
  double amplitude = 0;
  double r2 = 0;
  std::string kernel = "dist_H";
  std::string status = "undetermined";  // ok | undetermined
  LineFit raw;
};

// Core fit: log mean ~ log A - r/xi, weighted by the log-scale variance
// (se/mean)^2. Needs >= 4 distinct distances; refuses when the weighted
// r^2 is below 0.8 or no decay is present.
DecayFit fit_exponential_decay(const std::vector<double>& dist,
                               const std::vector<double>& mean,
                               const std::vector<double>& se);

// Energy-averaged fractional moments for the given configuration pairs,
// fitted against their Hausdorff distances.
DecayFit decay_fit(const ModelSpec& model,
                   const std::vector<std::pair<Configuration, Configuration>>& pairs,
                   double s, const CertifyOptions& opt);

// Non-interacting composite of two subsystems on the same region and the
// same disorder field: the operator sum acting on the tensor-product
// configuration space.
struct CompositeSystem {
  OperatorMatrix opJ, opK;
  Eigen::MatrixXd h;  // dense composite
  std::size_t dimJ = 0, dimK = 0;

  std::size_t index_of(const Configuration& xJ, const Configuration& xK) const;
};

CompositeSystem compose_noninteracting(const ModelSpec& modelJ, const ModelSpec& modelK,
                                       std::uint64_t realization);

struct FactorizationReport {
  double lhs = 0;   // composite correlator at s=1 over all energies
  double rhs = 0;   // product of the subsystem correlators
  double gap = 0;   // |lhs - rhs|
  bool holds = false;
  double sumset_mismatch = 0;  // max |composite eigenvalue - nearest sum|
};

FactorizationReport factorization_check(const CompositeSystem& cs, const Configuration& xJ,
                                        const Configuration& xK, const Configuration& yJ,
                                        const Configuration& yK);

struct ClusteredDecayReport {
  DecayFit kernel_fit;          // decay against min{dist_H, max splitting width}
  double ks_direct = 0;         // anchored tail sum, direct enumeration
  double ks_regrouped = 0;      // same sum via complement bookkeeping
  double ks_bound = 0;          // A r^{d(n-1)} |Omega|^{n-1} exp(-r'/((n-1) xi)) at fitted constants
  bool bookkeeping_ok = false;
};

ClusteredDecayReport clustered_decay_experiment(const ModelSpec& model, double s,
                                                const CertifyOptions& opt, double r,
                                                double r_prime);

struct TwoRegionReport {
  double lhs_mean = 0, lhs_se = 0;
  double rhs_mean = 0, rhs_se = 0;
  double c_fit = 0;             // lhs lambda^s / rhs
  std::vector<double> ratio_quantiles;  // 10/50/90 of per-realization ratios
};

// Green function across two separated sub-regions against the product of
// the sub-region boundary sums.
TwoRegionReport two_region_factorization_check(const ModelSpec& model, const Region& V,
                                               const Region& W, const Configuration& x,
                                               const Configuration& y, double s,
                                               std::complex<double> z, int M,
                                               int threads = 0);

// Median of the spectrum of realization 0, used to center energy windows
// in the spectral bulk.
double pilot_spectral_median(const ModelSpec& model);

}  // namespace mploc
