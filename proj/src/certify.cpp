#include "mploc/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "mploc/rng.hpp"
#include "quadrature_fwd.hpp"

namespace mploc {

double pilot_spectral_median(const ModelSpec& model) {
  const OperatorMatrix op = assemble_realization(model, 0);
  const EigenSystem es = diagonalize(op);
  const int d = es.dim();
  return d % 2 == 1 ? es.eigenvalues[d / 2]
                    : 0.5 * (es.eigenvalues[d / 2 - 1] + es.eigenvalues[d / 2]);
}

namespace {

Interval centered_window(const ModelSpec& model, const CertifyOptions& opt) {
  if (!opt.auto_center) return opt.I;
  const double mu = pilot_spectral_median(model);
  const double half = 0.5 * opt.I.length();
  return Interval::of(mu - half, mu + half);
}

struct BSumLayout {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (ix, iy) indices
  std::size_t boundary_size = 0;
};

// Index pairs of the boundary-clustered double sum: x anchored at the
// center with diameter <= r_cut, y anchored at a boundary site with the
// same cut, over every boundary site.
BSumLayout b_sum_layout(const OperatorMatrix& op, double r_cut) {
  const Region& region = op.region();
  BSumLayout layout;
  const auto boundary = region.boundary_indices();
  layout.boundary_size = boundary.size();

  const Site origin(static_cast<std::size_t>(region.dim()), 0);
  ConfigSetSpec xs;
  xs.region = region;
  xs.n = op.n();
  xs.anchor = std::vector<Site>{origin};
  xs.max_diam = r_cut;
  std::vector<std::size_t> xi;
  for (const Configuration& c : enumerate_configs(xs)) xi.push_back(op.index_of(c));

  for (std::size_t bidx : boundary) {
    ConfigSetSpec ys;
    ys.region = region;
    ys.n = op.n();
    ys.anchor = std::vector<Site>{region.site(bidx)};
    ys.max_diam = r_cut;
    for (const Configuration& c : enumerate_configs(ys)) {
      const std::size_t iy = op.index_of(c);
      for (std::size_t ix : xi) layout.pairs.emplace_back(ix, iy);
    }
  }
  return layout;
}

MomentEstimate b_aggregate(const Eigen::MatrixXd& samples, double boundary_size) {
  std::vector<double> per_realization(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index r = 0; r < samples.rows(); ++r) {
    KahanSum row;
    for (Eigen::Index p = 0; p < samples.cols(); ++p) row.add(samples(r, p));
    per_realization[static_cast<std::size_t>(r)] = boundary_size * row.value();
  }
  return estimate_from_samples(per_realization);
}

}  // namespace

BValue compute_B(const ModelSpec& base, Coord L, double s, const CertifyOptions& opt) {
  if (!(s > 0 && s < 1)) throw std::invalid_argument("compute_B: s outside (0,1)");
  if (L < 1) throw std::invalid_argument("compute_B: L must be >= 1");
  ModelSpec m = base;
  m.region = Region::box(base.region.dim(), L);

  BValue bv;
  bv.L = static_cast<double>(L);
  bv.r_cut = static_cast<double>(L) / 2.0;
  bv.s = s;
  bv.I = centered_window(m, opt);

  EnsembleSpec ens;
  ens.model = m;
  ens.M = opt.M;
  ens.energy.I = bv.I;
  ens.energy.nodes_per_unit = opt.nodes_per_unit;
  ens.energy.epsilon = opt.epsilon;
  ens.threads = opt.threads;

  const OperatorMatrix probe = assemble_realization(m, 0);
  const BSumLayout layout = b_sum_layout(probe, bv.r_cut);
  bv.n_pairs = layout.pairs.size();
  bv.boundary_size = layout.boundary_size;

  const Eigen::MatrixXd samples = moment_samples(ens, layout.pairs, s);
  bv.estimate = b_aggregate(samples, static_cast<double>(layout.boundary_size));
  bv.estimate.s = s;
  bv.estimate.seed = m.disorder.seed;

  const int d = m.region.dim();
  bv.apriori_shape = m.n * m.n *
                     std::pow(static_cast<double>(L), 2.0 * d * (m.n - 1)) /
                     std::pow(std::abs(m.disorder.lambda), s);
  bv.c_fit = bv.apriori_shape > 0 ? bv.estimate.mean / bv.apriori_shape : 0.0;

  // Restricted-region spot checks: same sum with one interior site
  // removed. Reported only; no supremum is claimed.
  for (int k = 0; k < opt.restricted_spot_checks; ++k) {
    std::vector<Site> sites = m.region.sites();
    rng::Sequence pick(m.disorder.seed + 977 * (k + 1));
    const Site origin(static_cast<std::size_t>(d), 0);
    std::vector<Site> kept;
    const auto boundary = m.region.boundary_indices();
    std::vector<bool> is_boundary(sites.size(), false);
    for (std::size_t b : boundary) is_boundary[b] = true;
    std::vector<std::size_t> removable;
    for (std::size_t i = 0; i < sites.size(); ++i)
      if (!is_boundary[i] && sites[i] != origin) removable.push_back(i);
    if (removable.empty()) break;
    const std::size_t drop =
        removable[static_cast<std::size_t>(pick.next_int(0, static_cast<std::int64_t>(removable.size()) - 1))];
    for (std::size_t i = 0; i < sites.size(); ++i)
      if (i != drop) kept.push_back(sites[i]);

    ModelSpec sub = m;
    sub.region = Region::from_sites(d, kept);
    EnsembleSpec sens = ens;
    sens.model = sub;
    sens.M = std::max(8, opt.M / 8);
    const OperatorMatrix sprobe = assemble_realization(sub, 0);
    const BSumLayout slayout = b_sum_layout(sprobe, bv.r_cut);
    if (slayout.pairs.empty()) continue;
    const Eigen::MatrixXd ssamples = moment_samples(sens, slayout.pairs, s);
    bv.restricted_values.push_back(
        b_aggregate(ssamples, static_cast<double>(layout.boundary_size)).mean);
  }
  return bv;
}

RescalingReport rescaling_check(const ModelSpec& base, Coord L0, double s, int k_max,
                                const CertifyOptions& opt) {
  RescalingReport rep;
  Coord L = L0;
  for (int k = 0; k <= k_max; ++k) {
    rep.ladder.push_back(static_cast<double>(L));
    rep.B.push_back(compute_B(base, L, s, opt));
    L = 2 * (L + 1);
  }

  const double lam_s = std::pow(std::abs(base.disorder.lambda), s);
  const auto& b0 = rep.B[0].estimate;
  const auto& b1 = rep.B[1].estimate;
  if (b0.mean > 0) rep.a_fit = b1.mean * lam_s / (b0.mean * b0.mean);

  std::ostringstream detail;
  bool decreasing = true, increased = false, decided = true;
  for (std::size_t k = 0; k + 1 < rep.B.size(); ++k) {
    const auto& lo = rep.B[k].estimate;
    const auto& hi = rep.B[k + 1].estimate;
    const double gap = lo.mean - hi.mean;
    const double noise = 2.0 * std::hypot(lo.std_error, hi.std_error);
    detail << "B(" << rep.ladder[k] << ")=" << lo.mean << "+-" << lo.std_error << " -> B("
           << rep.ladder[k + 1] << ")=" << hi.mean << "+-" << hi.std_error << "; ";
    if (gap <= noise) decided = false;
    if (gap <= 0) decreasing = false;
    if (-gap > noise) increased = true;
  }
  // With three or more rungs, also compare the last rung against the
  // pure-quadratic extrapolation from the first step.
  if (rep.B.size() >= 3 && rep.a_fit > 0) {
    const double predicted = rep.a_fit / lam_s * b1.mean * b1.mean;
    const auto& b2 = rep.B[2].estimate;
    detail << "quadratic prediction B(" << rep.ladder[2] << ") <= " << predicted << "; ";
    if (b2.mean > predicted + 3.0 * b2.std_error) {
      decreasing = false;
      increased = true;
    }
  }
  rep.detail = detail.str();
  if (decreasing && decided)
    rep.status = "consistent";
  else if (increased)
    rep.status = "violated";
  else
    rep.status = "inconclusive";
  return rep;
}

namespace {

double logsumexp2(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

RecursionReport recursion_lemma(const RecursionParams& params) {
  RecursionReport rep;
  const double a = params.a, b = params.b, p = params.p, nu = params.nu;
  const double L0 = params.L0, eta = params.eta, S0 = params.S0;
  if (!(a >= 0 && b >= 0 && p >= 0 && nu > 0 && L0 > 0 && eta >= 0 && S0 >= 0))
    throw std::invalid_argument("recursion_lemma: parameters out of range");

  const double cond1_rhs = a * b + eta * std::pow(2.0, p) / std::pow(L0, p);
  if (!(eta * eta >= cond1_rhs)) {
    rep.failed_condition = "condition (1): eta^2 >= a b + eta 2^p / L0^p";
    return rep;
  }
  const double r0 = a * S0 + eta * std::pow(L0, p) * std::exp(-nu * L0);
  if (!(r0 < 1.0)) {
    rep.failed_condition = "condition (2): a S(L0) + eta L0^p exp(-nu L0) < 1";
    return rep;
  }
  rep.hypotheses_ok = true;
  rep.mu = -std::log(r0) / L0;

  const double neg_inf = -std::numeric_limits<double>::infinity();
  const double log_a = a > 0 ? std::log(a) : neg_inf;
  const double log_b = b > 0 ? std::log(b) : neg_inf;
  double log_S = S0 > 0 ? std::log(S0) : neg_inf;
  rep.log_S.push_back(log_S);
  rep.conclusion_ok = true;
  rep.worst_slack = neg_inf;

  for (int k = 0; k <= params.k_max; ++k) {
    const double Lk = std::ldexp(L0, k);  // 2^k L0
    const double log_bound = -log_a - rep.mu * Lk;  // log(a^{-1} e^{-mu 2^k L0})
    const double slack = log_S - log_bound;
    rep.worst_slack = std::max(rep.worst_slack, slack);
    if (!(slack <= 1e-12)) rep.conclusion_ok = false;
    if (k == params.k_max) break;
    // worst case: equality in the recursion
    log_S = logsumexp2(log_a + 2.0 * log_S, log_b + 2.0 * p * std::log(Lk) - 2.0 * nu * Lk);
    rep.log_S.push_back(log_S);
  }
  if (a == 0.0) rep.conclusion_ok = true;  // bound is infinite
  return rep;
}

DecayFit fit_exponential_decay(const std::vector<double>& dist,
                               const std::vector<double>& mean,
                               const std::vector<double>& se) {
  if (dist.size() != mean.size() || dist.size() != se.size())
    throw std::invalid_argument("fit_exponential_decay: size mismatch");
  std::vector<double> xs, ys, ws;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (!(mean[i] > 0)) continue;
    if (se[i] > 0 && mean[i] <= 2.0 * se[i]) continue;  // log would be noise
    xs.push_back(dist[i]);
    ys.push_back(std::log(mean[i]));
    const double sigma_log = se[i] > 0 ? se[i] / mean[i] : 1e-8;
    ws.push_back(1.0 / (sigma_log * sigma_log));
  }
  std::vector<double> distinct = xs;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end(),
                             [](double p, double q) { return std::abs(p - q) < 1e-12; }),
                 distinct.end());
  if (distinct.size() < 4)
    throw std::invalid_argument("fit_exponential_decay: need >= 4 distinct distances");

  DecayFit fit;
  fit.raw = weighted_line_fit(xs, ys, ws);
  if (!fit.raw.ok) return fit;
  fit.r2 = fit.raw.r2;
  fit.amplitude = std::exp(fit.raw.intercept);
  if (fit.raw.slope < 0) {
    fit.xi = -1.0 / fit.raw.slope;
    if (fit.r2 >= 0.8) fit.status = "ok";
  }
  return fit;
}

DecayFit decay_fit(const ModelSpec& model,
                   const std::vector<std::pair<Configuration, Configuration>>& pairs,
                   double s, const CertifyOptions& opt) {
  EnsembleSpec ens;
  ens.model = model;
  ens.M = opt.M;
  ens.energy.I = centered_window(model, opt);
  ens.energy.nodes_per_unit = opt.nodes_per_unit;
  ens.energy.epsilon = opt.epsilon;
  ens.threads = opt.threads;

  const OperatorMatrix probe = assemble_realization(model, 0);
  std::vector<std::pair<std::size_t, std::size_t>> idx;
  std::vector<double> dist;
  for (const auto& [x, y] : pairs) {
    idx.emplace_back(probe.index_of(x), probe.index_of(y));
    dist.push_back(dist_hausdorff(x, y));
  }
  const Eigen::MatrixXd samples = moment_samples(ens, idx, s);
  std::vector<double> mean(idx.size()), se(idx.size());
  for (std::size_t p = 0; p < idx.size(); ++p) {
    std::vector<double> col(static_cast<std::size_t>(samples.rows()));
    for (Eigen::Index r = 0; r < samples.rows(); ++r)
      col[static_cast<std::size_t>(r)] = samples(r, static_cast<Eigen::Index>(p));
    const MomentEstimate e = estimate_from_samples(col);
    mean[p] = e.mean;
    se[p] = e.std_error;
  }
  return fit_exponential_decay(dist, mean, se);
}

std::size_t CompositeSystem::index_of(const Configuration& xJ, const Configuration& xK) const {
  return opJ.index_of(xJ) * dimK + opK.index_of(xK);
}

CompositeSystem compose_noninteracting(const ModelSpec& modelJ, const ModelSpec& modelK,
                                       std::uint64_t realization) {
  if (modelJ.region.sites() != modelK.region.sites())
    throw std::invalid_argument("compose_noninteracting: regions differ");
  if (modelJ.disorder.seed != modelK.disorder.seed)
    throw std::invalid_argument("compose_noninteracting: disorder seeds differ");
  CompositeSystem cs;
  const DisorderField field = sample_disorder(modelJ.disorder, modelJ.region, realization);
  cs.opJ = assemble(modelJ.region, modelJ.n, modelJ.disorder, modelJ.interaction, field);
  cs.opK = assemble(modelK.region, modelK.n, modelK.disorder, modelK.interaction, field);
  cs.dimJ = cs.opJ.dim();
  cs.dimK = cs.opK.dim();
  const Eigen::MatrixXd hJ = cs.opJ.dense();
  const Eigen::MatrixXd hK = cs.opK.dense();
  const auto dj = static_cast<Eigen::Index>(cs.dimJ);
  const auto dk = static_cast<Eigen::Index>(cs.dimK);
  cs.h = Eigen::MatrixXd::Zero(dj * dk, dj * dk);
  for (Eigen::Index aj = 0; aj < dj; ++aj)
    for (Eigen::Index bj = 0; bj < dj; ++bj) {
      if (hJ(aj, bj) == 0.0) continue;
      for (Eigen::Index k = 0; k < dk; ++k) cs.h(aj * dk + k, bj * dk + k) += hJ(aj, bj);
    }
  for (Eigen::Index ak = 0; ak < dk; ++ak)
    for (Eigen::Index bk = 0; bk < dk; ++bk) {
      if (hK(ak, bk) == 0.0) continue;
      for (Eigen::Index j = 0; j < dj; ++j) cs.h(j * dk + ak, j * dk + bk) += hK(ak, bk);
    }
  return cs;
}

FactorizationReport factorization_check(const CompositeSystem& cs, const Configuration& xJ,
                                        const Configuration& xK, const Configuration& yJ,
                                        const Configuration& yK) {
  FactorizationReport rep;
  const EigenSystem es = diagonalize_dense(cs.h);
  const EigenSystem esJ = diagonalize_dense(cs.opJ.dense());
  const EigenSystem esK = diagonalize_dense(cs.opK.dense());

  const int ix = static_cast<int>(cs.index_of(xJ, xK));
  const int iy = static_cast<int>(cs.index_of(yJ, yK));
  rep.lhs = correlator(es, ix, iy, Interval::all(), 1.0);
  const double qJ = correlator(esJ, static_cast<int>(cs.opJ.index_of(xJ)),
                               static_cast<int>(cs.opJ.index_of(yJ)), Interval::all(), 1.0);
  const double qK = correlator(esK, static_cast<int>(cs.opK.index_of(xK)),
                               static_cast<int>(cs.opK.index_of(yK)), Interval::all(), 1.0);
  rep.rhs = qJ * qK;
  rep.gap = std::abs(rep.lhs - rep.rhs);
  rep.holds = rep.lhs <= rep.rhs + 1e-10;

  // spectrum of the composite vs the sumset
  std::vector<double> sums;
  sums.reserve(cs.dimJ * cs.dimK);
  for (int i = 0; i < esJ.dim(); ++i)
    for (int j = 0; j < esK.dim(); ++j) sums.push_back(esJ.eigenvalues[i] + esK.eigenvalues[j]);
  std::sort(sums.begin(), sums.end());
  double mismatch = 0.0;
  for (int i = 0; i < es.dim(); ++i)
    mismatch = std::max(mismatch, std::abs(es.eigenvalues[i] - sums[static_cast<std::size_t>(i)]));
  rep.sumset_mismatch = mismatch;
  return rep;
}

namespace {

// Splitting width of the configuration at a matrix index.
double splitting_width_at(const OperatorMatrix& op, std::size_t idx) {
  return splitting_width(op.config_at(idx));
}

}  // namespace

ClusteredDecayReport clustered_decay_experiment(const ModelSpec& model, double s,
                                                const CertifyOptions& opt, double r,
                                                double r_prime) {
  if (model.n < 2)
    throw std::invalid_argument("clustered_decay_experiment: needs n >= 2");
  if (!(r_prime <= r)) throw std::invalid_argument("clustered_decay_experiment: r' > r");
  ClusteredDecayReport rep;

  EnsembleSpec ens;
  ens.model = model;
  ens.M = opt.M;
  ens.energy.I = centered_window(model, opt);
  ens.energy.nodes_per_unit = opt.nodes_per_unit;
  ens.energy.epsilon = opt.epsilon;
  ens.threads = opt.threads;

  const OperatorMatrix probe = assemble_realization(model, 0);
  const Region& region = model.region;

  // sample pairs with a spread of kernel values
  rng::Sequence pick(model.disorder.seed + 4242);
  std::vector<std::pair<std::size_t, std::size_t>> idx;
  std::vector<double> kernel;
  const std::size_t dim = probe.dim();
  const std::size_t want = 60;
  std::size_t attempts = 0;
  while (idx.size() < want && attempts++ < 4000) {
    const std::size_t ix = static_cast<std::size_t>(
        pick.next_int(0, static_cast<std::int64_t>(dim) - 1));
    const std::size_t iy = static_cast<std::size_t>(
        pick.next_int(0, static_cast<std::int64_t>(dim) - 1));
    if (ix == iy) continue;
    const Configuration cx = probe.config_at(ix);
    const Configuration cy = probe.config_at(iy);
    const double k = std::min(dist_hausdorff(cx, cy),
                              std::max(splitting_width_at(probe, ix),
                                       splitting_width_at(probe, iy)));
    idx.emplace_back(ix, iy);
    kernel.push_back(k);
  }

  const Eigen::MatrixXd samples = moment_samples(ens, idx, s);
  std::vector<double> mean(idx.size()), se(idx.size());
  for (std::size_t p = 0; p < idx.size(); ++p) {
    std::vector<double> col(static_cast<std::size_t>(samples.rows()));
    for (Eigen::Index rr = 0; rr < samples.rows(); ++rr)
      col[static_cast<std::size_t>(rr)] = samples(rr, static_cast<Eigen::Index>(p));
    const MomentEstimate e = estimate_from_samples(col);
    mean[p] = e.mean;
    se[p] = e.std_error;
  }
  rep.kernel_fit = fit_exponential_decay(kernel, mean, se);
  rep.kernel_fit.kernel = "min(dist_H, max splitting width)";

  // anchored tail sum at one fixed z: two bookkeeping routes
  const std::complex<double> z(centered_window(model, opt).lo, 1e-3);
  Site xsite = region.site(0), ysite = region.site(region.size() - 1);
  double best_sep = -1.0;
  for (std::size_t i = 0; i < region.size(); ++i)
    for (std::size_t j = 0; j < region.size(); ++j) {
      const double sep = site_dist(region.site(i), region.site(j));
      if (sep >= 2 * r && sep > best_sep) {
        best_sep = sep;
        xsite = region.site(i);
        ysite = region.site(j);
      }
    }

  const int M_ks = std::max(4, opt.M / 16);
  std::vector<double> direct_samples(static_cast<std::size_t>(M_ks));
  std::vector<double> regroup_samples(static_cast<std::size_t>(M_ks));
  ConfigSetSpec yspec{region, model.n, std::vector<Site>{ysite}, r};
  ConfigSetSpec xall{region, model.n, std::vector<Site>{xsite}, std::nullopt};
  ConfigSetSpec xsmall{region, model.n, std::vector<Site>{xsite}, r_prime};
  const auto ycfg = enumerate_configs(yspec);
  const auto xcfg_all = enumerate_configs(xall);
  const auto xcfg_small = enumerate_configs(xsmall);

  parallel_for(static_cast<std::size_t>(M_ks), opt.threads, [&](std::size_t rr) {
    const OperatorMatrix op = assemble_realization(model, rr);
    const EigenSystem es = diagonalize(op);
    auto gpow = [&](std::size_t a, std::size_t b) {
      std::complex<double> g = 0.0;
      for (int i = 0; i < es.dim(); ++i)
        g += es.eigenvectors(static_cast<Eigen::Index>(a), i) *
             es.eigenvectors(static_cast<Eigen::Index>(b), i) / (es.eigenvalues[i] - z);
      return std::pow(std::abs(g), s);
    };
    KahanSum direct, whole, small;
    for (const auto& cy : ycfg) {
      const std::size_t iy = op.index_of(cy);
      for (const auto& cx : xcfg_all) {
        const double v = gpow(op.index_of(cx), iy);
        whole.add(v);
        if (static_cast<double>(diam2(cx)) > r_prime * r_prime * (1 + 1e-12))
          direct.add(v);
      }
      for (const auto& cx : xcfg_small) small.add(gpow(op.index_of(cx), iy));
    }
    direct_samples[rr] = direct.value();
    regroup_samples[rr] = whole.value() - small.value();
  });
  rep.ks_direct = estimate_from_samples(direct_samples).mean;
  rep.ks_regrouped = estimate_from_samples(regroup_samples).mean;
  rep.bookkeeping_ok =
      std::abs(rep.ks_direct - rep.ks_regrouped) <=
      1e-12 * std::max({std::abs(rep.ks_direct), std::abs(rep.ks_regrouped), 1.0});

  if (rep.kernel_fit.status == "ok") {
    const int d = region.dim();
    rep.ks_bound = rep.kernel_fit.amplitude *
                   std::pow(r, d * (model.n - 1)) *
                   std::pow(static_cast<double>(region.size()), model.n - 1) *
                   std::exp(-r_prime / ((model.n - 1) * rep.kernel_fit.xi));
  }
  return rep;
}

TwoRegionReport two_region_factorization_check(const ModelSpec& model, const Region& V,
                                               const Region& W, const Configuration& x,
                                               const Configuration& y, double s,
                                               std::complex<double> z, int M, int threads) {
  // separation precondition
  double sep2 = std::numeric_limits<double>::infinity();
  for (const Site& v : V.sites())
    for (const Site& w : W.sites())
      sep2 = std::min(sep2, static_cast<double>(dist2(v, w)));
  if (!(sep2 >= 4.0))
    throw std::invalid_argument("two_region_factorization_check: dist(V,W) must be >= 2");
  for (const Site& v : V.sites())
    if (!model.region.contains(v))
      throw std::invalid_argument("two_region_factorization_check: V not inside the region");
  for (const Site& w : W.sites())
    if (!model.region.contains(w))
      throw std::invalid_argument("two_region_factorization_check: W not inside the region");

  // boundary sites of a sub-region that still couple onward inside Omega
  auto inner_boundary = [&](const Region& sub) {
    std::vector<Site> out;
    for (const Site& u : sub.sites()) {
      for (int k = 0; k < sub.dim(); ++k) {
        for (int step = -1; step <= 1; step += 2) {
          Site nb = u;
          nb[static_cast<std::size_t>(k)] += step;
          if (!sub.contains(nb) && model.region.contains(nb)) {
            out.push_back(u);
            k = sub.dim();
            break;
          }
        }
      }
    }
    return out;
  };

  const std::vector<Site> bV = inner_boundary(V);
  const std::vector<Site> bW = inner_boundary(W);

  const std::size_t MM = static_cast<std::size_t>(M);
  std::vector<double> lhs(MM), rhs(MM);
  parallel_for(MM, threads, [&](std::size_t r) {
    const DisorderField field = sample_disorder(model.disorder, model.region, r);
    const OperatorMatrix op =
        assemble(model.region, model.n, model.disorder, model.interaction, field);
    lhs[r] = std::pow(std::abs(green(op, x, y, z)), s);

    auto restricted_field = [&](const Region& sub) {
      DisorderField f;
      f.seed = field.seed;
      f.realization = field.realization;
      f.values.resize(sub.size());
      for (std::size_t i = 0; i < sub.size(); ++i)
        f.values[i] = field.values[*model.region.index_of(sub.site(i))];
      return f;
    };
    const OperatorMatrix opV =
        assemble(V, model.n, model.disorder, model.interaction, restricted_field(V));
    const OperatorMatrix opW =
        assemble(W, model.n, model.disorder, model.interaction, restricted_field(W));
    const EigenSystem esV = diagonalize(opV);
    const EigenSystem esW = diagonalize(opW);

    auto boundary_sum = [&](const OperatorMatrix& sub_op, const EigenSystem& es,
                            const std::vector<Site>& bsites, const Configuration& from,
                            bool from_first) {
      KahanSum acc;
      const int ifrom = static_cast<int>(sub_op.index_of(from));
      for (const Site& u : bsites) {
        ConfigSetSpec cs{sub_op.region(), model.n, std::vector<Site>{u}, std::nullopt};
        for (const Configuration& cw : enumerate_configs(cs)) {
          const int iw = static_cast<int>(sub_op.index_of(cw));
          std::complex<double> g = 0.0;
          for (int i = 0; i < es.dim(); ++i)
            g += es.eigenvectors(from_first ? ifrom : iw, i) *
                 es.eigenvectors(from_first ? iw : ifrom, i) / (es.eigenvalues[i] - z);
          acc.add(std::pow(std::abs(g), s));
        }
      }
      return acc.value();
    };
    rhs[r] = boundary_sum(opV, esV, bV, x, true) * boundary_sum(opW, esW, bW, y, false);
  });

  TwoRegionReport rep;
  const MomentEstimate le = estimate_from_samples(lhs);
  const MomentEstimate re = estimate_from_samples(rhs);
  rep.lhs_mean = le.mean;
  rep.lhs_se = le.std_error;
  rep.rhs_mean = re.mean;
  rep.rhs_se = re.std_error;
  const double lam_s = std::pow(std::abs(model.disorder.lambda), s);
  if (re.mean > 0) rep.c_fit = le.mean * lam_s / re.mean;
  std::vector<double> ratios;
  for (std::size_t r = 0; r < MM; ++r)
    if (rhs[r] > 0) ratios.push_back(lhs[r] * lam_s / rhs[r]);
  std::sort(ratios.begin(), ratios.end());
  if (!ratios.empty()) {
    rep.ratio_quantiles = {ratios[ratios.size() / 10], ratios[ratios.size() / 2],
                           ratios[ratios.size() * 9 / 10]};
  }
  return rep;
}

}  // namespace mploc
