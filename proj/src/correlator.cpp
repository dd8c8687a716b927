#include "mploc/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "mploc/stats.hpp"
#include "quadrature_fwd.hpp"

namespace mploc {

double correlator(const EigenSystem& es, int ix, int iy, Interval I, double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("correlator: s outside [0,1]");
  double q = 0.0;
  for (std::size_t g = 0; g < es.degeneracy_groups.size(); ++g) {
    const int gi = static_cast<int>(g);
    if (!I.contains(es.group_energy(gi))) continue;
    const double qxx = std::max(es.projection(gi, ix, ix), 0.0);
    const double qxy = std::abs(es.projection(gi, ix, iy));
    q += std::pow(qxx, 1.0 - s) * std::pow(qxy, s);
  }
  return q;
}

ConvexityReport check_logconvexity(const EigenSystem& es, int ix, int iy, Interval I,
                                   double s0, double s1, double theta, double tol) {
  ConvexityReport rep;
  auto record = [&](double lhs, double rhs, const char* what, double p0, double p1) {
    const double gap = lhs - rhs;
    rep.worst_gap = std::max(rep.worst_gap, gap);
    if (gap > tol && rep.ok) {
      rep.ok = false;
      std::ostringstream os;
      os << what << ": lhs=" << lhs << " rhs=" << rhs << " at (" << p0 << "," << p1 << ")";
      rep.counterexample = os.str();
    }
  };

  const double sm = (1.0 - theta) * s0 + theta * s1;
  const double q0 = correlator(es, ix, iy, I, s0);
  const double q1 = correlator(es, ix, iy, I, s1);
  const double qm = correlator(es, ix, iy, I, sm);
  record(qm, std::pow(q0, 1.0 - theta) * std::pow(q1, theta), "log-convexity", s0, s1);

  // monotone-exponent consequence for the ordered pairs at hand
  auto increase = [&](double s, double t) {
    if (!(s < t && t <= 1.0) || s >= 1.0) return;
    const double qs = correlator(es, ix, iy, I, s);
    const double qt = correlator(es, ix, iy, I, t);
    record(qt, std::pow(qs, (t - s) / (1.0 - s)), "exponent-monotonicity", s, t);
  };
  increase(std::min(s0, s1), std::max(s0, s1));
  increase(s0, 1.0);
  increase(s1, 1.0);
  return rep;
}

CheckReport gf_from_correlator_bound(const EigenSystem& es, int ix, int iy, Interval I,
                                     double s, double quad_tol) {
  if (!(s > 0.0 && s < 1.0))
    throw std::invalid_argument("gf_from_correlator_bound: s outside (0,1)");
  if (!I.bounded())
    throw std::invalid_argument("gf_from_correlator_bound: interval must be bounded");
  CheckReport rep;
  rep.name = "green-vs-correlator";
  rep.lhs = detail::frac_green_integral(es, ix, iy, I, s, quad_tol);
  const double q1 = correlator(es, ix, iy, Interval::all(), 1.0);
  rep.rhs = 2.0 * std::pow(I.length(), 1.0 - s) / (1.0 - s) * std::pow(q1, s);
  rep.tolerance = 1e-3;
  rep.status = rep.lhs <= rep.rhs * (1.0 + rep.tolerance) ? "pass" : "violated";
  return rep;
}

namespace {

// Value of sum_k p_k / (x_k - E); poles strictly sorted.
double rational_sum(const std::vector<double>& p, const std::vector<double>& x, double E) {
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) acc += p[k] / (x[k] - E);
  return acc;
}

// Root of f(E) = target on (lo, hi) where the sign of f - target is
// known at both open ends; midpoint bisection never touches the poles.
double bisect_to_root(const std::function<double(double)>& f, double lo, double hi,
                      bool rising) {
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double v = f(mid);
    const bool above = v > 0.0;
    if (above == rising)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

CheckReport boole_check(const std::vector<double>& weights, const std::vector<double>& poles,
                        double t) {
  if (weights.size() != poles.size() || weights.empty())
    throw std::invalid_argument("boole_check: mismatched inputs");
  if (!(t > 0)) throw std::invalid_argument("boole_check: t must be positive");
  for (double w : weights)
    if (!(w > 0)) throw std::invalid_argument("boole_check: weights must be positive");

  // merge coinciding poles
  std::vector<std::pair<double, double>> pw;
  for (std::size_t k = 0; k < poles.size(); ++k) pw.emplace_back(poles[k], weights[k]);
  std::sort(pw.begin(), pw.end());
  std::vector<double> x, p;
  for (const auto& [xk, wk] : pw) {
    if (!x.empty() && xk == x.back())
      p.back() += wk;
    else {
      x.push_back(xk);
      p.push_back(wk);
    }
  }
  const std::size_t n = x.size();
  double psum = 0.0;
  for (double w : p) psum += w;

  const double reach = psum / t + 1.0;
  double measure = 0.0;

  // {f > t}: one crossing left of each pole
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = i == 0 ? x[0] - reach : x[i - 1];
    auto f = [&](double E) { return rational_sum(p, x, E) - t; };
    const double r = bisect_to_root(f, lo, x[i], /*rising=*/true);
    measure += x[i] - r;
  }
  // {f < -t}: one crossing right of each pole
  for (std::size_t i = 0; i < n; ++i) {
    const double hi = i + 1 < n ? x[i + 1] : x[n - 1] + reach;
    auto f = [&](double E) { return -(rational_sum(p, x, E) + t); };
    const double r = bisect_to_root(f, x[i], hi, /*rising=*/false);
    measure += r - x[i];
  }

  CheckReport rep;
  rep.name = "boole-level-set";
  rep.lhs = measure;
  rep.rhs = 2.0 * psum / t;
  rep.tolerance = 1e-8;
  rep.status =
      std::abs(rep.lhs - rep.rhs) <= rep.tolerance * std::abs(rep.rhs) ? "pass" : "violated";
  return rep;
}

namespace {

struct OccupiedSector {
  std::vector<std::size_t> indices;  // configuration indices with occupation >= 1
  Eigen::VectorXd sqrt_occ;
  int position_of(std::size_t idx) const {
    const auto it = std::lower_bound(indices.begin(), indices.end(), idx);
    if (it == indices.end() || *it != idx) return -1;
    return static_cast<int>(it - indices.begin());
  }
};

OccupiedSector occupied_sector(const OperatorMatrix& op, std::size_t u_index) {
  OccupiedSector sec;
  std::vector<double> s;
  for (std::size_t idx = 0; idx < op.dim(); ++idx) {
    const int occ = op.occupation_at(idx, u_index);
    if (occ >= 1) {
      sec.indices.push_back(idx);
      s.push_back(std::sqrt(static_cast<double>(occ)));
    }
  }
  sec.sqrt_occ = Eigen::Map<Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  return sec;
}

// Integrand of the energy side: eigen-data of K_u(E) on the occupied
// sector combined with the sandwiched resolvent column toward y.
double energy_side_integrand(const EigenSystem& es0, const Eigen::MatrixXd& u_rows,
                             const OccupiedSector& sec, int px, int iy, double E, double s) {
  const int np = static_cast<int>(sec.indices.size());
  const int dim = es0.dim();
  Eigen::VectorXd c(dim);
  for (int i = 0; i < dim; ++i) c[i] = 1.0 / (es0.eigenvalues[i] - E);
  // B = U_P * diag(c); K = diag(sq) B U_P^T diag(sq)
  Eigen::MatrixXd b = u_rows * c.asDiagonal();
  Eigen::MatrixXd k = b * u_rows.transpose();
  for (int r = 0; r < np; ++r)
    for (int q2 = 0; q2 < np; ++q2) k(r, q2) *= sec.sqrt_occ[r] * sec.sqrt_occ[q2];

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(k);
  if (solver.info() != Eigen::Success) return 0.0;
  const Eigen::VectorXd kappa = solver.eigenvalues();
  const Eigen::MatrixXd w = solver.eigenvectors();

  // resolvent column toward y, sandwiched: sqrt(N_u) (H - E)^{-1} delta_y
  Eigen::VectorXd rv(np);
  for (int r = 0; r < np; ++r) {
    double acc = 0.0;
    for (int i = 0; i < dim; ++i) acc += u_rows(r, i) * c[i] * es0.eigenvectors(iy, i);
    rv[r] = sec.sqrt_occ[r] * acc;
  }

  const double ktol = 1e-9 * std::max(1.0, std::max(std::abs(kappa[0]),
                                                    std::abs(kappa[np - 1])));
  double total = 0.0;
  int gb = 0;
  for (int i = 1; i <= np; ++i) {
    if (i == np || kappa[i] - kappa[i - 1] > ktol) {
      double diag = 0.0, cross = 0.0;
      for (int nu = gb; nu < i; ++nu) {
        const double wx = w(px, nu);
        diag += wx * wx;
        double wk = 0.0;
        for (int r = 0; r < np; ++r) wk += w(r, nu) * rv[r];
        cross += wx * wk;
      }
      total += std::pow(std::max(diag, 0.0), 1.0 - s) * std::pow(std::abs(cross), s);
      gb = i;
    }
  }
  return total;
}

}  // namespace

SpectralAverageReport spectral_average_check(const Region& region, int n, const Site& u,
                                             const Configuration& x, const Configuration& y,
                                             Interval I, double s,
                                             const DisorderSpec& dspec,
                                             const InteractionSpec& ispec,
                                             std::uint64_t realization,
                                             const SpectralAverageOptions& opt) {
  if (!(s >= 0.0 && s < 1.0))
    throw std::invalid_argument("spectral_average_check: s outside [0,1)");
  if (!I.bounded())
    throw std::invalid_argument("spectral_average_check: interval must be bounded");
  const DisorderField field = sample_disorder(dspec, region, realization);
  const OperatorMatrix op = assemble(region, n, dspec, ispec, field, 64);
  const auto u_index = region.index_of(u);
  if (!u_index) throw std::invalid_argument("spectral_average_check: u outside region");
  const int nx = occupation(x, u);
  if (nx < 1) throw std::invalid_argument("spectral_average_check: x has no particle at u");

  const std::size_t ix = op.index_of(x);
  const std::size_t iy = op.index_of(y);
  const double lambda = dspec.lambda;

  // ---- v side: redraw the potential at u with weight |v|^{-s}
  const Eigen::MatrixXd h0 = op.dense();
  Eigen::VectorXd occ_diag(static_cast<Eigen::Index>(op.dim()));
  for (std::size_t idx = 0; idx < op.dim(); ++idx)
    occ_diag[static_cast<Eigen::Index>(idx)] =
        static_cast<double>(op.occupation_at(idx, *u_index));

  auto q_shifted = [&](double v) {
    Eigen::MatrixXd h = h0;
    h.diagonal() += lambda * v * occ_diag;
    const EigenSystem es = diagonalize_dense(h);
    return correlator(es, static_cast<int>(ix), static_cast<int>(iy), I, s);
  };
  auto both_signs = [&](double v) { return q_shifted(v) + q_shifted(-v); };

  double v_integral = 0.0;
  double vmax = opt.v_start;
  v_integral += quad::integrate_singular_left(both_signs, 0.0, vmax, s, opt.quad_tol).value;
  int quiet_shells = 0;
  for (int k = 0; k < opt.max_doublings && quiet_shells < 2; ++k) {
    const double shell =
        quad::integrate(both_signs, vmax, 2.0 * vmax, opt.quad_tol).value;
    v_integral += shell;
    vmax *= 2.0;
    if (std::abs(shell) <= opt.tail_fraction * std::max(std::abs(v_integral), 1e-300))
      ++quiet_shells;
    else
      quiet_shells = 0;
  }

  SpectralAverageReport rep;
  rep.v_max = vmax;
  rep.lhs = std::pow(static_cast<double>(nx), 1.0 + 0.5 * s) * v_integral;

  // ---- energy side
  const EigenSystem es0 = diagonalize_dense(h0);
  const OccupiedSector sec = occupied_sector(op, *u_index);
  const int np = static_cast<int>(sec.indices.size());
  Eigen::MatrixXd u_rows(np, es0.dim());
  for (int r = 0; r < np; ++r)
    u_rows.row(r) = es0.eigenvectors.row(static_cast<Eigen::Index>(sec.indices[r]));
  const int px = sec.position_of(ix);

  std::vector<double> poles;
  for (std::size_t g = 0; g < es0.degeneracy_groups.size(); ++g)
    poles.push_back(es0.group_energy(static_cast<int>(g)));

  auto integrand = [&](double E) {
    // dodge exact level crossings of K_u(E)
    for (int attempt = 0; attempt < 2; ++attempt) {
      const double e = E + attempt * 1e-9;
      const double val = energy_side_integrand(es0, u_rows, sec, px,
                                               static_cast<int>(iy), e, s);
      if (std::isfinite(val)) return val;
    }
    return 0.0;
  };
  const auto er = quad::integrate_with_singularities(integrand, I.lo, I.hi, poles, s,
                                                     opt.quad_tol);
  rep.rhs = std::pow(std::abs(lambda), s - 1.0) * er.value;

  const double scale = std::max({std::abs(rep.lhs), std::abs(rep.rhs), 1e-300});
  rep.rel_gap = std::abs(rep.lhs - rep.rhs) / scale;
  rep.ok = rep.rel_gap <= opt.tol;
  return rep;
}

CheckReport correlator_from_gf_bound_mc(const EnsembleSpec& ens, const Configuration& x,
                                        const Configuration& y, const Site& u, Interval I,
                                        double s) {
  if (!(s > 0.0 && s < 1.0))
    throw std::invalid_argument("correlator_from_gf_bound_mc: s outside (0,1)");
  const ModelSpec& m = ens.model;
  const auto u_index = m.region.index_of(u);
  if (!u_index) throw std::invalid_argument("correlator_from_gf_bound_mc: u outside region");
  const int nx = occupation(x, u);
  if (nx < 1)
    throw std::invalid_argument("correlator_from_gf_bound_mc: x has no particle at u");

  const OperatorMatrix probe = assemble_realization(m, 0);
  const std::size_t ix = probe.index_of(x);
  const std::size_t iy = probe.index_of(y);
  std::vector<std::size_t> anchored;
  std::vector<double> occ_w;
  for (std::size_t idx = 0; idx < probe.dim(); ++idx) {
    const int occ = probe.occupation_at(idx, *u_index);
    if (occ >= 1) {
      anchored.push_back(idx);
      occ_w.push_back(std::pow(static_cast<double>(occ) / nx, 0.5 * s));
    }
  }

  const std::size_t M = static_cast<std::size_t>(ens.M);
  std::vector<double> q_samples(M), g_samples(M);
  parallel_for(M, ens.threads, [&](std::size_t r) {
    const OperatorMatrix op = assemble_realization(m, r);
    const EigenSystem es = diagonalize(op);
    q_samples[r] = correlator(es, static_cast<int>(ix), static_cast<int>(iy), I, s);
    KahanSum acc;
    for (std::size_t wi = 0; wi < anchored.size(); ++wi) {
      const double integral = detail::frac_green_integral(
          es, static_cast<int>(iy), static_cast<int>(anchored[wi]), I, s, 1e-6);
      acc.add(occ_w[wi] * integral);
    }
    g_samples[r] = acc.value();
  });

  const MomentEstimate qe = estimate_from_samples(q_samples);
  const MomentEstimate ge = estimate_from_samples(g_samples);
  const RegularityConstants rc = regularity_constants(m.disorder);
  const double pref =
      rc.K * std::pow(rc.E0, s) / std::pow(std::abs(m.disorder.lambda), 1.0 - s);

  CheckReport rep;
  rep.name = "correlator-vs-green";
  rep.lhs = nx * qe.mean;
  rep.lhs_se = nx * qe.std_error;
  rep.rhs = pref * ge.mean;
  rep.rhs_se = pref * ge.std_error;
  rep.seed = m.disorder.seed;
  rep.status = judge_inequality(rep.lhs, rep.rhs,
                                std::hypot(rep.lhs_se, rep.rhs_se));
  std::ostringstream os;
  os << "x=" << to_json(x) << " y=" << to_json(y) << " I=[" << I.lo << "," << I.hi
     << "] s=" << s << " M=" << M;
  rep.query = os.str();
  return rep;
}

CheckReport tail_bound_check(const EnsembleSpec& ens, const Configuration& x, double E) {
  if (!(E >= 0)) throw std::invalid_argument("tail_bound_check: E must be >= 0");
  const ModelSpec& m = ens.model;
  const OperatorMatrix probe = assemble_realization(m, 0);
  const std::size_t ix = probe.index_of(x);

  const std::size_t M = static_cast<std::size_t>(ens.M);
  std::vector<double> samples(M);
  parallel_for(M, ens.threads, [&](std::size_t r) {
    const OperatorMatrix op = assemble_realization(m, r);
    const EigenSystem es = diagonalize(op);
    double acc = 0.0;
    for (int i = 0; i < es.dim(); ++i) {
      if (std::abs(es.eigenvalues[i]) >= E) {
        const double a = es.eigenvectors(static_cast<Eigen::Index>(ix), i);
        acc += a * a;
      }
    }
    samples[r] = acc;
  });

  const MomentEstimate me = estimate_from_samples(samples);
  const double ubound = interaction_norm_bound(m.interaction, m.n, m.region.dim());
  const double rate = std::min(1.0, 1.0 / (m.n * std::abs(m.disorder.lambda)));
  const double rhs =
      exp_abs_moment(m.disorder) * std::exp(rate * (2.0 * m.region.dim() * m.n + ubound - E));

  CheckReport rep;
  rep.name = "spectral-tail";
  rep.lhs = me.mean;
  rep.lhs_se = me.std_error;
  rep.rhs = rhs;
  rep.seed = m.disorder.seed;
  rep.status = judge_inequality(rep.lhs, rep.rhs, me.std_error);
  std::ostringstream os;
  os << "x=" << to_json(x) << " E=" << E << " M=" << M;
  rep.query = os.str();
  return rep;
}

}  // namespace mploc
