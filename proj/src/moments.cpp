#include "mploc/moments.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "mploc/quadrature.hpp"
#include "quadrature_fwd.hpp"

namespace mploc {

std::vector<double> EnergySampling::grid() const {
  if (!I) throw std::invalid_argument("EnergySampling: no interval configured");
  if (!I->bounded()) throw std::invalid_argument("EnergySampling: interval must be bounded");
  const double len = I->length();
  const int n = std::max(1, static_cast<int>(std::lround(nodes_per_unit * len)));
  std::vector<double> nodes(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) nodes[static_cast<std::size_t>(j)] = I->lo + (j + 0.5) * len / n;
  return nodes;
}

Eigen::MatrixXd moment_samples(const EnsembleSpec& ens,
                               const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                               double s) {
  if (ens.M < 1) throw std::invalid_argument("moment_samples: M must be >= 1");
  const std::size_t M = static_cast<std::size_t>(ens.M);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(pairs.size()));

  if (ens.energy.z) {
    // fixed spectral parameter: one resolvent solve per distinct source
    const std::complex<double> z = *ens.energy.z;
    std::vector<std::size_t> sources;
    for (const auto& pr : pairs) sources.push_back(pr.second);
    std::sort(sources.begin(), sources.end());
    sources.erase(std::unique(sources.begin(), sources.end()), sources.end());

    parallel_for(M, ens.threads, [&](std::size_t r) {
      try {
        const OperatorMatrix op = assemble_realization(ens.model, r);
        std::map<std::size_t, Eigen::VectorXcd> columns;
        for (std::size_t iy : sources) columns[iy] = green_column(op, iy, z);
        for (std::size_t p = 0; p < pairs.size(); ++p) {
          const auto val = columns[pairs[p].second][static_cast<Eigen::Index>(pairs[p].first)];
          out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p)) =
              std::pow(std::abs(val), s);
        }
      } catch (const std::exception& e) {
        throw std::runtime_error("realization " + std::to_string(r) + ": " + e.what());
      }
    });
    return out;
  }

  const std::vector<double> nodes = ens.energy.grid();
  const double eps = ens.energy.epsilon;
  parallel_for(M, ens.threads, [&](std::size_t r) {
    try {
      const OperatorMatrix op = assemble_realization(ens.model, r);
      const EigenSystem es = diagonalize(op);
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const int ix = static_cast<int>(pairs[p].first);
        const int iy = static_cast<int>(pairs[p].second);
        Eigen::VectorXd w(es.dim());
        for (int i = 0; i < es.dim(); ++i)
          w[i] = es.eigenvectors(ix, i) * es.eigenvectors(iy, i);
        KahanSum acc;
        for (double e : nodes) {
          std::complex<double> g = 0.0;
          const std::complex<double> z(e, eps);
          for (int i = 0; i < es.dim(); ++i) g += w[i] / (es.eigenvalues[i] - z);
          acc.add(std::pow(std::abs(g), s));
        }
        out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p)) =
            acc.value() / static_cast<double>(nodes.size());
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("realization " + std::to_string(r) + ": " + e.what());
    }
  });
  return out;
}

namespace {

MomentEstimate column_estimate(const Eigen::MatrixXd& samples, int col) {
  std::vector<double> vals(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index r = 0; r < samples.rows(); ++r)
    vals[static_cast<std::size_t>(r)] = samples(r, col);
  return estimate_from_samples(vals);
}

}  // namespace

MomentEstimate fractional_moment(const EnsembleSpec& ens, const Configuration& x,
                                 const Configuration& y, double s, std::complex<double> z) {
  if (!(s > 0.0 && s < 1.0))
    throw std::invalid_argument("fractional_moment: s outside (0,1)");
  const OperatorMatrix probe = assemble_realization(ens.model, 0);
  EnsembleSpec fixed = ens;
  fixed.energy.z = z;
  fixed.energy.I.reset();
  const Eigen::MatrixXd samples =
      moment_samples(fixed, {{probe.index_of(x), probe.index_of(y)}}, s);
  MomentEstimate e = column_estimate(samples, 0);
  e.s = s;
  e.seed = ens.model.disorder.seed;
  std::ostringstream os;
  os << "x=" << to_json(x) << " y=" << to_json(y) << " z=" << z.real() << "+"
     << z.imag() << "i";
  e.query = os.str();
  return e;
}

MomentEstimate averaged_moment(const EnsembleSpec& ens, const Configuration& x,
                               const Configuration& y, double s) {
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("averaged_moment: s outside (0,1)");
  if (!ens.energy.I) throw std::invalid_argument("averaged_moment: no interval configured");
  const OperatorMatrix probe = assemble_realization(ens.model, 0);
  const Eigen::MatrixXd samples =
      moment_samples(ens, {{probe.index_of(x), probe.index_of(y)}}, s);
  MomentEstimate e = column_estimate(samples, 0);
  e.s = s;
  e.seed = ens.model.disorder.seed;
  std::ostringstream os;
  os << "x=" << to_json(x) << " y=" << to_json(y) << " I=[" << ens.energy.I->lo << ","
     << ens.energy.I->hi << "] eps=" << ens.energy.epsilon
     << " nodes/unit=" << ens.energy.nodes_per_unit;
  e.query = os.str();
  return e;
}

namespace {

// |G(x,y;z)|^s with the potential at one or two sites replaced, via a
// dense solve on a diagonal-shifted copy.
struct ShiftedKernel {
  Eigen::MatrixXd h0;       // base Hamiltonian (dense)
  Eigen::VectorXd occ1, occ2;
  double base_v1 = 0.0, base_v2 = 0.0;
  double lambda = 0.0;
  int ix = 0, iy = 0;
  bool same_site = false;

  std::complex<double> green_at(double v1, double v2, std::complex<double> z) const {
    Eigen::MatrixXcd a = h0.cast<std::complex<double>>();
    a.diagonal() += (lambda * (v1 - base_v1)) * occ1.cast<std::complex<double>>();
    if (!same_site)
      a.diagonal() += (lambda * (v2 - base_v2)) * occ2.cast<std::complex<double>>();
    a.diagonal().array() -= z;
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(a.rows());
    rhs[iy] = 1.0;
    const Eigen::VectorXcd sol = a.partialPivLu().solve(rhs);
    return sol[ix];
  }
};

ShiftedKernel make_shifted_kernel(const OperatorMatrix& op, const DisorderField& field,
                                  const Region& region, double lambda,
                                  const Configuration& x, const Configuration& y,
                                  const Site& u1, const Site& u2) {
  ShiftedKernel k;
  k.h0 = op.dense();
  k.lambda = lambda;
  k.ix = static_cast<int>(op.index_of(x));
  k.iy = static_cast<int>(op.index_of(y));
  const auto i1 = region.index_of(u1);
  const auto i2 = region.index_of(u2);
  if (!i1 || !i2) throw std::invalid_argument("conditioning site outside region");
  k.same_site = *i1 == *i2;
  k.base_v1 = field.values[*i1];
  k.base_v2 = field.values[*i2];
  const auto dim = static_cast<Eigen::Index>(op.dim());
  k.occ1.resize(dim);
  k.occ2.resize(dim);
  for (Eigen::Index idx = 0; idx < dim; ++idx) {
    k.occ1[idx] = op.occupation_at(static_cast<std::size_t>(idx), *i1);
    k.occ2[idx] = op.occupation_at(static_cast<std::size_t>(idx), *i2);
  }
  return k;
}

}  // namespace

ConditionalMomentReport conditional_moment_bound(const EnsembleSpec& ens,
                                                 const Configuration& x,
                                                 const Configuration& y, double s,
                                                 std::complex<double> z, const Site& u1,
                                                 const Site& u2, int backgrounds,
                                                 int quad_nodes) {
  if (!(s > 0.0 && s < 1.0))
    throw std::invalid_argument("conditional_moment_bound: s outside (0,1)");
  const ModelSpec& m = ens.model;
  if (occupation(x, u1) < 1 || occupation(y, u2) < 1)
    throw std::invalid_argument("conditional_moment_bound: x must touch u1, y must touch u2");
  const RegularityConstants rc = regularity_constants(m.disorder);
  const auto [slo, shi] = density_support(m.disorder);
  const quad::GaussRule rule = quad::gauss_legendre(quad_nodes, slo, shi);
  const bool same = u1 == u2;

  ConditionalMomentReport rep;
  rep.sharp = same ? 1 : 2;
  rep.conditional_means.reserve(static_cast<std::size_t>(backgrounds));

  double c_weak = 0.0;
  for (int b = 0; b < backgrounds; ++b) {
    const DisorderField field =
        sample_disorder(m.disorder, m.region, static_cast<std::uint64_t>(b));
    const OperatorMatrix op = assemble(m.region, m.n, m.disorder, m.interaction, field);
    const ShiftedKernel kern =
        make_shifted_kernel(op, field, m.region, m.disorder.lambda, x, y, u1, u2);

    // conditional mean by density-weighted quadrature over the redrawn values
    KahanSum mean;
    if (same) {
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double v = rule.nodes[i];
        const double rho = density(m.disorder, v);
        if (rho == 0.0) continue;
        mean.add(rule.weights[i] * rho *
                 std::pow(std::abs(kern.green_at(v, v, z)), s));
      }
    } else {
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double rho1 = density(m.disorder, rule.nodes[i]);
        if (rho1 == 0.0) continue;
        KahanSum inner;
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
          const double rho2 = density(m.disorder, rule.nodes[j]);
          if (rho2 == 0.0) continue;
          inner.add(rule.weights[j] * rho2 *
                    std::pow(std::abs(kern.green_at(rule.nodes[i], rule.nodes[j], z)), s));
        }
        mean.add(rule.weights[i] * rho1 * inner.value());
      }
    }
    rep.conditional_means.push_back(mean.value());
    rep.worst_mean = std::max(rep.worst_mean, mean.value());

    // weak-L1 constant from the double-shift kernel around this background
    const int grid = 48;
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(grid) * grid);
    for (int i = 0; i < grid; ++i) {
      const double v1 = kern.base_v1 + rc.E0 * (-1.0 + (2.0 * i + 1.0) / grid);
      for (int j = 0; j < (same ? 1 : grid); ++j) {
        const double v2 = kern.base_v2 + rc.E0 * (-1.0 + (2.0 * j + 1.0) / grid);
        vals.push_back(std::abs(kern.green_at(v1, same ? v1 : v2, z)));
      }
    }
    std::sort(vals.begin(), vals.end(), std::greater<>());
    const double box = same ? 2.0 : 4.0;  // measure of the shift box / E0^#
    for (std::size_t k = 0; k < vals.size(); ++k) {
      const double w = box * static_cast<double>(k + 1) / static_cast<double>(vals.size());
      c_weak = std::max(c_weak, vals[k] * w * std::abs(m.disorder.lambda) * rc.E0);
    }
  }

  rep.c_weak = c_weak;
  rep.c_s = std::pow(4.0, 1.0 - s) * std::pow(c_weak, s) / (1.0 - s);
  rep.bound = rep.c_s * std::pow(rc.K * rc.E0, rep.sharp) /
              std::pow(std::abs(m.disorder.lambda) * rc.E0, s);
  rep.ok = rep.worst_mean <= rep.bound * (1.0 + 1e-9);
  return rep;
}

CheckReport double_sampling_check(const DisorderSpec& dspec,
                                  const std::function<double(double)>& h, double quad_tol) {
  const RegularityConstants rc = regularity_constants(dspec);
  const auto [slo, shi] = density_support(dspec);

  auto lhs_f = [&](double v) { return h(v) * density(dspec, v); };
  const double lhs = quad::integrate(lhs_f, slo, shi, quad_tol, 1e-14, 20000).value;

  auto rhs_inner = [&](double v) {
    auto g = [&](double vp) { return h(v + vp); };
    return quad::integrate(g, -rc.E0, rc.E0, quad_tol, 1e-14, 20000).value / rc.E0;
  };
  auto rhs_f = [&](double v) { return rhs_inner(v) * density(dspec, v); };
  const double rhs =
      rc.K * rc.E0 * quad::integrate(rhs_f, slo, shi, quad_tol, 1e-14, 20000).value;

  CheckReport rep;
  rep.name = "double-sampling";
  rep.lhs = lhs;
  rep.rhs = rhs;
  rep.tolerance = 1e-6;
  rep.status = lhs <= rhs * (1.0 + rep.tolerance) ? "pass" : "violated";
  return rep;
}

WegnerReport wegner_check(const EnsembleSpec& ens, const Configuration& x, const Site& u,
                          Interval I, int backgrounds, int quad_nodes) {
  const ModelSpec& m = ens.model;
  const int nu = occupation(x, u);
  if (nu < 1) throw std::invalid_argument("wegner_check: x has no particle at u");
  if (!I.bounded()) throw std::invalid_argument("wegner_check: interval must be bounded");
  const auto ui = m.region.index_of(u);
  if (!ui) throw std::invalid_argument("wegner_check: u outside region");
  const RegularityConstants rc = regularity_constants(m.disorder);
  const double bound = rc.rho_inf * I.length() / (std::abs(m.disorder.lambda) * nu);
  const auto [slo, shi] = density_support(m.disorder);

  WegnerReport rep;
  rep.bound = bound;

  // conditional branch: redraw the potential at u under the density
  double worst = 0.0;
  for (int b = 0; b < backgrounds; ++b) {
    const DisorderField field =
        sample_disorder(m.disorder, m.region, static_cast<std::uint64_t>(b));
    const OperatorMatrix op = assemble(m.region, m.n, m.disorder, m.interaction, field);
    const std::size_t ix = op.index_of(x);
    const Eigen::MatrixXd h0 = op.dense();
    Eigen::VectorXd occ(static_cast<Eigen::Index>(op.dim()));
    for (std::size_t idx = 0; idx < op.dim(); ++idx)
      occ[static_cast<Eigen::Index>(idx)] =
          static_cast<double>(op.occupation_at(idx, *ui));
    const double base_v = field.values[*ui];

    auto mu = [&](double v) {
      Eigen::MatrixXd h = h0;
      h.diagonal() += m.disorder.lambda * (v - base_v) * occ;
      const EigenSystem es = diagonalize_dense(h);
      double acc = 0.0;
      for (int i = 0; i < es.dim(); ++i) {
        if (!I.contains(es.eigenvalues[i])) continue;
        const double a = es.eigenvectors(static_cast<Eigen::Index>(ix), i);
        acc += a * a;
      }
      return acc * density(m.disorder, v);
    };
    (void)quad_nodes;
    const double avg = quad::integrate(mu, slo, shi, 1e-7, 1e-14, 6000).value;
    worst = std::max(worst, avg);
  }
  rep.conditional.name = "wegner-conditional";
  rep.conditional.lhs = worst;
  rep.conditional.rhs = bound;
  rep.conditional.tolerance = 1e-3;
  rep.conditional.status =
      worst <= bound * (1.0 + rep.conditional.tolerance) ? "pass" : "violated";

  // full average over the disorder
  const std::size_t M = static_cast<std::size_t>(ens.M);
  std::vector<double> samples(M);
  const OperatorMatrix probe = assemble_realization(m, 0);
  const std::size_t ix = probe.index_of(x);
  parallel_for(M, ens.threads, [&](std::size_t r) {
    const OperatorMatrix op = assemble_realization(m, r);
    const EigenSystem es = diagonalize(op);
    double acc = 0.0;
    for (int i = 0; i < es.dim(); ++i) {
      if (!I.contains(es.eigenvalues[i])) continue;
      const double a = es.eigenvectors(static_cast<Eigen::Index>(ix), i);
      acc += a * a;
    }
    samples[r] = acc;
  });
  const MomentEstimate me = estimate_from_samples(samples);
  rep.averaged.name = "wegner-averaged";
  rep.averaged.lhs = me.mean;
  rep.averaged.lhs_se = me.std_error;
  rep.averaged.rhs = bound;
  rep.averaged.status = judge_inequality(me.mean, bound, me.std_error);
  return rep;
}

WeakL1Report weak_l1_tail(const EnsembleSpec& ens, const Configuration& x,
                          const Configuration& y, const Site& u1, const Site& u2,
                          std::complex<double> z, int grid) {
  const ModelSpec& m = ens.model;
  const RegularityConstants rc = regularity_constants(m.disorder);
  const DisorderField field = sample_disorder(m.disorder, m.region, 0);
  const OperatorMatrix op = assemble(m.region, m.n, m.disorder, m.interaction, field);
  const ShiftedKernel kern =
      make_shifted_kernel(op, field, m.region, m.disorder.lambda, x, y, u1, u2);

  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(grid) * grid);
  for (int i = 0; i < grid; ++i) {
    const double v1 = kern.base_v1 + rc.E0 * (-1.0 + (2.0 * i + 1.0) / grid);
    for (int j = 0; j < grid; ++j) {
      const double v2 = kern.base_v2 + rc.E0 * (-1.0 + (2.0 * j + 1.0) / grid);
      vals.push_back(std::abs(kern.green_at(v1, v2, z)));
    }
  }
  std::sort(vals.begin(), vals.end(), std::greater<>());

  WeakL1Report rep;
  // order statistics: measure{|G'| >= vals[k]} = 4 (k+1)/total
  std::vector<double> log_t, log_w;
  const std::size_t total = vals.size();
  for (double frac = 0.005; frac <= 0.2; frac *= 1.5) {
    const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(frac * total));
    if (k >= total) break;
    const double w = 4.0 * static_cast<double>(k) / static_cast<double>(total);
    if (!(vals[k] > 0)) continue;
    log_t.push_back(std::log(vals[k]));
    log_w.push_back(std::log(w));
    rep.c_fit = std::max(rep.c_fit, vals[k] * w * std::abs(m.disorder.lambda) * rc.E0);
  }
  const LineFit fit = line_fit(log_t, log_w);
  rep.slope = fit.slope;
  rep.ok = fit.ok && std::abs(fit.slope + 1.0) <= 0.1;
  return rep;
}

}  // namespace mploc
