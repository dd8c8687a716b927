#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "mploc/correlator.hpp"
#include "mploc/rng.hpp"

using namespace mploc;

namespace {

DisorderSpec uniform01(double lambda, std::uint64_t seed) {
  DisorderSpec d;
  d.lambda = lambda;
  d.seed = seed;
  return d;
}

ModelSpec chain_model(int sites, int n, double lambda, std::uint64_t seed,
                      double alpha = 0.0) {
  std::vector<Site> list;
  for (Coord i = 0; i < sites; ++i) list.push_back({i});
  ModelSpec m;
  m.region = Region::from_sites(1, list);
  m.n = n;
  m.disorder = uniform01(lambda, seed);
  if (alpha != 0.0) {
    m.interaction.alphas = {alpha};
    m.interaction.range = 1;
  }
  return m;
}

struct Instance {
  OperatorMatrix op;
  EigenSystem es;
};

Instance random_instance(rng::Sequence& seq, int max_sites = 4) {
  const int sites = 2 + static_cast<int>(seq.next_int(0, max_sites - 2));
  const int n = sites <= 3 ? 1 + static_cast<int>(seq.next_int(0, 1)) : 1;
  const double lambda = seq.next_range(0.5, 6.0);
  const double alpha = seq.next_unit() < 0.4 ? seq.next_range(-0.5, 0.5) : 0.0;
  ModelSpec m = chain_model(sites, n, lambda, seq.next_u64() % 100000, alpha);
  Instance inst{assemble_realization(m, 0), {}};
  inst.es = diagonalize(inst.op);
  return inst;
}

// closed form of int_{v in [v0,v1]} |v|^{-s} dv
double power_window(double v0, double v1, double s) {
  auto F = [&](double v) {
    return (v >= 0 ? 1.0 : -1.0) * std::pow(std::abs(v), 1.0 - s) / (1.0 - s);
  };
  return F(v1) - F(v0);
}

}  // namespace

TEST_CASE("correlator closed forms") {
  // completeness at s=0 on the diagonal
  Eigen::MatrixXd h2(2, 2);
  h2 << 2, -1, -1, 2;
  const EigenSystem es = diagonalize_dense(h2);
  CHECK(correlator(es, 0, 0, Interval::all(), 0.0) == doctest::Approx(1.0));

  // window below the spectrum
  CHECK(correlator(es, 0, 1, Interval::of(-10.0, 0.0), 0.7) == 0.0);

  // eigenvectors (1,1)/sqrt2, (1,-1)/sqrt2: off-diagonal projections +-1/2
  CHECK(correlator(es, 0, 1, Interval::all(), 1.0) == doctest::Approx(1.0));
}

TEST_CASE("correlator bounds and interval monotonicity") {
  rng::Sequence seq(2);
  for (int trial = 0; trial < 100; ++trial) {
    Instance inst = random_instance(seq);
    const int dim = inst.es.dim();
    const int ix = static_cast<int>(seq.next_int(0, dim - 1));
    const int iy = static_cast<int>(seq.next_int(0, dim - 1));
    const Interval I = Interval::of(seq.next_range(-1, 3), seq.next_range(3, 9));
    CHECK(correlator(inst.es, ix, iy, I, 0.0) <= 1.0 + 1e-12);
    CHECK(correlator(inst.es, ix, iy, I, 1.0) <= 1.0 + 1e-12);
    const Interval wider = Interval::of(I.lo - 2.0, I.hi + 2.0);
    const double s = seq.next_range(0.0, 1.0);
    CHECK(correlator(inst.es, ix, iy, I, s) <=
          correlator(inst.es, ix, iy, wider, s) + 1e-12);
  }
}

TEST_CASE("log-convexity and exponent monotonicity") {
  rng::Sequence seq(4);

  // equal endpoints degenerate to equality
  Instance inst0 = random_instance(seq);
  const auto eq = check_logconvexity(inst0.es, 0, 1, Interval::all(), 0.4, 0.4, 0.3);
  CHECK(eq.ok);
  CHECK(std::abs(eq.worst_gap) <= 1e-12);

  for (int trial = 0; trial < 100; ++trial) {
    Instance inst = random_instance(seq);
    const int dim = inst.es.dim();
    const int ix = static_cast<int>(seq.next_int(0, dim - 1));
    const int iy = static_cast<int>(seq.next_int(0, dim - 1));
    const double s0 = seq.next_range(0.0, 1.0);
    const double s1 = seq.next_range(0.0, 1.0);
    const double theta = seq.next_unit();
    const auto rep = check_logconvexity(inst.es, ix, iy, Interval::all(), s0, s1, theta);
    INFO(rep.counterexample);
    CHECK(rep.ok);
  }

  // Q(1) <= Q(1/2) when interpolating toward the endpoint
  Instance inst = random_instance(seq);
  const double qh = correlator(inst.es, 0, 1, Interval::all(), 0.5);
  const double q1 = correlator(inst.es, 0, 1, Interval::all(), 1.0);
  CHECK(q1 <= qh + 1e-12);
}

TEST_CASE("bounded multipliers dominated by the correlator") {
  rng::Sequence seq(6);
  for (int trial = 0; trial < 200; ++trial) {
    Instance inst = random_instance(seq);
    const int dim = inst.es.dim();
    const int ix = static_cast<int>(seq.next_int(0, dim - 1));
    const int iy = static_cast<int>(seq.next_int(0, dim - 1));
    // random spectral multiplier with |f| <= 1
    double val = 0.0;
    for (std::size_t g = 0; g < inst.es.degeneracy_groups.size(); ++g) {
      const double f = seq.next_range(-1.0, 1.0);
      val += f * inst.es.projection(static_cast<int>(g), ix, iy);
    }
    CHECK(std::abs(val) <=
          correlator(inst.es, ix, iy, Interval::all(), 1.0) + 1e-10);
  }
}

TEST_CASE("green integral bounded by the correlator: scalar closed form") {
  // one site: H = [a], I = [a-1, a+1], s = 1/2:
  // lhs = int |a-E|^{-1/2} dE = 4, rhs = 2 * 2^{1/2} / (1/2) * 1
  ModelSpec m = chain_model(1, 1, 2.0, 7);
  const OperatorMatrix op = assemble_realization(m, 0);
  const EigenSystem es = diagonalize(op);
  const double a = es.eigenvalues[0];
  const auto rep =
      gf_from_correlator_bound(es, 0, 0, Interval::of(a - 1.0, a + 1.0), 0.5);
  CHECK(rep.lhs == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(rep.rhs == doctest::Approx(4.0 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(rep.status == "pass");
}

TEST_CASE("green integral bounded by the correlator: random instances") {
  rng::Sequence seq(8);
  for (int trial = 0; trial < 60; ++trial) {
    Instance inst = random_instance(seq);
    const int dim = inst.es.dim();
    const int ix = static_cast<int>(seq.next_int(0, dim - 1));
    const int iy = static_cast<int>(seq.next_int(0, dim - 1));
    const double s = seq.next_range(0.15, 0.85);
    const double lo = seq.next_range(-2.0, 5.0);
    const Interval I = Interval::of(lo, lo + seq.next_range(0.5, 4.0));
    const auto rep = gf_from_correlator_bound(inst.es, ix, iy, I, s);
    INFO("lhs=" << rep.lhs << " rhs=" << rep.rhs);
    CHECK(rep.status == "pass");
  }

  // window far below a tightly clustered spectrum: both sides small
  ModelSpec m = chain_model(2, 1, 0.2, 19);
  const OperatorMatrix op = assemble_realization(m, 0);
  const EigenSystem es = diagonalize(op);
  const auto rep = gf_from_correlator_bound(es, 0, 1, Interval::of(-60.0, -50.0), 0.5);
  CHECK(rep.lhs <= rep.rhs);
  CHECK(rep.lhs <= 1e-1);
}

TEST_CASE("level-set measure equals the closed form") {
  const auto r1 = boole_check({1.0}, {0.0}, 2.0);
  CHECK(r1.lhs == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r1.status == "pass");

  const auto r2 = boole_check({1.0, 1.0}, {0.0, 1.0}, 1.0);
  CHECK(r2.lhs == doctest::Approx(4.0).epsilon(1e-8));
  CHECK(r2.status == "pass");

  const auto r3 = boole_check({0.3, 0.7}, {-2.0, 5.0}, 0.25);
  CHECK(r3.lhs == doctest::Approx(8.0).epsilon(1e-8));
  CHECK(r3.status == "pass");

  rng::Sequence seq(10);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(seq.next_int(0, 4));
    std::vector<double> p, x;
    for (int k = 0; k < n; ++k) {
      p.push_back(seq.next_range(0.05, 2.0));
      x.push_back(seq.next_range(-8.0, 8.0));
    }
    const double t = seq.next_range(0.05, 3.0);
    const auto rep = boole_check(p, x, t);
    INFO("measure=" << rep.lhs << " closed=" << rep.rhs);
    CHECK(rep.status == "pass");
  }
}

TEST_CASE("layer-cake identity for fractional powers") {
  // sum a_i^s = int_0^infty #{a_i > t} d(t^s), spot-checked numerically
  rng::Sequence seq(12);
  std::vector<double> a;
  for (int i = 0; i < 12; ++i) a.push_back(seq.next_range(0.01, 5.0));
  const double s = 0.6;
  double direct = 0.0;
  for (double v : a) direct += std::pow(v, s);
  auto count_above = [&](double t) {
    double c = 0;
    for (double v : a)
      if (v > t) ++c;
    return c;
  };
  // d(t^s) = s t^{s-1} dt, integrable singularity at 0
  const auto integral = quad::integrate_singular_left(
      [&](double t) { return count_above(t) * s * std::pow(t, s - 1.0); }, 0.0, 6.0,
      1.0 - s);
  CHECK(integral.value == doctest::Approx(direct).epsilon(1e-6));
}

TEST_CASE("single-site averaging identity: scalar closed form") {
  // one site, one particle: both sides reduce to the same power-window
  // integral, evaluated here in closed form
  ModelSpec m = chain_model(1, 1, 3.0, 23);
  const OperatorMatrix op = assemble_realization(m, 0);
  const double a = op.dense()(0, 0);
  const double lambda = 3.0;
  const double s = 0.5;
  const Interval I = Interval::of(a - 0.7, a + 2.1);

  const Configuration x0{{ {0} }};
  const auto rep = spectral_average_check(m.region, 1, {0}, x0, x0, I, s, m.disorder,
                                          m.interaction, 0);
  // closed form: shifted eigenvalue a + lambda v lies in I iff
  // v in [(I.lo-a)/lambda, (I.hi-a)/lambda]
  const double закрытая = power_window((I.lo - a) / lambda, (I.hi - a) / lambda, s);
  CHECK(rep.lhs == doctest::Approx(закрытая).epsilon(1e-3));
  CHECK(rep.rhs == doctest::Approx(закрытая).epsilon(1e-3));
  CHECK(rep.ok);
}

TEST_CASE("single-site averaging identity: two sites, one particle") {
  ModelSpec m = chain_model(2, 1, 2.0, 29);
  const Configuration x0{{ {0} }};
  const Configuration y1{{ {1} }};
  const auto rep = spectral_average_check(m.region, 1, {0}, x0, y1,
                                          Interval::of(0.0, 4.0), 0.5, m.disorder,
                                          m.interaction, 0);
  INFO("lhs=" << rep.lhs << " rhs=" << rep.rhs << " gap=" << rep.rel_gap);
  CHECK(rep.ok);
}

TEST_CASE("single-site averaging identity: double occupation prefactor") {
  ModelSpec m = chain_model(2, 2, 2.0, 31, 0.3);
  const Configuration x00{{ {0}, {0} }};
  const Configuration y01{{ {0}, {1} }};
  const auto rep = spectral_average_check(m.region, 2, {0}, x00, y01,
                                          Interval::of(2.0, 7.0), 0.5, m.disorder,
                                          m.interaction, 0);
  INFO("lhs=" << rep.lhs << " rhs=" << rep.rhs << " gap=" << rep.rel_gap);
  CHECK(rep.ok);
}

TEST_CASE("correlator bounded through green moments over the ensemble") {
  EnsembleSpec ens;
  ens.model = chain_model(3, 2, 50.0, 37, 0.2);
  ens.M = 400;
  const Configuration x{{ {0}, {1} }};
  const Configuration y{{ {2}, {2} }};
  const double mu = 4.0 + 25.0;  // near the spectral bulk
  const auto rep = correlator_from_gf_bound_mc(ens, x, y, {0},
                                               Interval::of(mu - 1.0, mu + 1.0), 0.5);
  INFO("lhs=" << rep.lhs << " rhs=" << rep.rhs);
  CHECK(rep.status == "pass");

  // empty spectral window: lhs vanishes
  const auto far = correlator_from_gf_bound_mc(ens, x, y, {0},
                                               Interval::of(-500.0, -499.0), 0.5);
  CHECK(far.lhs == 0.0);
  CHECK(far.status == "pass");
}

TEST_CASE("spectral tail bound") {
  EnsembleSpec ens;
  ens.model = chain_model(4, 1, 5.0, 41);
  ens.M = 200;
  const Configuration x{{ {1} }};

  // E = 0: full projection, and the bound is at least one
  const auto full = tail_bound_check(ens, x, 0.0);
  CHECK(full.lhs == doctest::Approx(1.0));
  CHECK(full.rhs >= 1.0);
  CHECK(full.status == "pass");

  // unreachable energy: operator norm <= 2d + lambda max V
  const auto empty = tail_bound_check(ens, x, 30.0);
  CHECK(empty.lhs == 0.0);
  CHECK(empty.status == "pass");

  // interacting sweep: monotone nonincreasing, never above the bound
  EnsembleSpec ens2;
  ens2.model = chain_model(3, 2, 2.0, 43, 0.4);
  ens2.M = 150;
  const Configuration x2{{ {0}, {1} }};
  double prev = 2.0;
  for (double e = 0.0; e <= 18.0; e += 2.0) {
    const auto rep = tail_bound_check(ens2, x2, e);
    CHECK(rep.status == "pass");
    CHECK(rep.lhs <= prev + 1e-12);
    prev = rep.lhs;
  }
}
