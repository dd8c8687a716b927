#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "mploc/correlator.hpp"
#include "mploc/rng.hpp"
#include "mploc/spectral.hpp"

using namespace mploc;

namespace {

DisorderSpec uniform01(double lambda, std::uint64_t seed) {
  DisorderSpec d;
  d.lambda = lambda;
  d.seed = seed;
  return d;
}

OperatorMatrix small_instance(int sites, int n, double lambda, std::uint64_t seed,
                              std::uint64_t realization = 0, double alpha = 0.0) {
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
  return assemble_realization(m, realization);
}

}  // namespace

TEST_CASE("diagonalize small instances") {
  Eigen::MatrixXd h2(2, 2);
  h2 << 2, -1, -1, 2;
  const EigenSystem e2 = diagonalize_dense(h2);
  CHECK(e2.eigenvalues[0] == doctest::Approx(1.0));
  CHECK(e2.eigenvalues[1] == doctest::Approx(3.0));

  Eigen::MatrixXd h1(1, 1);
  h1 << -4.5;
  CHECK(diagonalize_dense(h1).eigenvalues[0] == doctest::Approx(-4.5));

  // Kronecker sum of [[2,-1],[-1,2]] with itself: {2,4,4,6} with a
  // twofold group in the middle
  Eigen::MatrixXd h4 = Eigen::MatrixXd::Zero(4, 4);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          h4(i * 2 + k, j * 2 + l) = h2(i, j) * id(k, l) + id(i, j) * h2(k, l);
  const EigenSystem e4 = diagonalize_dense(h4);
  CHECK(e4.eigenvalues[0] == doctest::Approx(2.0));
  CHECK(e4.eigenvalues[1] == doctest::Approx(4.0));
  CHECK(e4.eigenvalues[2] == doctest::Approx(4.0));
  CHECK(e4.eigenvalues[3] == doctest::Approx(6.0));
  REQUIRE(e4.degeneracy_groups.size() == 3);
  CHECK(e4.degeneracy_groups[1] == std::pair<int, int>{1, 3});

  // residuals and orthonormality
  for (int i = 0; i < 4; ++i) {
    const Eigen::VectorXd v = e4.eigenvectors.col(i);
    CHECK((h4 * v - e4.eigenvalues[i] * v).norm() <= 1e-10 * h4.norm());
  }
  CHECK((e4.eigenvectors.transpose() * e4.eigenvectors -
         Eigen::MatrixXd::Identity(4, 4))
            .cwiseAbs()
            .maxCoeff() <= 1e-10);
}

TEST_CASE("dense cap enforced") {
  const OperatorMatrix op = small_instance(3, 2, 1.0, 5);
  CHECK_THROWS(diagonalize(op, 4));
}

TEST_CASE("green function scalar and 2x2 oracles") {
  const OperatorMatrix h1 = small_instance(1, 1, 3.0, 11);
  const double a = h1.dense()(0, 0);
  const Configuration x0{{ {0} }};
  const std::complex<double> zi(0.0, 1.0);
  CHECK(std::abs(green(h1, x0, x0, zi) - 1.0 / (a - zi)) <= 1e-12);

  // hand-inverted 2x2 at z = 0
  ModelSpec m;
  m.region = Region::from_sites(1, {{0}, {1}});
  m.n = 1;
  m.disorder = uniform01(0.0, 1);
  const OperatorMatrix h2 = assemble_realization(m, 0);
  CHECK(std::abs(green(h2, x0, x0, 0.0) - 2.0 / 3.0) <= 1e-12);

  // conjugation symmetry
  const std::complex<double> z(0.7, 0.3);
  const std::complex<double> g = green(h2, 0, 1, z);
  const std::complex<double> gc = green(h2, 0, 1, std::conj(z));
  CHECK(std::abs(gc - std::conj(g)) <= 1e-12);
}

TEST_CASE("sparse solve agrees with the eigen-expansion") {
  rng::Sequence seq(3);
  for (int trial = 0; trial < 25; ++trial) {
    const OperatorMatrix op = small_instance(3, 2, 2.0, 100 + trial, 0, 0.4);
    const EigenSystem es = diagonalize(op);
    const std::complex<double> z(seq.next_range(-2, 8), seq.next_range(0.05, 1.0));
    const int ix = static_cast<int>(seq.next_int(0, 8));
    const int iy = static_cast<int>(seq.next_int(0, 8));
    const std::complex<double> g_solve =
        green(op, static_cast<std::size_t>(ix), static_cast<std::size_t>(iy), z);
    const std::complex<double> g_eig = green(es, ix, iy, z);
    CHECK(std::abs(g_solve - g_eig) <= 1e-8 * std::max(1.0, std::abs(g_eig)));
  }
}

TEST_CASE("green symmetry in x,y") {
  const OperatorMatrix op = small_instance(4, 1, 1.5, 9);
  const std::complex<double> z(1.0, 0.4);
  CHECK(std::abs(green(op, 1, 3, z) - green(op, 3, 1, z)) <= 1e-12);
}

TEST_CASE("resolvent identity on a random instance") {
  const OperatorMatrix op = small_instance(3, 1, 2.0, 31);
  const std::complex<double> z1(0.5, 0.7), z2(3.0, -0.2);
  // G(z1) - G(z2) = (z1-z2) G(z1) G(z2), entry (0, 2)
  std::complex<double> direct = green(op, 0, 2, z1) - green(op, 0, 2, z2);
  std::complex<double> product = 0.0;
  for (std::size_t w = 0; w < op.dim(); ++w)
    product += green(op, 0, w, z1) * green(op, w, 2, z2);
  CHECK(std::abs(direct - (z1 - z2) * product) <= 1e-8);
}

TEST_CASE("green near-singular solve is reported") {
  const OperatorMatrix op = small_instance(2, 1, 0.0, 1);
  const EigenSystem es = diagonalize(op);
  CHECK_THROWS(green(op, 0, 1, std::complex<double>(es.eigenvalues[0], 0.0)));
}

TEST_CASE("time evolution kernel basics") {
  const OperatorMatrix op = small_instance(3, 2, 1.0, 41, 0, 0.2);
  const EigenSystem es = diagonalize(op);
  CHECK(std::abs(evolve_kernel(es, 4, 4, Interval::all(), 0.0) - 1.0) <= 1e-12);
  CHECK(std::abs(evolve_kernel(es, 4, 5, Interval::all(), 0.0)) <= 1e-12);

  rng::Sequence seq(8);
  for (int rep = 0; rep < 10; ++rep) {
    const double t = seq.next_range(-30, 30);
    double total = 0.0;
    for (int iy = 0; iy < es.dim(); ++iy)
      total += std::norm(evolve_kernel(es, 2, iy, Interval::all(), t));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("evolution kernel dominated by the correlator") {
  rng::Sequence seq(15);
  for (int trial = 0; trial < 20; ++trial) {
    const OperatorMatrix op = small_instance(3, 1, 1.5, 200 + trial);
    const EigenSystem es = diagonalize(op);
    const Interval I = Interval::of(0.0, seq.next_range(2.0, 6.0));
    const int ix = static_cast<int>(seq.next_int(0, 2));
    const int iy = static_cast<int>(seq.next_int(0, 2));
    const double q = correlator(es, ix, iy, I, 1.0);
    for (int k = 0; k < 20; ++k) {
      const double t = seq.next_range(-50, 50);
      CHECK(std::abs(evolve_kernel(es, ix, iy, I, t)) <= q + 1e-10);
    }
  }
}

TEST_CASE("representative configurations") {
  // single configuration always qualifies
  const OperatorMatrix h1 = small_instance(1, 1, 2.0, 61);
  const EigenSystem e1 = diagonalize(h1);
  CHECK(representative_configs(e1, e1.eigenvalues[0], h1).size() == 1);

  // nonempty at every eigenvalue across random instances
  for (int trial = 0; trial < 50; ++trial) {
    const OperatorMatrix op = small_instance(3, 1, 1.0, 300 + trial);
    const EigenSystem es = diagonalize(op);
    for (std::size_t g = 0; g < es.degeneracy_groups.size(); ++g) {
      const auto reps =
          representative_configs(es, es.group_energy(static_cast<int>(g)), op);
      CHECK(!reps.empty());
    }
  }

  // permutation-degenerate free pair level: both orderings qualify
  const OperatorMatrix op2 = small_instance(2, 2, 2.0, 91);
  const EigenSystem es2 = diagonalize(op2);
  REQUIRE(es2.degeneracy_groups.size() == 3);  // E1+E1, E1+E2 twice, E2+E2
  const auto reps = representative_configs(es2, es2.group_energy(1), op2);
  bool has01 = false, has10 = false;
  for (const auto& c : reps) {
    if (c.pts == std::vector<Site>{{0}, {1}}) has01 = true;
    if (c.pts == std::vector<Site>{{1}, {0}}) has10 = true;
  }
  CHECK(has01);
  CHECK(has10);

  CHECK_THROWS(representative_configs(es2, 1e9, op2));
}

TEST_CASE("spectrum csv export") {
  const OperatorMatrix op = small_instance(2, 1, 1.0, 71);
  const EigenSystem es = diagonalize(op);
  write_spectrum_csv(es, "test_spectrum.csv");
  std::ifstream in("test_spectrum.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "index,eigenvalue");
}
