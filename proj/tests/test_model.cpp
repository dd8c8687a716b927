#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>

#include <Eigen/Dense>

#include "mploc/model.hpp"
#include "mploc/rng.hpp"
#include "mploc/spectral.hpp"

using namespace mploc;

namespace {

DisorderSpec uniform01(double lambda = 1.0, std::uint64_t seed = 1) {
  DisorderSpec d;
  d.kind = DistKind::Uniform;
  d.a = 0;
  d.b = 1;
  d.lambda = lambda;
  d.seed = seed;
  return d;
}

Configuration cfg1(std::initializer_list<Coord> xs) {
  Configuration c;
  for (Coord x : xs) c.pts.push_back({x});
  return c;
}

// window-integral check of the density regularity on a grid
void check_regularity(const DisorderSpec& spec) {
  const RegularityConstants rc = regularity_constants(spec);
  const auto [lo, hi] = density_support(spec);
  for (int i = 0; i <= 200; ++i) {
    const double v = lo + (hi - lo) * i / 200.0;
    const double rho = density(spec, v);
    if (rho == 0.0) continue;
    const int nq = 4000;
    double integral = 0.0;
    double prev = density(spec, v - rc.E0);
    for (int q = 1; q <= nq; ++q) {
      const double u = -rc.E0 + 2.0 * rc.E0 * q / nq;
      const double cur = density(spec, v - u);
      integral += 0.5 * (prev + cur) * 2.0 * rc.E0 / nq;
      prev = cur;
    }
    CHECK(rho <= rc.K * integral * (1 + 1e-6));
  }
}

}  // namespace

TEST_CASE("regularity constants per distribution") {
  const RegularityConstants u1 = regularity_constants(uniform01());
  CHECK(u1.K == doctest::Approx(1.0));
  CHECK(u1.E0 == doctest::Approx(1.0));
  CHECK(u1.rho_inf == doctest::Approx(1.0));
  check_regularity(uniform01());

  DisorderSpec u02 = uniform01();
  u02.b = 2;
  CHECK(regularity_constants(u02).rho_inf == doctest::Approx(0.5));
  check_regularity(u02);

  DisorderSpec g;
  g.kind = DistKind::Gaussian;
  g.mean = 0;
  g.stddev = 1;
  CHECK(regularity_constants(g).rho_inf == doctest::Approx(0.3989422804014327));
  check_regularity(g);

  DisorderSpec tri;
  tri.kind = DistKind::CustomDensity;
  tri.table_v = {0.0, 0.5, 1.0};
  tri.table_rho = {0.0, 2.0, 0.0};
  check_regularity(tri);

  DisorderSpec bad;
  bad.kind = DistKind::CustomDensity;
  bad.table_v = {0.0, 1.0};
  bad.table_rho = {0.0, 0.0};
  CHECK_THROWS(regularity_constants(bad));
}

TEST_CASE("exp moment closed forms") {
  // uniform(0,1): integral of e^v = e - 1
  CHECK(exp_abs_moment(uniform01()) == doctest::Approx(std::exp(1.0) - 1.0));
  DisorderSpec g;
  g.kind = DistKind::Gaussian;
  g.mean = 0;
  g.stddev = 1;
  // 2 e^{1/2} Phi(1)
  CHECK(exp_abs_moment(g) ==
        doctest::Approx(2.0 * std::exp(0.5) * 0.5 * std::erfc(-1.0 / std::sqrt(2.0))));
}

TEST_CASE("disorder sampling is reproducible and region-stable") {
  const Region small = Region::box(1, 2);
  const Region large = Region::box(1, 3);
  const DisorderSpec spec = uniform01(1.0, 99);

  const DisorderField a = sample_disorder(spec, small, 0);
  const DisorderField b = sample_disorder(spec, small, 0);
  CHECK(a.values == b.values);
  for (double v : a.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  const DisorderField c = sample_disorder(spec, small, 1);
  CHECK(a.values != c.values);

  // same site, same value, independent of the surrounding region
  const DisorderField big = sample_disorder(spec, large, 0);
  for (std::size_t i = 0; i < small.size(); ++i) {
    const auto j = large.index_of(small.site(i));
    REQUIRE(j.has_value());
    CHECK(a.values[i] == big.values[*j]);
  }
}

TEST_CASE("gaussian sampling has roughly the right moments") {
  DisorderSpec g;
  g.kind = DistKind::Gaussian;
  g.mean = 2.0;
  g.stddev = 0.5;
  g.seed = 3;
  const Region region = Region::box(1, 2000);
  const DisorderField f = sample_disorder(g, region, 0);
  double mean = 0;
  for (double v : f.values) mean += v;
  mean /= static_cast<double>(f.values.size());
  double var = 0;
  for (double v : f.values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(f.values.size() - 1);
  CHECK(mean == doctest::Approx(2.0).epsilon(0.02));
  CHECK(std::sqrt(var) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("occupation numbers") {
  CHECK(occupation(cfg1({0, 0, 3}), {0}) == 2);
  CHECK(occupation(cfg1({0, 0, 3}), {5}) == 0);
  CHECK(occupation(cfg1({1, 2}), {2}) == 1);
}

TEST_CASE("interaction energy examples") {
  InteractionSpec ispec;
  ispec.alphas = {1.0};
  ispec.range = 1;
  CHECK(interaction_energy(cfg1({0, 0}), ispec) == 0.0);   // one occupied site only
  CHECK(interaction_energy(cfg1({0, 1}), ispec) == 1.0);   // one admissible pair
  CHECK(interaction_energy(cfg1({0, 9}), ispec) == 0.0);   // out of range

  InteractionSpec off;
  off.alphas = {0.0};
  CHECK(interaction_energy(cfg1({0, 1}), off) == 0.0);
}

TEST_CASE("interaction energy equals whole-lattice cluster enumeration") {
  // independent oracle: enumerate every candidate cluster inside the
  // bounding window, not only footprint subsets
  InteractionSpec ispec;
  ispec.alphas = {0.7, -0.3};
  ispec.range = 2;
  rng::Sequence seq(17);
  for (int trial = 0; trial < 120; ++trial) {
    const int n = 2 + static_cast<int>(seq.next_int(0, 2));
    Configuration c;
    for (int j = 0; j < n; ++j) c.pts.push_back({seq.next_int(-3, 3)});
    double oracle = 0.0;
    for (int k = 2; k <= ispec.max_order(); ++k) {
      // all k-subsets of the window [-6,6]
      std::vector<Coord> window;
      for (Coord v = -6; v <= 6; ++v) window.push_back(v);
      std::vector<int> pick(static_cast<std::size_t>(k), 0);
      std::function<void(int, int)> rec = [&](int from, int depth) {
        if (depth == k) {
          Coord lo = window[static_cast<std::size_t>(pick[0])];
          Coord hi = window[static_cast<std::size_t>(pick[static_cast<std::size_t>(k - 1)])];
          if (hi - lo > ispec.range) return;
          double prod = 1.0;
          for (int i = 0; i < k; ++i)
            if (occupation(c, {window[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])]}) == 0)
              prod = 0.0;
          oracle += ispec.alphas[static_cast<std::size_t>(k - 2)] * prod;
          return;
        }
        for (int i = from; i < static_cast<int>(window.size()); ++i) {
          pick[static_cast<std::size_t>(depth)] = i;
          rec(i + 1, depth + 1);
        }
      };
      rec(0, 0);
    }
    CHECK(interaction_energy(c, ispec) == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("interaction norm bound") {
  InteractionSpec a;
  a.alphas = {1.0};
  a.range = 1;
  CHECK(interaction_norm_bound(a, 2, 1) == doctest::Approx(4.0));

  InteractionSpec zero;
  zero.alphas = {0.0};
  CHECK(interaction_norm_bound(zero, 3, 2) == 0.0);

  InteractionSpec b;
  b.alphas = {0.5};
  b.range = 2;
  CHECK(interaction_norm_bound(b, 3, 1) == doctest::Approx(12.0));

  // the bound dominates the energy, exactly
  InteractionSpec mix;
  mix.alphas = {0.8, 0.4};
  mix.range = 2;
  rng::Sequence seq(19);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 1 + static_cast<int>(seq.next_int(0, 1));
    const int n = 2 + static_cast<int>(seq.next_int(0, 2));
    Configuration c;
    for (int j = 0; j < n; ++j) {
      Site s;
      for (int k = 0; k < d; ++k) s.push_back(seq.next_int(-5, 5));
      c.pts.push_back(s);
    }
    CHECK(std::abs(interaction_energy(c, mix)) <= interaction_norm_bound(mix, n, d));
  }
}

TEST_CASE("assembly forced examples") {
  const DisorderSpec dspec = uniform01(3.0, 7);
  InteractionSpec ispec;

  // single site: [2 + lambda V(0)]
  const Region r1 = Region::from_sites(1, {{0}});
  const DisorderField f1 = sample_disorder(dspec, r1, 0);
  const OperatorMatrix h1 = assemble(r1, 1, dspec, ispec, f1);
  CHECK(h1.dense()(0, 0) == doctest::Approx(2.0 + 3.0 * f1.values[0]));

  // two sites, zero potential: path-graph second difference
  DisorderSpec zerov = dspec;
  zerov.lambda = 0.0;
  const Region r2 = Region::from_sites(1, {{0}, {1}});
  const DisorderField f2 = sample_disorder(zerov, r2, 0);
  const OperatorMatrix h2 = assemble(r2, 1, zerov, ispec, f2);
  Eigen::MatrixXd expect2(2, 2);
  expect2 << 2, -1, -1, 2;
  CHECK((h2.dense() - expect2).cwiseAbs().maxCoeff() == 0.0);

  // two particles, no interaction: Kronecker sum of the one-particle matrix
  const DisorderField f = sample_disorder(dspec, r2, 0);
  const OperatorMatrix one = assemble(r2, 1, dspec, ispec, f);
  const OperatorMatrix two = assemble(r2, 2, dspec, ispec, f);
  const Eigen::MatrixXd a = one.dense();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd kron_sum = Eigen::MatrixXd::Zero(4, 4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          kron_sum(i * 2 + k, j * 2 + l) = a(i, j) * id(k, l) + id(i, j) * a(k, l);
  CHECK((two.dense() - kron_sum).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("assembled matrices are symmetric with bounded row support") {
  const DisorderSpec dspec = uniform01(2.0, 21);
  InteractionSpec ispec;
  ispec.alphas = {0.5};
  ispec.range = 1;
  for (int d = 1; d <= 2; ++d) {
    for (int n = 1; n <= (d == 1 ? 3 : 2); ++n) {
      const Region region = Region::box(d, d == 1 ? 2 : 1);
      const DisorderField f = sample_disorder(dspec, region, 0);
      const OperatorMatrix op = assemble(region, n, dspec, ispec, f);
      const Eigen::MatrixXd h = op.dense();
      CHECK((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);
      for (int row = 0; row < h.rows(); ++row) {
        int nnz = 0;
        for (int col = 0; col < h.cols(); ++col)
          if (h(row, col) != 0.0) ++nnz;
        CHECK(nnz <= 2 * d * n + 1);
      }
    }
  }
}

TEST_CASE("permutation covariance of the matrix elements") {
  const DisorderSpec dspec = uniform01(1.5, 33);
  InteractionSpec ispec;
  ispec.alphas = {0.3};
  ispec.range = 1;
  const Region region = Region::box(1, 2);
  const DisorderField f = sample_disorder(dspec, region, 0);
  const OperatorMatrix op = assemble(region, 2, dspec, ispec, f);
  const Eigen::MatrixXd h = op.dense();
  for (std::size_t i = 0; i < op.dim(); ++i) {
    for (std::size_t j = 0; j < op.dim(); ++j) {
      Configuration x = op.config_at(i), y = op.config_at(j);
      std::swap(x.pts[0], x.pts[1]);
      std::swap(y.pts[0], y.pts[1]);
      CHECK(h(static_cast<int>(i), static_cast<int>(j)) ==
            h(static_cast<int>(op.index_of(x)), static_cast<int>(op.index_of(y))));
    }
  }
}

TEST_CASE("free spectrum is the sumset of the one-particle spectrum") {
  const DisorderSpec dspec = uniform01(2.5, 55);
  InteractionSpec off;
  const Region region = Region::box(1, 1);  // 3 sites, dim 9
  const DisorderField f = sample_disorder(dspec, region, 0);
  const OperatorMatrix one = assemble(region, 1, dspec, off, f);
  const OperatorMatrix two = assemble(region, 2, dspec, off, f);
  const EigenSystem e1 = diagonalize(one);
  const EigenSystem e2 = diagonalize(two);
  std::vector<double> sums;
  for (int i = 0; i < e1.dim(); ++i)
    for (int j = 0; j < e1.dim(); ++j) sums.push_back(e1.eigenvalues[i] + e1.eigenvalues[j]);
  std::sort(sums.begin(), sums.end());
  for (int i = 0; i < e2.dim(); ++i)
    CHECK(e2.eigenvalues[i] ==
          doctest::Approx(sums[static_cast<std::size_t>(i)]).epsilon(1e-9));
}

TEST_CASE("adding occupation-diagonal potential never lowers eigenvalues") {
  const DisorderSpec dspec = uniform01(2.0, 77);
  InteractionSpec ispec;
  ispec.alphas = {0.2};
  ispec.range = 1;
  const Region region = Region::box(1, 1);
  const DisorderField f = sample_disorder(dspec, region, 0);
  const OperatorMatrix op = assemble(region, 2, dspec, ispec, f);
  const Eigen::MatrixXd h = op.dense();
  Eigen::VectorXd occ(static_cast<Eigen::Index>(op.dim()));
  const auto u = region.index_of({0});
  for (std::size_t idx = 0; idx < op.dim(); ++idx)
    occ[static_cast<Eigen::Index>(idx)] = op.occupation_at(idx, *u);
  Eigen::MatrixXd shifted = h;
  shifted.diagonal() += 0.8 * occ;
  const EigenSystem base = diagonalize_dense(h);
  const EigenSystem more = diagonalize_dense(shifted);
  for (int i = 0; i < base.dim(); ++i)
    CHECK(more.eigenvalues[i] >= base.eigenvalues[i] - 1e-12);
}

TEST_CASE("assembly cap and dimension errors") {
  const Region region = Region::box(1, 10);  // 21 sites
  const DisorderSpec dspec = uniform01();
  const DisorderField f = sample_disorder(dspec, region, 0);
  CHECK_THROWS(assemble(region, 5, dspec, InteractionSpec{}, f, 1000));
}

TEST_CASE("matrix market export") {
  const Region region = Region::from_sites(1, {{0}, {1}});
  const DisorderSpec dspec = uniform01();
  const DisorderField f = sample_disorder(dspec, region, 0);
  const OperatorMatrix op = assemble(region, 1, dspec, InteractionSpec{}, f);
  write_matrix_market(op.matrix(), "test_matrix.mtx");
  std::ifstream in("test_matrix.mtx");
  std::string header;
  std::getline(in, header);
  CHECK(header == "%%MatrixMarket matrix coordinate real general");
}
