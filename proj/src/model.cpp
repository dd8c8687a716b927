#include "mploc/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "mploc/rng.hpp"

namespace mploc {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310005024;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Inverse normal CDF: Acklam's rational approximation plus one Newton
// correction against erfc, good to full double precision on (0,1).
double normal_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0,1)");
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - plow) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * kSqrt2Pi * std::exp(x * x / 2.0);
  return x - u / (1 + x * u / 2);
}

struct CustomTable {
  std::vector<double> v, rho, cdf;  // rho normalized; cdf at nodes
  double norm = 0.0;
};

CustomTable prepare_table(const DisorderSpec& spec) {
  if (spec.table_v.size() < 2 || spec.table_v.size() != spec.table_rho.size())
    throw std::invalid_argument("custom density: table needs matching nodes, >= 2");
  CustomTable t;
  t.v = spec.table_v;
  t.rho = spec.table_rho;
  for (std::size_t i = 0; i + 1 < t.v.size(); ++i)
    if (!(t.v[i + 1] > t.v[i]))
      throw std::invalid_argument("custom density: nodes must increase");
  for (double r : t.rho)
    if (!(r >= 0.0) || !std::isfinite(r))
      throw std::invalid_argument("custom density: negative or non-finite value");
  t.cdf.assign(t.v.size(), 0.0);
  for (std::size_t i = 0; i + 1 < t.v.size(); ++i)
    t.cdf[i + 1] = t.cdf[i] + 0.5 * (t.rho[i] + t.rho[i + 1]) * (t.v[i + 1] - t.v[i]);
  t.norm = t.cdf.back();
  if (!(t.norm > 0.0) || !std::isfinite(t.norm))
    throw std::invalid_argument("custom density: not normalizable");
  for (auto& r : t.rho) r /= t.norm;
  for (auto& c : t.cdf) c /= t.norm;
  return t;
}

double table_density(const CustomTable& t, double v) {
  if (v <= t.v.front() || v >= t.v.back()) {
    // endpoint values apply exactly at the endpoints
    if (v == t.v.front()) return t.rho.front();
    if (v == t.v.back()) return t.rho.back();
    return 0.0;
  }
  const auto it = std::upper_bound(t.v.begin(), t.v.end(), v);
  const std::size_t i = static_cast<std::size_t>(it - t.v.begin()) - 1;
  const double w = (v - t.v[i]) / (t.v[i + 1] - t.v[i]);
  return t.rho[i] + w * (t.rho[i + 1] - t.rho[i]);
}

// Invert the piecewise-quadratic CDF within the bracketing segment.
double table_quantile(const CustomTable& t, double u) {
  const auto it = std::upper_bound(t.cdf.begin(), t.cdf.end(), u);
  std::size_t i = it == t.cdf.begin() ? 0 : static_cast<std::size_t>(it - t.cdf.begin()) - 1;
  i = std::min(i, t.v.size() - 2);
  const double h = t.v[i + 1] - t.v[i];
  const double r0 = t.rho[i], r1 = t.rho[i + 1];
  const double target = u - t.cdf[i];
  // target = r0*h*w + (r1-r0)*h*w^2/2 with w in [0,1]
  double w;
  const double a2 = 0.5 * (r1 - r0) * h;
  const double a1 = r0 * h;
  if (std::abs(a2) < 1e-300) {
    w = a1 > 0 ? target / a1 : 0.5;
  } else {
    const double disc = a1 * a1 + 4 * a2 * target;
    w = (-a1 + std::sqrt(std::max(disc, 0.0))) / (2 * a2);
  }
  w = std::clamp(w, 0.0, 1.0);
  return t.v[i] + w * h;
}

}  // namespace

double density(const DisorderSpec& spec, double v) {
  switch (spec.kind) {
    case DistKind::Uniform:
      return (v >= spec.a && v <= spec.b) ? 1.0 / (spec.b - spec.a) : 0.0;
    case DistKind::Gaussian: {
      const double z = (v - spec.mean) / spec.stddev;
      return std::exp(-0.5 * z * z) / (spec.stddev * kSqrt2Pi);
    }
    case DistKind::CustomDensity: {
      const CustomTable t = prepare_table(spec);
      return table_density(t, v);
    }
  }
  return 0.0;
}

std::pair<double, double> density_support(const DisorderSpec& spec) {
  switch (spec.kind) {
    case DistKind::Uniform:
      return {spec.a, spec.b};
    case DistKind::Gaussian:
      return {spec.mean - 10 * spec.stddev, spec.mean + 10 * spec.stddev};
    case DistKind::CustomDensity:
      return {spec.table_v.front(), spec.table_v.back()};
  }
  return {0, 0};
}

RegularityConstants regularity_constants(const DisorderSpec& spec) {
  RegularityConstants rc;
  switch (spec.kind) {
    case DistKind::Uniform: {
      // With E0 the support width, the window integral equals 1 on the
      // support, so K equals the density height.
      const double width = spec.b - spec.a;
      if (!(width > 0)) throw std::invalid_argument("uniform: empty support");
      rc.E0 = width;
      rc.K = 1.0 / width;
      rc.rho_inf = 1.0 / width;
      return rc;
    }
    case DistKind::Gaussian: {
      // The ratio rho(v) / integral_{|u|<=E0} rho(v-u) du is largest at
      // the mean; there the window integral is sigma*sqrt(2pi)*erf(E0/(sigma*sqrt 2)).
      const double sigma = spec.stddev;
      if (!(sigma > 0)) throw std::invalid_argument("gaussian: stddev must be positive");
      rc.E0 = sigma;
      rc.K = 1.0 / (sigma * kSqrt2Pi * std::erf(1.0 / std::sqrt(2.0)));
      rc.rho_inf = 1.0 / (sigma * kSqrt2Pi);
      return rc;
    }
    case DistKind::CustomDensity: {
      const CustomTable t = prepare_table(spec);
      rc.E0 = t.v.back() - t.v.front();
      rc.rho_inf = *std::max_element(t.rho.begin(), t.rho.end());
      // Numeric search for K over a refinement of the table grid.
      double K = 0.0;
      const int refine = 8;
      for (std::size_t i = 0; i + 1 < t.v.size(); ++i) {
        for (int r = 0; r <= refine; ++r) {
          const double v = t.v[i] + (t.v[i + 1] - t.v[i]) * r / refine;
          const double rho_v = table_density(t, v);
          if (rho_v <= 0) continue;
          // window integral by fine trapezoid
          const int nq = 512;
          const double lo = v - rc.E0, hi = v + rc.E0;
          double acc = 0.0;
          double prev = table_density(t, lo);
          for (int q = 1; q <= nq; ++q) {
            const double vq = lo + (hi - lo) * q / nq;
            const double cur = table_density(t, vq);
            acc += 0.5 * (prev + cur) * (hi - lo) / nq;
            prev = cur;
          }
          if (acc <= rho_v * 1e-12)
            throw std::runtime_error("regularity_constants: search failed (vanishing window mass)");
          K = std::max(K, rho_v / acc);
        }
      }
      rc.K = K;
      return rc;
    }
  }
  return rc;
}

double exp_abs_moment(const DisorderSpec& spec) {
  switch (spec.kind) {
    case DistKind::Uniform: {
      auto F = [](double x) {
        return x >= 0 ? std::exp(x) - 1.0 : -(std::exp(-x) - 1.0);
      };
      return (F(spec.b) - F(spec.a)) / (spec.b - spec.a);
    }
    case DistKind::Gaussian: {
      const double m = spec.mean, s = spec.stddev;
      return std::exp(m + s * s / 2) * normal_cdf(m / s + s) +
             std::exp(-m + s * s / 2) * normal_cdf(s - m / s);
    }
    case DistKind::CustomDensity: {
      const CustomTable t = prepare_table(spec);
      double acc = 0.0;
      const int refine = 64;
      for (std::size_t i = 0; i + 1 < t.v.size(); ++i) {
        double prev = std::exp(std::abs(t.v[i])) * t.rho[i];
        for (int r = 1; r <= refine; ++r) {
          const double v = t.v[i] + (t.v[i + 1] - t.v[i]) * r / refine;
          const double cur = std::exp(std::abs(v)) * table_density(t, v);
          acc += 0.5 * (prev + cur) * (t.v[i + 1] - t.v[i]) / refine;
          prev = cur;
        }
      }
      return acc;
    }
  }
  return 1.0;
}

double quantile(const DisorderSpec& spec, double u) {
  switch (spec.kind) {
    case DistKind::Uniform:
      return spec.a + (spec.b - spec.a) * u;
    case DistKind::Gaussian:
      return spec.mean + spec.stddev * normal_quantile(u);
    case DistKind::CustomDensity: {
      const CustomTable t = prepare_table(spec);
      return table_quantile(t, u);
    }
  }
  return 0.0;
}

DisorderField sample_disorder(const DisorderSpec& spec, const Region& region,
                              std::uint64_t realization) {
  // Custom tables are prepared once outside the site loop.
  DisorderField f;
  f.seed = spec.seed;
  f.realization = realization;
  f.values.resize(region.size());
  if (spec.kind == DistKind::CustomDensity) {
    const CustomTable t = prepare_table(spec);
    for (std::size_t i = 0; i < region.size(); ++i)
      f.values[i] = table_quantile(t, rng::uniform(spec.seed, realization, region.site(i)));
    return f;
  }
  for (std::size_t i = 0; i < region.size(); ++i)
    f.values[i] = quantile(spec, rng::uniform(spec.seed, realization, region.site(i)));
  return f;
}

bool InteractionSpec::empty() const {
  for (double a : alphas)
    if (a != 0.0) return false;
  return true;
}

int occupation(const Configuration& c, const Site& u) {
  int k = 0;
  for (const auto& p : c.pts)
    if (p == u) ++k;
  return k;
}

namespace {

double kernel_value(const std::string& kernel, const std::vector<int>& occ) {
  if (kernel == "indicator") {
    return 1.0;  // sites in A are occupied by construction
  }
  if (kernel == "inverse-product") {
    double prod = 1.0;
    for (int n : occ) prod *= n;
    return 1.0 / prod;
  }
  throw std::invalid_argument("unknown interaction kernel: " + kernel);
}

void for_each_subset(const std::vector<Site>& sites, int k, std::vector<std::size_t>& pick,
                     std::size_t from, const std::function<void(const std::vector<std::size_t>&)>& fn) {
  if (static_cast<int>(pick.size()) == k) {
    fn(pick);
    return;
  }
  for (std::size_t i = from; i < sites.size(); ++i) {
    pick.push_back(i);
    for_each_subset(sites, k, pick, i + 1, fn);
    pick.pop_back();
  }
}

}  // namespace

double interaction_energy(const Configuration& c, const InteractionSpec& ispec) {
  if (ispec.alphas.empty()) return 0.0;
  // Clusters containing an unoccupied site contribute nothing, so only
  // subsets of the footprint are enumerated.
  const std::vector<Site> fp = footprint(c);
  const std::int64_t range2 = ispec.range * ispec.range;
  double total = 0.0;
  for (int k = 2; k <= ispec.max_order(); ++k) {
    const double alpha = ispec.alphas[static_cast<std::size_t>(k - 2)];
    if (alpha == 0.0 || static_cast<int>(fp.size()) < k) continue;
    double sum_k = 0.0;
    std::vector<std::size_t> pick;
    for_each_subset(fp, k, pick, 0, [&](const std::vector<std::size_t>& idx) {
      std::int64_t d2 = 0;
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = i + 1; j < idx.size(); ++j)
          d2 = std::max(d2, dist2(fp[idx[i]], fp[idx[j]]));
      if (d2 > range2) return;
      std::vector<int> occ;
      occ.reserve(idx.size());
      for (std::size_t i : idx) occ.push_back(occupation(c, fp[i]));
      sum_k += kernel_value(ispec.kernel, occ);
    });
    total += alpha * sum_k;
  }
  return total;
}

double interaction_norm_bound(const InteractionSpec& ispec, int n, int d) {
  double sum = 0.0;
  double kfact = 1.0;
  for (int k = 2; k <= ispec.max_order(); ++k) {
    kfact = 1.0;
    for (int j = 2; j <= k; ++j) kfact *= j;
    sum += std::pow(2.0 * static_cast<double>(ispec.range), static_cast<double>(d) * k) /
           kfact * std::abs(ispec.alphas[static_cast<std::size_t>(k - 2)]);
  }
  return n * sum;
}

OperatorMatrix::OperatorMatrix(Region region, int n, Eigen::SparseMatrix<double> kinetic,
                               Eigen::VectorXd potential_sum, Eigen::VectorXd interaction_diag,
                               double lambda)
    : region_(std::move(region)),
      n_(n),
      kinetic_(std::move(kinetic)),
      potential_sum_(std::move(potential_sum)),
      interaction_diag_(std::move(interaction_diag)),
      lambda_(lambda) {}

std::size_t OperatorMatrix::index_of(const Configuration& c) const {
  if (c.n() != n_) throw std::invalid_argument("index_of: wrong particle count");
  std::size_t idx = 0;
  for (const auto& p : c.pts) {
    const auto si = region_.index_of(p);
    if (!si) throw std::invalid_argument("index_of: site outside region");
    idx = idx * region_.size() + *si;
  }
  return idx;
}

std::vector<std::size_t> OperatorMatrix::site_indices_at(std::size_t idx) const {
  std::vector<std::size_t> out(static_cast<std::size_t>(n_));
  const std::size_t m = region_.size();
  for (int j = n_ - 1; j >= 0; --j) {
    out[static_cast<std::size_t>(j)] = idx % m;
    idx /= m;
  }
  return out;
}

Configuration OperatorMatrix::config_at(std::size_t idx) const {
  Configuration c;
  c.pts.reserve(static_cast<std::size_t>(n_));
  for (std::size_t si : site_indices_at(idx)) c.pts.push_back(region_.site(si));
  return c;
}

int OperatorMatrix::occupation_at(std::size_t idx, std::size_t site_index) const {
  int count = 0;
  for (std::size_t si : site_indices_at(idx))
    if (si == site_index) ++count;
  return count;
}

Eigen::VectorXd OperatorMatrix::diagonal() const {
  Eigen::VectorXd d = lambda_ * potential_sum_ + interaction_diag_;
  d.array() += 2.0 * region_.dim() * n_;
  return d;
}

Eigen::SparseMatrix<double> OperatorMatrix::matrix() const {
  Eigen::SparseMatrix<double> h = kinetic_;
  Eigen::VectorXd d = lambda_ * potential_sum_ + interaction_diag_;
  for (int i = 0; i < d.size(); ++i) h.coeffRef(i, i) += d[i];
  h.makeCompressed();
  return h;
}

Eigen::MatrixXd OperatorMatrix::dense() const { return Eigen::MatrixXd(matrix()); }

OperatorMatrix assemble(const Region& region, int n, const DisorderSpec& dspec,
                        const InteractionSpec& ispec, const DisorderField& field,
                        std::size_t cap) {
  if (n < 1) throw std::invalid_argument("assemble: n must be >= 1");
  if (field.values.size() != region.size())
    throw std::invalid_argument("assemble: field does not match region");
  const std::size_t m = region.size();
  std::size_t dim = 1;
  for (int j = 0; j < n; ++j) {
    if (dim > cap / m) throw std::invalid_argument("assemble: dimension exceeds cap");
    dim *= m;
  }
  if (dim > cap) throw std::invalid_argument("assemble: dimension exceeds cap");

  const int d = region.dim();
  // Precompute nearest-neighbor lists per region site.
  std::vector<std::vector<std::size_t>> neighbors(m);
  Site nb;
  for (std::size_t i = 0; i < m; ++i) {
    for (int k = 0; k < d; ++k) {
      for (int step = -1; step <= 1; step += 2) {
        nb = region.site(i);
        nb[k] += step;
        if (auto idx = region.index_of(nb)) neighbors[i].push_back(*idx);
      }
    }
  }

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(dim * (2 * static_cast<std::size_t>(d) * n + 1));
  Eigen::VectorXd pot(dim), inter(dim);
  std::vector<std::size_t> sites(static_cast<std::size_t>(n), 0);
  std::vector<std::size_t> strides(static_cast<std::size_t>(n), 1);
  for (int j = n - 2; j >= 0; --j)
    strides[static_cast<std::size_t>(j)] = strides[static_cast<std::size_t>(j + 1)] * m;

  Configuration c;
  c.pts.resize(static_cast<std::size_t>(n));
  for (std::size_t idx = 0; idx < dim; ++idx) {
    // decode mixed radix
    std::size_t rem = idx;
    for (int j = 0; j < n; ++j) {
      sites[static_cast<std::size_t>(j)] = rem / strides[static_cast<std::size_t>(j)];
      rem %= strides[static_cast<std::size_t>(j)];
      c.pts[static_cast<std::size_t>(j)] = region.site(sites[static_cast<std::size_t>(j)]);
    }
    trips.emplace_back(static_cast<int>(idx), static_cast<int>(idx), 2.0 * d * n);
    double v = 0.0;
    for (int j = 0; j < n; ++j) {
      const std::size_t sj = sites[static_cast<std::size_t>(j)];
      v += field.values[sj];
      for (std::size_t nbr : neighbors[sj]) {
        const std::size_t stride = strides[static_cast<std::size_t>(j)];
        const std::size_t col = idx - sj * stride + nbr * stride;
        trips.emplace_back(static_cast<int>(idx), static_cast<int>(col), -1.0);
      }
    }
    pot[static_cast<Eigen::Index>(idx)] = v;
    inter[static_cast<Eigen::Index>(idx)] = interaction_energy(c, ispec);
  }

  Eigen::SparseMatrix<double> kin(static_cast<int>(dim), static_cast<int>(dim));
  kin.setFromTriplets(trips.begin(), trips.end());
  kin.makeCompressed();
  return OperatorMatrix(region, n, std::move(kin), std::move(pot), std::move(inter),
                        dspec.lambda);
}

OperatorMatrix assemble_realization(const ModelSpec& mspec, std::uint64_t realization,
                                    std::size_t cap) {
  const DisorderField f = sample_disorder(mspec.disorder, mspec.region, realization);
  return assemble(mspec.region, mspec.n, mspec.disorder, mspec.interaction, f, cap);
}

void write_matrix_market(const Eigen::SparseMatrix<double>& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << " " << m.cols() << " " << m.nonZeros() << "\n";
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
      out << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
}

}  // namespace mploc
