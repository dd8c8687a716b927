#include "mploc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mploc {

std::int64_t dist2(const Site& a, const Site& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dist2: dimension mismatch");
  std::int64_t s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::int64_t d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double site_dist(const Site& a, const Site& b) {
  return std::sqrt(static_cast<double>(dist2(a, b)));
}

std::int64_t norm2(const Configuration& c) {
  std::int64_t s = 0;
  for (const auto& p : c.pts)
    for (Coord x : p) s += x * x;
  return s;
}

std::vector<Site> footprint(const Configuration& c) {
  std::vector<Site> f = c.pts;
  std::sort(f.begin(), f.end());
  f.erase(std::unique(f.begin(), f.end()), f.end());
  return f;
}

std::int64_t diam2(const Configuration& c) {
  std::int64_t best = 0;
  for (std::size_t i = 0; i < c.pts.size(); ++i)
    for (std::size_t j = i + 1; j < c.pts.size(); ++j)
      best = std::max(best, dist2(c.pts[i], c.pts[j]));
  return best;
}

double diam(const Configuration& c) { return std::sqrt(static_cast<double>(diam2(c))); }

std::int64_t splitting_width2(const Configuration& c) {
  const int n = c.n();
  if (n <= 1) return 0;
  if (n > 8) throw std::invalid_argument("splitting_width: n > 8 not supported");
  std::int64_t best = 0;
  // Nontrivial two-set partitions of the label set; particle 0 pinned to J
  // halves the count.
  const unsigned limit = 1u << (n - 1);
  for (unsigned mask = 1; mask < limit; ++mask) {
    std::int64_t gap = std::numeric_limits<std::int64_t>::max();
    for (int j = 0; j < n; ++j) {
      const bool j_in_K = j > 0 && (mask >> (j - 1)) & 1u;
      if (j_in_K) continue;
      for (int k = 0; k < n; ++k) {
        const bool k_in_K = k > 0 && (mask >> (k - 1)) & 1u;
        if (!k_in_K) continue;
        gap = std::min(gap, dist2(c.pts[j], c.pts[k]));
      }
    }
    best = std::max(best, gap);
  }
  return best;
}

double splitting_width(const Configuration& c) {
  return std::sqrt(static_cast<double>(splitting_width2(c)));
}

std::int64_t dist_hausdorff2(const Configuration& a, const Configuration& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("dist_hausdorff: dimension mismatch");
  const auto fa = footprint(a);
  const auto fb = footprint(b);
  auto one_sided = [](const std::vector<Site>& from, const std::vector<Site>& to) {
    std::int64_t worst = 0;
    for (const auto& u : from) {
      std::int64_t nearest = std::numeric_limits<std::int64_t>::max();
      for (const auto& v : to) nearest = std::min(nearest, dist2(u, v));
      worst = std::max(worst, nearest);
    }
    return worst;
  };
  return std::max(one_sided(fa, fb), one_sided(fb, fa));
}

double dist_hausdorff(const Configuration& a, const Configuration& b) {
  return std::sqrt(static_cast<double>(dist_hausdorff2(a, b)));
}

double dist_ordered(const Configuration& a, const Configuration& b) {
  if (a.n() != b.n() || a.dim() != b.dim())
    throw std::invalid_argument("dist_ordered: shape mismatch");
  double s = 0;
  for (int j = 0; j < a.n(); ++j) s += site_dist(a.pts[j], b.pts[j]);
  return s;
}

namespace {

// Hungarian algorithm (potentials form), O(n^3), minimizing
// sum_j cost[j][pi(j)].
double assignment_min_cost(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  double total = 0;
  for (int j = 1; j <= n; ++j) total += cost[p[j] - 1][j - 1];
  return total;
}

}  // namespace

double dist_sym(const Configuration& a, const Configuration& b) {
  if (a.n() != b.n()) throw std::invalid_argument("dist_sym: particle count mismatch");
  if (a.dim() != b.dim()) throw std::invalid_argument("dist_sym: dimension mismatch");
  const int n = a.n();
  if (n == 0) return 0.0;
  std::vector<std::vector<double>> cost(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cost[i][j] = site_dist(a.pts[i], b.pts[j]);
  return assignment_min_cost(cost);
}

double dist_sym_bruteforce(const Configuration& a, const Configuration& b) {
  if (a.n() != b.n() || a.dim() != b.dim())
    throw std::invalid_argument("dist_sym_bruteforce: shape mismatch");
  const int n = a.n();
  if (n > 6) throw std::invalid_argument("dist_sym_bruteforce: n > 6");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0;
    for (int j = 0; j < n; ++j) s += site_dist(a.pts[j], b.pts[perm[j]]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Region Region::box(int dim, Coord radius) {
  return box_at(Site(static_cast<std::size_t>(dim), 0), radius);
}

Region Region::box_at(const Site& center, Coord radius) {
  if (center.empty()) throw std::invalid_argument("Region: dimension must be >= 1");
  if (radius < 0) throw std::invalid_argument("Region: negative radius");
  Region r;
  r.dim_ = static_cast<int>(center.size());
  r.is_box_ = true;
  r.center_ = center;
  r.radius_ = radius;
  const std::size_t side = static_cast<std::size_t>(2 * radius + 1);
  std::size_t total = 1;
  for (int i = 0; i < r.dim_; ++i) {
    if (total > (std::size_t{1} << 40) / side)
      throw std::invalid_argument("Region: box too large");
    total *= side;
  }
  r.sites_.reserve(total);
  Site s(center.size());
  std::vector<Coord> odom(center.size(), -radius);
  while (true) {
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = center[i] + odom[i];
    r.sites_.push_back(s);
    int k = r.dim_ - 1;
    while (k >= 0 && odom[k] == radius) odom[k--] = -radius;
    if (k < 0) break;
    ++odom[k];
  }
  std::sort(r.sites_.begin(), r.sites_.end());
  return r;
}

Region Region::from_sites(int dim, std::vector<Site> sites) {
  if (sites.empty()) throw std::invalid_argument("Region: empty site list");
  for (const auto& s : sites)
    if (static_cast<int>(s.size()) != dim)
      throw std::invalid_argument("Region: site dimension mismatch");
  Region r;
  r.dim_ = dim;
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  r.sites_ = std::move(sites);
  return r;
}

bool Region::contains(const Site& s) const { return index_of(s).has_value(); }

std::optional<std::size_t> Region::index_of(const Site& s) const {
  const auto it = std::lower_bound(sites_.begin(), sites_.end(), s);
  if (it == sites_.end() || *it != s) return std::nullopt;
  return static_cast<std::size_t>(it - sites_.begin());
}

std::vector<std::size_t> Region::boundary_indices() const {
  std::vector<std::size_t> out;
  Site nb;
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    bool on_boundary = false;
    for (int k = 0; k < dim_ && !on_boundary; ++k) {
      for (int step = -1; step <= 1 && !on_boundary; step += 2) {
        nb = sites_[i];
        nb[k] += step;
        if (!contains(nb)) on_boundary = true;
      }
    }
    if (on_boundary) out.push_back(i);
  }
  return out;
}

EnumerationCapError::EnumerationCapError(std::uint64_t card, std::uint64_t c)
    : cardinality(card), cap(c) {
  std::ostringstream os;
  os << "configuration set too large: " << card << " exceeds cap " << c;
  msg = os.str();
}

ConfigStream::ConfigStream(ConfigSetSpec spec, std::uint64_t cap) : spec_(std::move(spec)) {
  if (spec_.n < 1) throw std::invalid_argument("ConfigStream: n must be >= 1");
  const std::uint64_t m = spec_.region.size();
  std::uint64_t card = 1;
  for (int j = 0; j < spec_.n; ++j) {
    if (card > cap / std::max<std::uint64_t>(m, 1)) {
      // overflow-safe upper estimate
      double est = std::pow(static_cast<double>(m), spec_.n);
      throw EnumerationCapError(
          est > 1e18 ? std::numeric_limits<std::uint64_t>::max()
                     : static_cast<std::uint64_t>(est),
          cap);
    }
    card *= m;
  }
  if (card > cap) throw EnumerationCapError(card, cap);
  if (spec_.anchor) {
    for (const auto& s : *spec_.anchor) {
      const auto idx = spec_.region.index_of(s);
      if (!idx) throw std::invalid_argument("ConfigStream: anchor site outside region");
      anchor_idx_.push_back(*idx);
    }
    std::sort(anchor_idx_.begin(), anchor_idx_.end());
  }
  odom_.assign(static_cast<std::size_t>(spec_.n), 0);
}

bool ConfigStream::admissible(const Configuration& c) const {
  if (!anchor_idx_.empty()) {
    bool hit = false;
    for (const auto& p : c.pts) {
      const auto idx = spec_.region.index_of(p);
      if (idx && std::binary_search(anchor_idx_.begin(), anchor_idx_.end(), *idx)) {
        hit = true;
        break;
      }
    }
    if (!hit) return false;
  }
  if (spec_.max_diam) {
    const double md = *spec_.max_diam;
    if (static_cast<double>(diam2(c)) > md * md * (1 + 1e-12)) return false;
  }
  return true;
}

bool ConfigStream::advance() {
  int k = spec_.n - 1;
  while (k >= 0 && odom_[static_cast<std::size_t>(k)] + 1 == spec_.region.size())
    odom_[static_cast<std::size_t>(k--)] = 0;
  if (k < 0) return false;
  ++odom_[static_cast<std::size_t>(k)];
  return true;
}

bool ConfigStream::next(Configuration& out) {
  while (!done_) {
    if (started_) {
      if (!advance()) {
        done_ = true;
        break;
      }
    }
    started_ = true;
    Configuration c;
    c.pts.reserve(odom_.size());
    for (std::size_t idx : odom_) c.pts.push_back(spec_.region.site(idx));
    if (admissible(c)) {
      out = std::move(c);
      return true;
    }
  }
  return false;
}

std::vector<Configuration> enumerate_configs(const ConfigSetSpec& spec, std::uint64_t cap) {
  ConfigStream stream(spec, cap);
  std::vector<Configuration> out;
  Configuration c;
  while (stream.next(c)) out.push_back(c);
  return out;
}

ConfigCountBounds count_bounds_check(double r, int n, int d, std::uint64_t region_size) {
  if (r < 1) throw std::invalid_argument("count_bounds_check: r must be >= 1");
  ConfigCountBounds b{};
  b.bound_anchor = n * std::pow(4.0 * r, static_cast<double>(d) * (n - 1));
  b.bound_free =
      region_size ? n * std::pow(static_cast<double>(region_size), n - 1) : 0.0;
  return b;
}

std::string to_json(const Configuration& c) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : c.pts) j.push_back(p);
  return j.dump();
}

Configuration configuration_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Configuration c;
  for (const auto& p : j) c.pts.push_back(p.get<Site>());
  return c;
}

}  // namespace mploc
