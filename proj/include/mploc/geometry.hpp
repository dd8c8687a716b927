#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

// Lattice geometry: particle configurations on Z^d, their footprints,
// the three configuration distances (ordered, symmetrized, Hausdorff),
// diameter / splitting width, and enumeration of constrained
// configuration sets.

namespace mploc {

using Coord = std::int64_t;
using Site = std::vector<Coord>;  // one lattice point, length d

// Ordered tuple of n sites. Ordering is significant: particles carry
// distinguishable labels.
struct Configuration {
  std::vector<Site> pts;

  Configuration() = default;
  explicit Configuration(std::vector<Site> p) : pts(std::move(p)) {}

  int n() const { return static_cast<int>(pts.size()); }
  int dim() const { return pts.empty() ? 0 : static_cast<int>(pts[0].size()); }

  bool operator==(const Configuration&) const = default;
  auto operator<=>(const Configuration&) const = default;
};

// Squared Euclidean distance between sites, exact in integers.
std::int64_t dist2(const Site& a, const Site& b);
double site_dist(const Site& a, const Site& b);

// |x|^2 of the concatenated coordinate vector.
std::int64_t norm2(const Configuration& c);

// Footprint: covered site set, duplicates collapsed, sorted.
std::vector<Site> footprint(const Configuration& c);

std::int64_t diam2(const Configuration& c);
double diam(const Configuration& c);

// Largest gap realizable by a two-set partition of the particle labels:
// max over nontrivial (J,K) of dist(X_J, X_K). 0 for n = 1.
// Enumerates 2^(n-1)-1 splits; guarded for n <= 8.
std::int64_t splitting_width2(const Configuration& c);
double splitting_width(const Configuration& c);

// Hausdorff distance between footprints. n may differ, d must match.
std::int64_t dist_hausdorff2(const Configuration& a, const Configuration& b);
double dist_hausdorff(const Configuration& a, const Configuration& b);

// Ordered distance: sum_j |x_j - y_j|.
double dist_ordered(const Configuration& a, const Configuration& b);

// min over permutations pi of sum_j |x_j - y_{pi(j)}|, by optimal
// assignment on the pairwise cost matrix.
double dist_sym(const Configuration& a, const Configuration& b);

// Brute-force assignment over all n! permutations; test oracle, n <= 6.
double dist_sym_bruteforce(const Configuration& a, const Configuration& b);

// Finite region of Z^d. Either a centered box [c-L, c+L]^d or an
// explicit site list. Sites are kept sorted lexicographically, which
// fixes every enumeration order downstream.
class Region {
 public:
  Region() = default;
  static Region box(int dim, Coord radius);                    // [-L,L]^d
  static Region box_at(const Site& center, Coord radius);
  static Region from_sites(int dim, std::vector<Site> sites);

  int dim() const { return dim_; }
  std::size_t size() const { return sites_.size(); }
  const Site& site(std::size_t i) const { return sites_[i]; }
  const std::vector<Site>& sites() const { return sites_; }

  bool contains(const Site& s) const;
  std::optional<std::size_t> index_of(const Site& s) const;

  // Sites with a nearest-neighbor outside the region. For a box this is
  // the set where some |c_i - center_i| equals the radius.
  std::vector<std::size_t> boundary_indices() const;

  bool is_box() const { return is_box_; }
  Coord box_radius() const { return radius_; }
  const Site& box_center() const { return center_; }

 private:
  int dim_ = 0;
  std::vector<Site> sites_;  // sorted
  bool is_box_ = false;
  Site center_;
  Coord radius_ = 0;
};

// Constraint block for configuration-set enumeration: all particles in
// `region`, optionally at least one particle in `anchor`, optionally
// diameter <= max_diam.
struct ConfigSetSpec {
  Region region;
  int n = 1;
  std::optional<std::vector<Site>> anchor;
  std::optional<double> max_diam;
};

struct EnumerationCapError : std::exception {
  std::uint64_t cardinality;
  std::uint64_t cap;
  std::string msg;
  EnumerationCapError(std::uint64_t card, std::uint64_t c);
  const char* what() const noexcept override { return msg.c_str(); }
};

// Streams the matching configurations once each, in lexicographic order
// on (x_1,...,x_n) with sites ordered as in the region. Single consumer.
class ConfigStream {
 public:
  ConfigStream(ConfigSetSpec spec, std::uint64_t cap = kDefaultCap);
  bool next(Configuration& out);

  static constexpr std::uint64_t kDefaultCap = 1u << 22;

 private:
  ConfigSetSpec spec_;
  std::vector<std::size_t> odom_;  // site indices, particle 0 most significant
  bool done_ = false;
  bool started_ = false;
  std::vector<std::size_t> anchor_idx_;  // region indices of anchor sites
  bool admissible(const Configuration& c) const;
  bool advance();
};

std::vector<Configuration> enumerate_configs(const ConfigSetSpec& spec,
                                             std::uint64_t cap = ConfigStream::kDefaultCap);

// Cardinality bounds for anchored configuration sets:
//   anchored, diameter <= r :  n * (4r)^(d(n-1))
//   anchored, free          :  n * |Omega|^(n-1)
struct ConfigCountBounds {
  double bound_anchor;
  double bound_free;
};
ConfigCountBounds count_bounds_check(double r, int n, int d, std::uint64_t region_size = 0);

// JSON text for a configuration, e.g. [[0],[3],[4]].
std::string to_json(const Configuration& c);
Configuration configuration_from_json(const std::string& text);

}  // namespace mploc
