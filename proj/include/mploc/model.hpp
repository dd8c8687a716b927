#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "mploc/geometry.hpp"

// The finite-volume n-particle Hamiltonian on a region: discrete
// Laplacian with Dirichlet restriction, site-diagonal random potential
// of strength lambda, and a finite-range occupation-number interaction.
//
// Laplacian convention: (-D psi)(x) = 2d psi(x) - sum_{|e|=1} psi(x+e),
// with hops leaving the region dropped and the 2d diagonal kept. The
// operator is therefore >= 0 whenever potential and interaction are.

namespace mploc {

enum class DistKind { Uniform, Gaussian, CustomDensity };

struct DisorderSpec {
  DistKind kind = DistKind::Uniform;
  double a = 0.0, b = 1.0;        // uniform support
  double mean = 0.0, stddev = 1.0;  // gaussian parameters
  // custom density: piecewise-linear table on strictly increasing nodes
  std::vector<double> table_v;
  std::vector<double> table_rho;
  double lambda = 1.0;
  std::uint64_t seed = 1;
};

// Constants of the single-site density: K and E0 such that
// rho(v) <= K * integral_{|u| <= E0} rho(v-u) du, plus the sup norm.
struct RegularityConstants {
  double K = 0.0;
  double E0 = 0.0;
  double rho_inf = 0.0;
};

RegularityConstants regularity_constants(const DisorderSpec& spec);

// Density value rho(v).
double density(const DisorderSpec& spec, double v);
// Support endpoints for quadrature (gaussian truncated at 10 sigma).
std::pair<double, double> density_support(const DisorderSpec& spec);
// E[e^{|V|}], closed form for uniform/gaussian, quadrature for custom.
double exp_abs_moment(const DisorderSpec& spec);
// Inverse CDF draw from the distribution at unit-interval coordinate u.
double quantile(const DisorderSpec& spec, double u);

struct DisorderField {
  std::vector<double> values;  // indexed like the region's site list
  std::uint64_t seed = 0;
  std::uint64_t realization = 0;
};

DisorderField sample_disorder(const DisorderSpec& spec, const Region& region,
                              std::uint64_t realization);

struct InteractionSpec {
  std::vector<double> alphas;  // alphas[k-2] couples k-site clusters
  Coord range = 1;             // max Euclidean diameter of a cluster
  std::string kernel = "indicator";

  int max_order() const { return static_cast<int>(alphas.size()) + 1; }
  bool empty() const;
};

// Number of particles of c at site u.
int occupation(const Configuration& c, const Site& u);

double interaction_energy(const Configuration& c, const InteractionSpec& ispec);

// A-priori sup bound: n * sum_k (2 ell_U)^(dk) / k! * |alpha_k|.
double interaction_norm_bound(const InteractionSpec& ispec, int n, int d);

// Sparse symmetric H on the configuration basis, kept in separable
// parts. Configuration indexing is mixed-radix over region site indices
// with particle 0 most significant.
class OperatorMatrix {
 public:
  OperatorMatrix() = default;
  OperatorMatrix(Region region, int n, Eigen::SparseMatrix<double> kinetic,
                 Eigen::VectorXd potential_sum, Eigen::VectorXd interaction_diag,
                 double lambda);

  std::size_t dim() const { return static_cast<std::size_t>(potential_sum_.size()); }
  int n() const { return n_; }
  const Region& region() const { return region_; }
  double lambda() const { return lambda_; }

  std::size_t index_of(const Configuration& c) const;
  Configuration config_at(std::size_t idx) const;
  std::vector<std::size_t> site_indices_at(std::size_t idx) const;

  const Eigen::SparseMatrix<double>& kinetic() const { return kinetic_; }
  const Eigen::VectorXd& potential_sum() const { return potential_sum_; }  // sum_j V(x_j)
  const Eigen::VectorXd& interaction_diag() const { return interaction_diag_; }

  Eigen::VectorXd diagonal() const;
  Eigen::SparseMatrix<double> matrix() const;
  Eigen::MatrixXd dense() const;

  // Occupation number of configuration idx at region site u.
  int occupation_at(std::size_t idx, std::size_t site_index) const;

 private:
  Region region_;
  int n_ = 0;
  Eigen::SparseMatrix<double> kinetic_;
  Eigen::VectorXd potential_sum_;
  Eigen::VectorXd interaction_diag_;
  double lambda_ = 0.0;
};

inline constexpr std::size_t kDefaultAssembleCap = std::size_t{1} << 22;

OperatorMatrix assemble(const Region& region, int n, const DisorderSpec& dspec,
                        const InteractionSpec& ispec, const DisorderField& field,
                        std::size_t cap = kDefaultAssembleCap);

// Everything needed to realize H(omega_k) for any realization index.
struct ModelSpec {
  Region region;
  int n = 1;
  DisorderSpec disorder;
  InteractionSpec interaction;
};

OperatorMatrix assemble_realization(const ModelSpec& m, std::uint64_t realization,
                                    std::size_t cap = kDefaultAssembleCap);

// Matrix Market coordinate text, for external inspection.
void write_matrix_market(const Eigen::SparseMatrix<double>& m, const std::string& path);

}  // namespace mploc
