#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ampvp/rng.hpp"
#include "ampvp/variance_profile.hpp"

namespace ampvp {

// Zero-mean unit-variance entry law. custom_table laws are finite-support
// tables validated to mean 0, variance 1 within 1e-12.
struct EntryDistribution {
  enum class Kind { gaussian, rademacher, uniform_centered, custom_table };

  Kind kind = Kind::gaussian;
  double rho = 1.0;  // moment growth: Cmom(2k) <= C k^{rho/2}
  std::vector<double> values;  // custom_table support points
  std::vector<double> probs;   // custom_table probabilities

  static EntryDistribution gaussian();
  static EntryDistribution rademacher();
  static EntryDistribution uniform_centered();
  static EntryDistribution custom_table(std::vector<double> values,
                                        std::vector<double> probs);

  double draw(CounterRng& rng) const;
};

std::string to_string(EntryDistribution::Kind k);
EntryDistribution::Kind entry_kind_from_string(const std::string& s);

// Symmetric sampled matrix with zero diagonal. Support is contained in the
// generating profile's support. Sparse CSR storage with a dense fallback
// when the profile density exceeds 1/2 (wigner, banded at large K), keeping
// matvecs O(nK) in the sparse regime.
class SampledMatrix {
 public:
  std::int64_t n() const { return n_; }
  std::uint64_t seed() const { return seed_; }
  const std::string& profile_id() const { return profile_id_; }
  bool dense_storage() const { return dense_storage_; }

  double entry(int i, int j) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;          // W v
  Eigen::VectorXd apply_squared(const Eigen::VectorXd& v) const;  // (W.^2) v
  Eigen::MatrixXd dense() const;

  // wraps an externally built symmetric matrix (tests, CLI); validates
  // symmetry to 1e-12 and zeroes nothing
  static SampledMatrix from_dense(const Eigen::MatrixXd& M,
                                  std::uint64_t seed_label = 0);

  // plain-text triplet export "i j value", 17 significant digits, i < j
  void write_triplets(std::ostream& os) const;

 private:
  friend SampledMatrix sample_symmetric(const VarianceProfile&,
                                        const EntryDistribution&,
                                        std::uint64_t);
  std::int64_t n_ = 0;
  std::uint64_t seed_ = 0;
  std::string profile_id_;

  bool dense_storage_ = false;
  Eigen::MatrixXd dense_;  // dense fallback

  std::vector<std::int64_t> row_ptr_;
  std::vector<int> cols_;
  std::vector<double> vals_;
};

// W_ij = sqrt(s_ij) X_ij, X from dist, one independent stream per unordered
// pair: identical (profile, dist, seed) reproduces W bit-for-bit and the
// value of any entry is independent of sampling order.
SampledMatrix sample_symmetric(const VarianceProfile& profile,
                               const EntryDistribution& dist,
                               std::uint64_t seed);

// single-entry sampling without building the matrix (moment tests)
double sample_entry(const VarianceProfile& profile,
                    const EntryDistribution& dist, std::uint64_t seed, int i,
                    int j);

struct SpectralResult {
  double value = 0.0;   // last Rayleigh estimate of ||M||
  bool converged = false;
  int iterations = 0;
};

// Power iteration on the squared operator M^2 (two applications per step):
// centered random ensembles have near-symmetric spectra, where plain power
// iteration oscillates between the +/- edge eigenvectors. Deterministic
// seeded start, stop when successive Rayleigh estimates differ < tol,
// cap 10*n iterations; non-convergence carries the last estimate.
SpectralResult spectral_norm(const SampledMatrix& M, double tol = 1e-10);

// T_Gauss = (1+eps) (2 |||V|||^{1/2} + 6/sqrt(log(1+eps)) (||V||_max log n)^{1/2})
// for eps in (0, 1/2]
double gaussian_norm_bound(const VarianceProfile& profile, std::int64_t n,
                           double eps);
// same formula from raw profile statistics (max row sum, max entry)
double gaussian_norm_bound_values(double triple_norm, double max_entry,
                                  std::int64_t n, double eps);

}  // namespace ampvp
