#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace ampvp {

enum class ProfileKind { banded, block, random_support, wigner };

std::string to_string(ProfileKind k);
ProfileKind profile_kind_from_string(const std::string& s);

// Symmetric nonnegative variance profile with zero diagonal, sparse row
// storage (sorted column indices). Invariants checked at construction:
//   s_ij = s_ji, s_ii = 0;
//   row support <= support_constant * K;
//   entries <= entry_bound;
//   min row sum >= c_S > 0.
// The wigner kind (all off-diagonal entries equal) is stored implicitly so
// that matvecs and sampling stay O(n) / O(n^2) without materializing rows.
class VarianceProfile {
 public:
  static VarianceProfile make_wigner(std::int64_t n, double scale);
  // triplets: upper-triangle (i < j) entries; mirrored internally
  static VarianceProfile from_triplets(
      std::int64_t n, std::int64_t K, ProfileKind kind, double scale,
      const std::vector<std::tuple<int, int, double>>& triplets);

  std::int64_t n() const { return n_; }
  std::int64_t K() const { return K_; }
  ProfileKind kind() const { return kind_; }
  double scale() const { return scale_; }
  bool uniform() const { return uniform_; }
  double uniform_value() const { return uniform_value_; }

  // profile metadata for the sparsity assumptions
  double support_constant() const { return support_constant_; }
  std::int64_t max_row_support() const { return max_support_; }
  double max_entry() const { return max_entry_; }
  double min_row_sum() const { return min_row_sum_; }
  double max_row_sum() const { return max_row_sum_; }  // |||S|||

  double entry(int i, int j) const;
  double row_sum(int i) const;
  int row_size(int i) const;
  // valid only for non-uniform profiles
  const int* row_cols(int i) const;
  const double* row_vals(int i) const;

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;  // S v
  Eigen::MatrixXd dense() const;

  std::string to_json() const;
  static VarianceProfile from_json(const std::string& text);

 private:
  VarianceProfile() = default;
  void finalize();  // computes metadata, validates invariants

  std::int64_t n_ = 0;
  std::int64_t K_ = 0;
  ProfileKind kind_ = ProfileKind::wigner;
  double scale_ = 0.0;

  bool uniform_ = false;       // wigner: every off-diagonal entry equal
  double uniform_value_ = 0.0;

  // CSR over full symmetric support (both triangles), sorted columns
  std::vector<std::int64_t> row_ptr_;
  std::vector<int> cols_;
  std::vector<double> vals_;

  double support_constant_ = 0.0;
  std::int64_t max_support_ = 0;
  double max_entry_ = 0.0;
  double min_row_sum_ = 0.0;
  double max_row_sum_ = 0.0;

  friend VarianceProfile make_profile(ProfileKind, std::int64_t, std::int64_t,
                                      double, std::uint64_t);
};

// Profile families realizing the sparsity assumptions:
//   banded:         cyclic band, support {j : 0 < |i-j| <= K/2 (mod n)},
//                   entries scale/K; row sums exactly scale for even K
//   block:          ceil(n/K) near-equal contiguous blocks, complete
//                   within-block off-diagonal support, entries scale/K
//   random_support: each row draws K uniform partners (seeded), symmetrized
//                   by union, entries scale/K; the realized support bound
//                   is recorded in support_constant()
//   wigner:         all off-diagonal entries scale/n, K forced to n
VarianceProfile make_profile(ProfileKind kind, std::int64_t n, std::int64_t K,
                             double scale, std::uint64_t seed = 0);

}  // namespace ampvp
