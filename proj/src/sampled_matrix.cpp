#include "ampvp/sampled_matrix.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ampvp {

EntryDistribution EntryDistribution::gaussian() {
  EntryDistribution d;
  d.kind = Kind::gaussian;
  d.rho = 1.0;
  return d;
}

EntryDistribution EntryDistribution::rademacher() {
  EntryDistribution d;
  d.kind = Kind::rademacher;
  d.rho = 1.0;
  return d;
}

EntryDistribution EntryDistribution::uniform_centered() {
  EntryDistribution d;
  d.kind = Kind::uniform_centered;
  d.rho = 1.0;
  return d;
}

EntryDistribution EntryDistribution::custom_table(std::vector<double> values,
                                                  std::vector<double> probs) {
  if (values.empty() || values.size() != probs.size())
    throw std::invalid_argument("custom_table: size mismatch");
  double psum = 0.0, mean = 0.0, var = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (probs[k] < 0.0) throw std::invalid_argument("custom_table: p < 0");
    psum += probs[k];
    mean += probs[k] * values[k];
  }
  for (std::size_t k = 0; k < values.size(); ++k)
    var += probs[k] * (values[k] - mean) * (values[k] - mean);
  if (std::abs(psum - 1.0) > 1e-12)
    throw std::invalid_argument("custom_table: probabilities must sum to 1");
  if (std::abs(mean) > 1e-12 || std::abs(var - 1.0) > 1e-12)
    throw std::invalid_argument("custom_table: law must have mean 0, var 1");
  EntryDistribution d;
  d.kind = Kind::custom_table;
  d.rho = 1.0;  // finite support keeps all moments bounded
  d.values = std::move(values);
  d.probs = std::move(probs);
  return d;
}

double EntryDistribution::draw(CounterRng& rng) const {
  switch (kind) {
    case Kind::gaussian:
      return rng.next_normal();
    case Kind::rademacher:
      return (rng.next_u64() & 1ull) ? 1.0 : -1.0;
    case Kind::uniform_centered:
      // uniform on (-sqrt(3), sqrt(3)]: unit variance
      return (2.0 * rng.next_unit() - 1.0) * 1.7320508075688772;
    case Kind::custom_table: {
      const double u = rng.next_unit();
      double acc = 0.0;
      for (std::size_t k = 0; k < values.size(); ++k) {
        acc += probs[k];
        if (u <= acc) return values[k];
      }
      return values.back();
    }
  }
  throw std::logic_error("unknown EntryDistribution::Kind");
}

std::string to_string(EntryDistribution::Kind k) {
  switch (k) {
    case EntryDistribution::Kind::gaussian:
      return "gaussian";
    case EntryDistribution::Kind::rademacher:
      return "rademacher";
    case EntryDistribution::Kind::uniform_centered:
      return "uniform-centered";
    case EntryDistribution::Kind::custom_table:
      return "custom-table";
  }
  throw std::logic_error("unknown EntryDistribution::Kind");
}

EntryDistribution::Kind entry_kind_from_string(const std::string& s) {
  if (s == "gaussian") return EntryDistribution::Kind::gaussian;
  if (s == "rademacher") return EntryDistribution::Kind::rademacher;
  if (s == "uniform-centered" || s == "uniform_centered")
    return EntryDistribution::Kind::uniform_centered;
  if (s == "custom-table" || s == "custom_table")
    return EntryDistribution::Kind::custom_table;
  throw std::invalid_argument("unknown entry distribution: " + s);
}

namespace {

double pair_value(const EntryDistribution& dist, std::uint64_t seed, int i,
                  int j, double s_ij) {
  if (s_ij == 0.0) return 0.0;
  CounterRng rng(seed, pair_stream(static_cast<std::uint64_t>(i),
                                   static_cast<std::uint64_t>(j)));
  return std::sqrt(s_ij) * dist.draw(rng);
}

std::string describe_profile(const VarianceProfile& p) {
  std::ostringstream os;
  os << to_string(p.kind()) << ":n=" << p.n() << ":K=" << p.K()
     << ":scale=" << p.scale();
  return os.str();
}

}  // namespace

double SampledMatrix::entry(int i, int j) const {
  if (dense_storage_) return dense_(i, j);
  if (i == j) return 0.0;
  const std::int64_t lo = row_ptr_[i], hi = row_ptr_[i + 1];
  for (std::int64_t k = lo; k < hi; ++k)
    if (cols_[k] == j) return vals_[k];
  return 0.0;
}

Eigen::VectorXd SampledMatrix::apply(const Eigen::VectorXd& v) const {
  if (v.size() != n_) throw std::invalid_argument("apply: size mismatch");
  if (dense_storage_) return dense_ * v;
  Eigen::VectorXd out(n_);
  for (std::int64_t i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (std::int64_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      acc += vals_[k] * v[cols_[k]];
    out[i] = acc;
  }
  return out;
}

Eigen::VectorXd SampledMatrix::apply_squared(const Eigen::VectorXd& v) const {
  if (v.size() != n_) throw std::invalid_argument("apply: size mismatch");
  if (dense_storage_) return dense_.cwiseProduct(dense_) * v;
  Eigen::VectorXd out(n_);
  for (std::int64_t i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (std::int64_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      acc += vals_[k] * vals_[k] * v[cols_[k]];
    out[i] = acc;
  }
  return out;
}

Eigen::MatrixXd SampledMatrix::dense() const {
  if (dense_storage_) return dense_;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
  for (std::int64_t i = 0; i < n_; ++i)
    for (std::int64_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      m(i, cols_[k]) = vals_[k];
  return m;
}

SampledMatrix SampledMatrix::from_dense(const Eigen::MatrixXd& M,
                                        std::uint64_t seed_label) {
  if (M.rows() != M.cols()) throw std::invalid_argument("from_dense: not square");
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    if (M(i, i) != 0.0)
      throw std::invalid_argument("from_dense: nonzero diagonal");
    for (Eigen::Index j = i + 1; j < M.cols(); ++j) {
      if (std::abs(M(i, j) - M(j, i)) > 1e-12)
        throw std::invalid_argument("from_dense: not symmetric");
      if (!std::isfinite(M(i, j)))
        throw std::invalid_argument("from_dense: non-finite entry");
    }
  }
  SampledMatrix W;
  W.n_ = M.rows();
  W.seed_ = seed_label;
  W.profile_id_ = "external";
  W.dense_storage_ = true;
  W.dense_ = 0.5 * (M + M.transpose());  // exact symmetry
  return W;
}

void SampledMatrix::write_triplets(std::ostream& os) const {
  os.precision(17);
  if (dense_storage_) {
    for (std::int64_t i = 0; i < n_; ++i)
      for (std::int64_t j = i + 1; j < n_; ++j)
        if (dense_(i, j) != 0.0)
          os << i << ' ' << j << ' ' << dense_(i, j) << '\n';
    return;
  }
  for (std::int64_t i = 0; i < n_; ++i)
    for (std::int64_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      if (cols_[k] > i)
        os << i << ' ' << cols_[k] << ' ' << vals_[k] << '\n';
}

SampledMatrix sample_symmetric(const VarianceProfile& profile,
                               const EntryDistribution& dist,
                               std::uint64_t seed) {
  SampledMatrix W;
  W.n_ = profile.n();
  W.seed_ = seed;
  W.profile_id_ = describe_profile(profile);
  const std::int64_t n = profile.n();
  const bool dense = profile.uniform() ||
                     static_cast<double>(profile.K()) / n > 0.5;
  W.dense_storage_ = dense;
  if (dense) {
    W.dense_ = Eigen::MatrixXd::Zero(n, n);
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t j = i + 1; j < n; ++j) {
        const double w = pair_value(dist, seed, static_cast<int>(i),
                                    static_cast<int>(j),
                                    profile.entry(static_cast<int>(i),
                                                  static_cast<int>(j)));
        W.dense_(i, j) = w;
        W.dense_(j, i) = w;
      }
    }
    return W;
  }
  W.row_ptr_.assign(n + 1, 0);
  for (std::int64_t i = 0; i < n; ++i)
    W.row_ptr_[i + 1] = W.row_ptr_[i] + profile.row_size(static_cast<int>(i));
  W.cols_.resize(W.row_ptr_[n]);
  W.vals_.resize(W.row_ptr_[n]);
  for (std::int64_t i = 0; i < n; ++i) {
    const int len = profile.row_size(static_cast<int>(i));
    const int* cols = profile.row_cols(static_cast<int>(i));
    const double* svals = profile.row_vals(static_cast<int>(i));
    for (int k = 0; k < len; ++k) {
      W.cols_[W.row_ptr_[i] + k] = cols[k];
      W.vals_[W.row_ptr_[i] + k] =
          pair_value(dist, seed, static_cast<int>(i), cols[k], svals[k]);
    }
  }
  return W;
}

double sample_entry(const VarianceProfile& profile,
                    const EntryDistribution& dist, std::uint64_t seed, int i,
                    int j) {
  if (i == j) return 0.0;
  return pair_value(dist, seed, i, j, profile.entry(i, j));
}

SpectralResult spectral_norm(const SampledMatrix& M, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("spectral_norm: tol <= 0");
  const std::int64_t n = M.n();
  SpectralResult res;
  CounterRng rng(M.seed(), named_stream(0x73706563ull, 0));
  Eigen::VectorXd v(n);
  for (std::int64_t i = 0; i < n; ++i) v[i] = rng.next_normal();
  v.normalize();
  // iterate on M^2: centered ensembles have +/- spectral edge pairs on
  // which plain power iteration oscillates
  const int max_iter = static_cast<int>(10 * n);
  double last = -1.0;
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd y = M.apply(M.apply(v));
    const double rho = v.dot(y);  // Rayleigh quotient of M^2
    const double value = rho > 0.0 ? std::sqrt(rho) : 0.0;
    res.iterations = it;
    res.value = value;
    const double norm_y = y.norm();
    if (norm_y == 0.0) {
      res.value = 0.0;
      res.converged = true;
      return res;
    }
    if (last >= 0.0 && std::abs(value - last) < tol) {
      res.converged = true;
      return res;
    }
    last = value;
    v = y / norm_y;
  }
  res.converged = false;
  return res;
}

double gaussian_norm_bound_values(double triple_norm, double max_entry,
                                  std::int64_t n, double eps) {
  if (!(eps > 0.0 && eps <= 0.5))
    throw std::invalid_argument("gaussian_norm_bound: eps outside (0, 1/2]");
  if (n < 2) throw std::invalid_argument("gaussian_norm_bound: n < 2");
  const double term1 = 2.0 * std::sqrt(triple_norm);
  const double term2 = 6.0 / std::sqrt(std::log1p(eps)) *
                       std::sqrt(max_entry * std::log(static_cast<double>(n)));
  return (1.0 + eps) * (term1 + term2);
}

double gaussian_norm_bound(const VarianceProfile& profile, std::int64_t n,
                           double eps) {
  return gaussian_norm_bound_values(profile.max_row_sum(), profile.max_entry(),
                                    n, eps);
}

}  // namespace ampvp
