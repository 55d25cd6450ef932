#include "ampvp/variance_profile.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <tuple>

#include "ampvp/rng.hpp"
#include "json.hpp"

namespace ampvp {

std::string to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::banded:
      return "banded";
    case ProfileKind::block:
      return "block";
    case ProfileKind::random_support:
      return "random-support";
    case ProfileKind::wigner:
      return "wigner";
  }
  throw std::logic_error("unknown ProfileKind");
}

ProfileKind profile_kind_from_string(const std::string& s) {
  if (s == "banded") return ProfileKind::banded;
  if (s == "block") return ProfileKind::block;
  if (s == "random-support" || s == "random_support")
    return ProfileKind::random_support;
  if (s == "wigner") return ProfileKind::wigner;
  throw std::invalid_argument("unknown profile kind: " + s);
}

VarianceProfile VarianceProfile::make_wigner(std::int64_t n, double scale) {
  if (n < 2) throw std::invalid_argument("profile: n < 2");
  if (!(scale > 0.0)) throw std::invalid_argument("profile: scale <= 0");
  VarianceProfile p;
  p.n_ = n;
  p.K_ = n;
  p.kind_ = ProfileKind::wigner;
  p.scale_ = scale;
  p.uniform_ = true;
  p.uniform_value_ = scale / static_cast<double>(n);
  p.finalize();
  return p;
}

VarianceProfile VarianceProfile::from_triplets(
    std::int64_t n, std::int64_t K, ProfileKind kind, double scale,
    const std::vector<std::tuple<int, int, double>>& triplets) {
  if (n < 2) throw std::invalid_argument("profile: n < 2");
  if (K < 2 || K > n) throw std::invalid_argument("profile: K outside [2, n]");
  if (!(scale > 0.0)) throw std::invalid_argument("profile: scale <= 0");
  VarianceProfile p;
  p.n_ = n;
  p.K_ = K;
  p.kind_ = kind;
  p.scale_ = scale;

  std::vector<std::vector<std::pair<int, double>>> rows(n);
  std::set<std::pair<int, int>> seen;
  for (const auto& [i, j, s] : triplets) {
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw std::invalid_argument("profile: triplet index out of range");
    if (i >= j)
      throw std::invalid_argument("profile: triplets must have i < j");
    if (s < 0.0) throw std::invalid_argument("profile: negative variance");
    if (!seen.insert({i, j}).second)
      throw std::invalid_argument("profile: duplicate triplet");
    if (s == 0.0) continue;
    rows[i].push_back({j, s});
    rows[j].push_back({i, s});
  }
  p.row_ptr_.assign(n + 1, 0);
  for (std::int64_t i = 0; i < n; ++i) {
    std::sort(rows[i].begin(), rows[i].end());
    p.row_ptr_[i + 1] = p.row_ptr_[i] + static_cast<std::int64_t>(rows[i].size());
  }
  p.cols_.reserve(p.row_ptr_[n]);
  p.vals_.reserve(p.row_ptr_[n]);
  for (std::int64_t i = 0; i < n; ++i) {
    for (const auto& [j, s] : rows[i]) {
      p.cols_.push_back(j);
      p.vals_.push_back(s);
    }
  }
  p.finalize();
  return p;
}

void VarianceProfile::finalize() {
  if (uniform_) {
    max_support_ = n_ - 1;
    max_entry_ = uniform_value_;
    min_row_sum_ = max_row_sum_ = uniform_value_ * static_cast<double>(n_ - 1);
    support_constant_ = std::ceil(static_cast<double>(max_support_) /
                                  static_cast<double>(K_));
    return;
  }
  max_support_ = 0;
  max_entry_ = 0.0;
  min_row_sum_ = 0.0;
  max_row_sum_ = 0.0;
  for (std::int64_t i = 0; i < n_; ++i) {
    const std::int64_t len = row_ptr_[i + 1] - row_ptr_[i];
    max_support_ = std::max(max_support_, len);
    double sum = 0.0;
    for (std::int64_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      max_entry_ = std::max(max_entry_, vals_[k]);
      sum += vals_[k];
    }
    if (i == 0) {
      min_row_sum_ = max_row_sum_ = sum;
    } else {
      min_row_sum_ = std::min(min_row_sum_, sum);
      max_row_sum_ = std::max(max_row_sum_, sum);
    }
  }
  if (!(min_row_sum_ > 0.0))
    throw std::invalid_argument("profile: a row has zero variance sum");
  support_constant_ = std::ceil(static_cast<double>(max_support_) /
                                static_cast<double>(K_));
}

double VarianceProfile::entry(int i, int j) const {
  if (i == j) return 0.0;
  if (uniform_) return uniform_value_;
  const auto begin = cols_.begin() + row_ptr_[i];
  const auto end = cols_.begin() + row_ptr_[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return vals_[it - cols_.begin()];
}

double VarianceProfile::row_sum(int i) const {
  if (uniform_) return uniform_value_ * static_cast<double>(n_ - 1);
  double sum = 0.0;
  for (std::int64_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
    sum += vals_[k];
  return sum;
}

int VarianceProfile::row_size(int i) const {
  if (uniform_) return static_cast<int>(n_ - 1);
  return static_cast<int>(row_ptr_[i + 1] - row_ptr_[i]);
}

const int* VarianceProfile::row_cols(int i) const {
  if (uniform_)
    throw std::logic_error("row_cols: uniform profile has implicit rows");
  return cols_.data() + row_ptr_[i];
}

const double* VarianceProfile::row_vals(int i) const {
  if (uniform_)
    throw std::logic_error("row_vals: uniform profile has implicit rows");
  return vals_.data() + row_ptr_[i];
}

Eigen::VectorXd VarianceProfile::apply(const Eigen::VectorXd& v) const {
  if (v.size() != n_) throw std::invalid_argument("apply: size mismatch");
  if (uniform_) {
    const double total = v.sum();
    return uniform_value_ * (Eigen::VectorXd::Constant(n_, total) - v);
  }
  Eigen::VectorXd out(n_);
  for (std::int64_t i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (std::int64_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      acc += vals_[k] * v[cols_[k]];
    out[i] = acc;
  }
  return out;
}

Eigen::MatrixXd VarianceProfile::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
  if (uniform_) {
    m.setConstant(uniform_value_);
    m.diagonal().setZero();
    return m;
  }
  for (std::int64_t i = 0; i < n_; ++i)
    for (std::int64_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      m(i, cols_[k]) = vals_[k];
  return m;
}

std::string VarianceProfile::to_json() const {
  nlohmann::json j;
  j["n"] = n_;
  j["K"] = K_;
  j["kind"] = to_string(kind_);
  j["scale"] = scale_;
  nlohmann::json trips = nlohmann::json::array();
  if (!uniform_) {
    for (std::int64_t i = 0; i < n_; ++i) {
      for (std::int64_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        if (cols_[k] > i)
          trips.push_back({i, cols_[k], vals_[k]});
      }
    }
  }
  j["triplets"] = std::move(trips);
  return j.dump();
}

VarianceProfile VarianceProfile::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const std::int64_t n = j.at("n").get<std::int64_t>();
  const std::int64_t K = j.at("K").get<std::int64_t>();
  const ProfileKind kind =
      profile_kind_from_string(j.at("kind").get<std::string>());
  const double scale = j.at("scale").get<double>();
  // a uniform wigner profile serializes with no triplets; a rescaled
  // one keeps its entries
  if (kind == ProfileKind::wigner && j.at("triplets").empty())
    return make_wigner(n, scale);
  std::vector<std::tuple<int, int, double>> trips;
  for (const auto& t : j.at("triplets")) {
    if (!t.is_array() || t.size() != 3)
      throw std::invalid_argument("profile json: malformed triplet");
    trips.emplace_back(t[0].get<int>(), t[1].get<int>(), t[2].get<double>());
  }
  return from_triplets(n, K, kind, scale, trips);
}

VarianceProfile make_profile(ProfileKind kind, std::int64_t n, std::int64_t K,
                             double scale, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("make_profile: n < 2");
  if (!(scale > 0.0)) throw std::invalid_argument("make_profile: scale <= 0");
  if (kind == ProfileKind::wigner) return VarianceProfile::make_wigner(n, scale);
  if (K < 2 || K > n)
    throw std::invalid_argument("make_profile: K outside [2, n]");

  std::set<std::pair<int, int>> pairs;
  if (kind == ProfileKind::banded) {
    const std::int64_t half = K / 2;
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t o = 1; o <= half; ++o) {
        const std::int64_t j = (i + o) % n;
        if (i == j) continue;
        pairs.insert({static_cast<int>(std::min(i, j)),
                      static_cast<int>(std::max(i, j))});
      }
    }
  } else if (kind == ProfileKind::block) {
    const std::int64_t blocks = std::max<std::int64_t>(1, n / K);
    const std::int64_t base = n / blocks;
    const std::int64_t rem = n % blocks;
    std::int64_t start = 0;
    for (std::int64_t blk = 0; blk < blocks; ++blk) {
      const std::int64_t size = base + (blk < rem ? 1 : 0);
      for (std::int64_t i = start; i < start + size; ++i)
        for (std::int64_t j = i + 1; j < start + size; ++j)
          pairs.insert({static_cast<int>(i), static_cast<int>(j)});
      start += size;
    }
  } else {  // random_support
    if (K > n - 1)
      throw std::invalid_argument("make_profile: random-support needs K < n");
    for (std::int64_t i = 0; i < n; ++i) {
      CounterRng rng(seed, named_stream(0x72737570ull, i));
      std::set<std::int64_t> partners;
      while (static_cast<std::int64_t>(partners.size()) < K) {
        const std::int64_t j = static_cast<std::int64_t>(rng.next_u64() % n);
        if (j != i) partners.insert(j);
      }
      for (const std::int64_t j : partners)
        pairs.insert({static_cast<int>(std::min(i, j)),
                      static_cast<int>(std::max(i, j))});
    }
  }

  std::vector<std::tuple<int, int, double>> trips;
  trips.reserve(pairs.size());
  const double value = scale / static_cast<double>(K);
  for (const auto& [i, j] : pairs) trips.emplace_back(i, j, value);
  return VarianceProfile::from_triplets(n, K, kind, scale, trips);
}

}  // namespace ampvp
