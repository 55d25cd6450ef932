#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <vector>

#include "ampvp/rng.hpp"
#include "ampvp/sampled_matrix.hpp"
#include "ampvp/variance_profile.hpp"

using namespace ampvp;

TEST_CASE("counter rng reproduces and separates streams") {
  CounterRng a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool all_equal = true, stream_differs = false, seed_differs = false;
  for (int k = 0; k < 64; ++k) {
    const std::uint64_t va = a.next_u64();
    all_equal = all_equal && va == b.next_u64();
    stream_differs = stream_differs || va != c.next_u64();
    seed_differs = seed_differs || va != d.next_u64();
  }
  CHECK(all_equal);
  CHECK(stream_differs);
  CHECK(seed_differs);

  CounterRng u(1, 2);
  for (int k = 0; k < 1000; ++k) {
    const double x = u.next_unit();
    CHECK(x > 0.0);
    CHECK(x <= 1.0);
  }

  CHECK(pair_stream(3, 9) == pair_stream(9, 3));
  CHECK(pair_stream(3, 9) != pair_stream(3, 8));
  CHECK(named_stream(0xabc, 0) != named_stream(0xabc, 1));
}

TEST_CASE("normal draws have unit moments") {
  CounterRng rng(2024, 0);
  const int count = 200000;
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  for (int k = 0; k < count; ++k) {
    const double z = rng.next_normal();
    s1 += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  s1 /= count;
  s2 /= count;
  s4 /= count;
  CHECK(std::abs(s1) <= 0.01);
  CHECK(std::abs(s2 - 1.0) <= 0.02);
  CHECK(std::abs(s4 - 3.0) <= 0.15);
}

TEST_CASE("wigner profile is uniform with zero diagonal") {
  const VarianceProfile p = make_profile(ProfileKind::wigner, 4, 4, 1.0);
  CHECK(p.uniform());
  CHECK(p.n() == 4);
  CHECK(p.K() == 4);
  CHECK(p.uniform_value() == 0.25);
  for (int i = 0; i < 4; ++i) {
    CHECK(p.entry(i, i) == 0.0);
    CHECK(p.row_sum(i) == 0.75);
    for (int j = 0; j < 4; ++j)
      if (i != j) CHECK(p.entry(i, j) == 0.25);
  }
  CHECK(p.max_row_sum() == p.min_row_sum());
  CHECK(p.max_entry() == 0.25);

  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(4, 1.0, 4.0);
  const Eigen::VectorXd sv = p.apply(v);
  const Eigen::VectorXd dv = p.dense() * v;
  CHECK((sv - dv).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("banded profile has exact row sums and honors its invariants") {
  const VarianceProfile p = make_profile(ProfileKind::banded, 100, 10, 1.0);
  for (int i = 0; i < 100; ++i) {
    CHECK(p.row_size(i) == 10);
    double manual = 0.0;
    for (int k = 0; k < p.row_size(i); ++k) manual += p.row_vals(i)[k];
    CHECK(p.row_sum(i) == manual);
    CHECK(std::abs(p.row_sum(i) - 1.0) <= 1e-13);
    CHECK(p.entry(i, i) == 0.0);
  }
  CHECK(p.max_entry() == 0.1);
  CHECK(p.max_row_support() <= p.support_constant() * p.K());

  // symmetry across the cyclic wrap
  for (auto [i, j] : std::vector<std::pair<int, int>>{{0, 1}, {0, 99}, {4, 9}, {95, 0}})
    CHECK(p.entry(i, j) == p.entry(j, i));
  CHECK(p.entry(0, 5) == 0.1);
  CHECK(p.entry(0, 6) == 0.0);
}

TEST_CASE("block and random-support profiles respect their support") {
  const VarianceProfile blk = make_profile(ProfileKind::block, 20, 5, 1.0);
  for (int i = 0; i < 20; ++i) CHECK(blk.row_size(i) == 4);
  CHECK(blk.entry(0, 1) == 0.2);
  CHECK(blk.entry(0, 5) == 0.0);
  CHECK(blk.entry(7, 8) == 0.2);

  const VarianceProfile rs1 = make_profile(ProfileKind::random_support, 50, 6, 1.0, 3);
  const VarianceProfile rs2 = make_profile(ProfileKind::random_support, 50, 6, 1.0, 3);
  const VarianceProfile rs3 = make_profile(ProfileKind::random_support, 50, 6, 1.0, 4);
  CHECK((rs1.dense() - rs2.dense()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((rs1.dense() - rs3.dense()).cwiseAbs().maxCoeff() > 0.0);
  for (int i = 0; i < 50; ++i) {
    CHECK(rs1.row_size(i) >= 6);  // union symmetrization only adds partners
    for (int k = 0; k < rs1.row_size(i); ++k)
      CHECK(rs1.row_vals(i)[k] == 1.0 / 6.0);
  }
  CHECK(rs1.max_row_support() <= rs1.support_constant() * rs1.K());
  CHECK_THROWS_AS(make_profile(ProfileKind::random_support, 10, 10, 1.0, 0),
                  std::invalid_argument);
}

TEST_CASE("triplet construction validates its input") {
  using T = std::vector<std::tuple<int, int, double>>;
  CHECK_THROWS_AS(VarianceProfile::from_triplets(3, 2, ProfileKind::banded, 1.0,
                                                 T{{0, 1, 0.1}, {0, 1, 0.2}}),
                  std::invalid_argument);  // duplicate
  CHECK_THROWS_AS(VarianceProfile::from_triplets(3, 2, ProfileKind::banded, 1.0,
                                                 T{{1, 1, 0.1}}),
                  std::invalid_argument);  // diagonal
  CHECK_THROWS_AS(VarianceProfile::from_triplets(3, 2, ProfileKind::banded, 1.0,
                                                 T{{1, 0, 0.1}}),
                  std::invalid_argument);  // lower triangle
  CHECK_THROWS_AS(VarianceProfile::from_triplets(3, 2, ProfileKind::banded, 1.0,
                                                 T{{0, 1, -0.1}}),
                  std::invalid_argument);  // negative variance
  CHECK_THROWS_AS(VarianceProfile::from_triplets(3, 5, ProfileKind::banded, 1.0,
                                                 T{{0, 1, 0.1}}),
                  std::invalid_argument);  // K > n

  // zero entries are dropped; a row left empty violates the positive
  // row-sum floor, so an all-zero profile cannot be built at all
  CHECK_THROWS_WITH_AS(VarianceProfile::from_triplets(
                           3, 2, ProfileKind::banded, 1.0, T{{0, 1, 0.0}}),
                       "profile: a row has zero variance sum",
                       std::invalid_argument);

  const VarianceProfile p = VarianceProfile::from_triplets(
      3, 2, ProfileKind::random_support, 1.0, T{{0, 1, 0.1}, {1, 2, 0.2}});
  CHECK(p.entry(0, 1) == 0.1);
  CHECK(p.entry(1, 0) == 0.1);
  CHECK(p.entry(0, 2) == 0.0);
  CHECK(p.row_sum(1) == doctest::Approx(0.3));
}

TEST_CASE("profile json round trip") {
  const VarianceProfile b = make_profile(ProfileKind::banded, 30, 4, 0.7);
  const VarianceProfile b2 = VarianceProfile::from_json(b.to_json());
  CHECK(b2.kind() == ProfileKind::banded);
  CHECK(b2.n() == 30);
  CHECK(b2.K() == 4);
  CHECK(b2.scale() == 0.7);
  CHECK((b.dense() - b2.dense()).cwiseAbs().maxCoeff() == 0.0);

  const VarianceProfile w = make_profile(ProfileKind::wigner, 12, 12, 0.2);
  const VarianceProfile w2 = VarianceProfile::from_json(w.to_json());
  CHECK(w2.uniform());
  CHECK((w.dense() - w2.dense()).cwiseAbs().maxCoeff() == 0.0);

  // a diagonally rescaled wigner profile is no longer uniform; its
  // serialized entries must survive the round trip untouched
  using T = std::vector<std::tuple<int, int, double>>;
  T trips;
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j)
      trips.emplace_back(i, j, 0.04 * (1.0 + 0.1 * i) * (1.0 + 0.1 * j));
  const VarianceProfile t =
      VarianceProfile::from_triplets(5, 5, ProfileKind::wigner, 0.2, trips);
  const VarianceProfile t2 = VarianceProfile::from_json(t.to_json());
  CHECK_FALSE(t2.uniform());
  CHECK((t.dense() - t2.dense()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sampled entries carry the profile variance") {
  const VarianceProfile w = make_profile(ProfileKind::wigner, 1000, 1000, 1.0);
  const SampledMatrix W = sample_symmetric(w, EntryDistribution::gaussian(), 11);
  const Eigen::MatrixXd D = W.dense();
  double sum2 = 0.0;
  std::int64_t count = 0;
  for (int i = 0; i < 1000; ++i) {
    CHECK(D(i, i) == 0.0);
    for (int j = i + 1; j < 1000; ++j) {
      sum2 += D(i, j) * D(i, j);
      ++count;
    }
  }
  const double emp_var = sum2 / static_cast<double>(count);
  CHECK(std::abs(emp_var - 1e-3) <= 0.05 * 1e-3);

  // fixed-entry second moment over independent seeds
  const VarianceProfile b = make_profile(ProfileKind::banded, 12, 4, 0.8);
  const double s01 = b.entry(0, 1);
  for (const EntryDistribution& dist :
       {EntryDistribution::gaussian(), EntryDistribution::rademacher(),
        EntryDistribution::uniform_centered()}) {
    double m1 = 0.0, m2 = 0.0;
    const int draws = 10000;
    for (int s = 0; s < draws; ++s) {
      const double v = sample_entry(b, dist, 1000 + s, 0, 1);
      m1 += v;
      m2 += v * v;
    }
    m1 /= draws;
    m2 /= draws;
    CHECK(std::abs(m1) <= 0.02);
    CHECK(std::abs(m2 / s01 - 1.0) <= 0.05);
  }

  // rademacher entries sit exactly on +-sqrt(s_ij)
  const double mag = std::sqrt(s01);
  for (int s = 0; s < 50; ++s) {
    const double v = sample_entry(b, EntryDistribution::rademacher(), s, 0, 1);
    CHECK(std::abs(std::abs(v) - mag) <= 1e-15);
  }

  CHECK_THROWS_AS(EntryDistribution::custom_table({-1.0, 2.0}, {0.5, 0.5}),
                  std::invalid_argument);  // mean != 0
  const EntryDistribution tbl =
      EntryDistribution::custom_table({-1.0, 1.0}, {0.5, 0.5});
  double tm2 = 0.0;
  for (int s = 0; s < 2000; ++s) {
    const double v = sample_entry(b, tbl, s, 0, 1);
    tm2 += v * v;
  }
  CHECK(std::abs(tm2 / 2000 / s01 - 1.0) <= 1e-12);  // two-point table, |X|=1
}

TEST_CASE("matrix sampling is reproducible and order independent") {
  const VarianceProfile b = make_profile(ProfileKind::banded, 24, 6, 0.5);
  const SampledMatrix W1 = sample_symmetric(b, EntryDistribution::gaussian(), 5);
  const SampledMatrix W2 = sample_symmetric(b, EntryDistribution::gaussian(), 5);
  const SampledMatrix W3 = sample_symmetric(b, EntryDistribution::gaussian(), 6);
  CHECK((W1.dense() - W2.dense()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((W1.dense() - W3.dense()).cwiseAbs().maxCoeff() > 0.0);

  for (auto [i, j] : std::vector<std::pair<int, int>>{{0, 1}, {2, 5}, {23, 0}}) {
    CHECK(W1.entry(i, j) == W1.entry(j, i));
    CHECK(sample_entry(b, EntryDistribution::gaussian(), 5, i, j) == W1.entry(i, j));
  }
  CHECK(W1.entry(0, 12) == 0.0);  // outside the band
  CHECK(W1.entry(3, 3) == 0.0);

  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(24, -1.0, 1.0);
  CHECK((W1.apply(v) - W1.dense() * v).cwiseAbs().maxCoeff() <= 1e-13);

  Eigen::MatrixXd sq = W1.dense().array().square().matrix();
  CHECK((W1.apply_squared(v) - sq * v).cwiseAbs().maxCoeff() <= 1e-13);

  std::ostringstream os;
  W1.write_triplets(os);
  CHECK(os.str().find(' ') != std::string::npos);

  Eigen::MatrixXd asym = Eigen::MatrixXd::Zero(3, 3);
  asym(0, 1) = 0.5;  // missing mirror entry
  CHECK_THROWS_AS(SampledMatrix::from_dense(asym), std::invalid_argument);
}

TEST_CASE("spectral norm matches dense eigensolves") {
  Eigen::MatrixXd two = Eigen::MatrixXd::Zero(2, 2);
  two(0, 1) = two(1, 0) = -0.37;
  const SpectralResult r2 = spectral_norm(SampledMatrix::from_dense(two));
  CHECK(r2.converged);
  CHECK(std::abs(r2.value - 0.37) <= 1e-9);

  const SpectralResult rz =
      spectral_norm(SampledMatrix::from_dense(Eigen::MatrixXd::Zero(3, 3)));
  CHECK(rz.value == 0.0);

  Eigen::MatrixXd M(50, 50);
  CounterRng rng(9, 1);
  for (int i = 0; i < 50; ++i) {
    M(i, i) = 0.0;
    for (int j = i + 1; j < 50; ++j) M(i, j) = M(j, i) = rng.next_normal();
  }
  const double power = spectral_norm(SampledMatrix::from_dense(M)).value;
  const Eigen::VectorXd eigs =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M).eigenvalues();
  const double exact = eigs.cwiseAbs().maxCoeff();
  CHECK(std::abs(power - exact) <= 1e-8 * exact);
}

TEST_CASE("gaussian norm bound evaluates and dominates sampled norms") {
  CHECK(gaussian_norm_bound_values(0.0, 0.0, 100, 0.1) == 0.0);
  CHECK(gaussian_norm_bound_values(0.2, 2e-4, 1000, 0.1) ==
        doctest::Approx(1.7784867427990003).epsilon(1e-14));

  const VarianceProfile w = make_profile(ProfileKind::wigner, 1000, 1000, 0.2);
  CHECK(gaussian_norm_bound(w, 1000, 0.1) ==
        gaussian_norm_bound_values(w.max_row_sum(), w.max_entry(), 1000, 0.1));

  CHECK_THROWS_AS(gaussian_norm_bound_values(1.0, 0.1, 100, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(gaussian_norm_bound_values(1.0, 0.1, 100, 0.6),
                  std::invalid_argument);

  const VarianceProfile b = make_profile(ProfileKind::banded, 400, 36, 1.0);
  const double bound = gaussian_norm_bound(b, 400, 0.1);
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const SampledMatrix W = sample_symmetric(b, EntryDistribution::gaussian(), seed);
    if (spectral_norm(W, 1e-8).value <= bound) ++ok;
  }
  CHECK(ok >= 19);
}
