#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "ampvp/lv.hpp"
#include "ampvp/rng.hpp"
#include "oracles.hpp"

using namespace ampvp;

namespace {

// symmetric zero-diagonal gaussian matrix rescaled to a target norm
Eigen::MatrixXd random_sigma(int n, double target_norm, std::uint64_t seed) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  CounterRng rng(seed, 0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) M(i, j) = M(j, i) = rng.next_normal();
  const double norm =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M).eigenvalues().cwiseAbs().maxCoeff();
  if (norm > 0.0) M *= target_norm / norm;
  return M;
}

LvModel wigner_model(int n, double alpha, double r_val) {
  // finite-n wigner row sums are scale (n-1)/n; rescale so the row-sum
  // norm equals alpha exactly and scalar oracles apply verbatim
  const double scale = alpha * n / (n - 1.0);
  return LvModel(make_profile(ProfileKind::wigner, n, n, scale),
                 Eigen::VectorXd::Constant(n, r_val));
}

}  // namespace

TEST_CASE("model construction enforces the contraction regime") {
  CHECK_THROWS_AS(LvModel(make_profile(ProfileKind::wigner, 100, 100, 1.2),
                          Eigen::VectorXd::Ones(100)),
                  std::invalid_argument);
  // scale 0.25 accumulates to one ulp below 1/4, so probe clearly above
  CHECK_THROWS_AS(LvModel(make_profile(ProfileKind::banded, 100, 10, 0.26),
                          Eigen::VectorXd::Ones(100)),
                  std::invalid_argument);
  Eigen::VectorXd r = Eigen::VectorXd::Ones(100);
  r[7] = 0.0;
  CHECK_THROWS_AS(LvModel(make_profile(ProfileKind::banded, 100, 10, 0.2), r),
                  std::invalid_argument);
  CHECK_NOTHROW(LvModel(make_profile(ProfileKind::banded, 100, 10, 0.24),
                        Eigen::VectorXd::Ones(100)));
}

TEST_CASE("fixed point matches the scalar bisection oracle") {
  const auto root = oracles::scalar_fixed_point(0.2, 1.0);
  // frozen from an arbitrary-precision solve of the scalar system
  CHECK(root.p == doctest::Approx(0.52459133611602416).epsilon(1e-13));
  CHECK(root.zeta == doctest::Approx(0.31867466360454936).epsilon(1e-13));

  const LvModel model = wigner_model(500, 0.2, 1.0);
  const FixedPoint fp = solve_fixed_point(model);
  CHECK(fp.converged);
  CHECK(fp.residual <= 1e-12);
  CHECK(fp.p.maxCoeff() - fp.p.minCoeff() <= 1e-12);
  CHECK(fp.zeta.maxCoeff() - fp.zeta.minCoeff() <= 1e-12);
  CHECK(std::abs(fp.p[0] - root.p) <= 1e-8);
  CHECK(std::abs(fp.zeta[0] - root.zeta) <= 1e-8);

  const FixedPoint damped = solve_fixed_point(model, 1e-12, 10000, 0.5);
  CHECK(damped.converged);
  CHECK((damped.p - fp.p).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((damped.zeta - fp.zeta).cwiseAbs().maxCoeff() <= 1e-10);

  CHECK_FALSE(fp.residual_trace.empty());
  CHECK(fp.residual_trace.back() <= fp.residual_trace.front());

  CHECK_THROWS_AS(solve_fixed_point(model, 1e-12, 10000, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve_fixed_point(model, 1e-12, 10000, 1.5),
                  std::invalid_argument);
}

TEST_CASE("fixed point stays inside the invariance box") {
  const LvModel model = wigner_model(300, 0.2, 1.0);
  const FixedPoint fp = solve_fixed_point(model);
  CHECK(fp.p_max > 0.0);
  CHECK(fp.p.maxCoeff() <= fp.p_max);
  CHECK(fp.p.minCoeff() >= 0.0);
  CHECK(fp.zeta.minCoeff() >= 0.0);
  CHECK(fp.zeta.maxCoeff() < 1.0);

  // the edge solves E(sqrt(p) xi + r_max)_+^2 = 3p/4
  const double edge = fixed_point_box_edge(1.0);
  CHECK(relu_m2(1.0, std::sqrt(edge)) == doctest::Approx(0.75 * edge).epsilon(1e-10));
}

TEST_CASE("fixed point permutes with the model") {
  const int n = 10;
  const VarianceProfile V = make_profile(ProfileKind::banded, n, 2, 0.2);
  Eigen::VectorXd r(n);
  CounterRng rng(31, 0);
  for (int i = 0; i < n; ++i) r[i] = 0.5 + rng.next_unit();

  std::vector<int> perm = {4, 7, 1, 9, 0, 3, 8, 2, 6, 5};
  std::vector<std::tuple<int, int, double>> trips;
  const Eigen::MatrixXd Vd = V.dense();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (Vd(i, j) > 0.0)
        trips.emplace_back(std::min(perm[i], perm[j]),
                           std::max(perm[i], perm[j]), Vd(i, j));
  const VarianceProfile Vp =
      VarianceProfile::from_triplets(n, 2, ProfileKind::banded, 0.2, trips);
  Eigen::VectorXd rp(n);
  for (int i = 0; i < n; ++i) rp[perm[i]] = r[i];

  const FixedPoint fp = solve_fixed_point(LvModel(V, r));
  const FixedPoint fpp = solve_fixed_point(LvModel(Vp, rp));
  for (int i = 0; i < n; ++i) {
    CHECK(fpp.p[perm[i]] == fp.p[i]);
    CHECK(fpp.zeta[perm[i]] == fp.zeta[i]);
  }
}

TEST_CASE("complementarity solver handles closed forms") {
  SUBCASE("no interactions") {
    const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(4, 4);
    Eigen::VectorXd r(4);
    r << 1.0, 0.3, 2.0, 0.7;
    const Equilibrium eq = equilibrium_lcp_dense(Z, r);
    CHECK(eq.converged);
    CHECK((eq.u_star - r).cwiseAbs().maxCoeff() == 0.0);
    CHECK(eq.w.cwiseAbs().maxCoeff() == 0.0);
    CHECK(eq.comp_residual == 0.0);
    CHECK(eq.method == "lcp");
  }

  SUBCASE("symmetric mutualism doubles the abundance") {
    Eigen::MatrixXd Sg(2, 2);
    Sg << 0.0, 0.5, 0.5, 0.0;
    const Equilibrium eq = equilibrium_lcp_dense(Sg, Eigen::VectorXd::Ones(2));
    CHECK(eq.converged);
    CHECK(std::abs(eq.u_star[0] - 2.0) <= 1e-8);
    CHECK(std::abs(eq.u_star[1] - 2.0) <= 1e-8);
  }

  SUBCASE("strong competition drives the weak species out") {
    Eigen::MatrixXd Sg(2, 2);
    Sg << 0.0, -0.9, -0.9, 0.0;
    Eigen::VectorXd r(2);
    r << 1.0, 0.05;
    const Equilibrium eq = equilibrium_lcp_dense(Sg, r);
    CHECK(eq.converged);
    CHECK(std::abs(eq.u_star[0] - 1.0) <= 1e-8);
    CHECK(eq.u_star[1] == 0.0);
    CHECK(std::abs(eq.w[1] - 0.85) <= 1e-8);
    CHECK(eq.comp_residual <= 1e-8);
  }

  SUBCASE("spectral precondition is enforced") {
    Eigen::MatrixXd Sg(2, 2);
    Sg << 0.0, 1.2, 1.2, 0.0;
    CHECK_THROWS_AS(equilibrium_lcp_dense(Sg, Eigen::VectorXd::Ones(2)),
                    std::invalid_argument);
  }

  SUBCASE("a stall keeps the best iterate") {
    Eigen::MatrixXd Sg = random_sigma(6, 0.8, 3);
    const Equilibrium eq =
        equilibrium_lcp_dense(Sg, Eigen::VectorXd::Ones(6), 1e-10, 1.3, 1);
    CHECK_FALSE(eq.converged);
    CHECK(eq.u_star.allFinite());
    CHECK(eq.sweeps == 1);
  }
}

TEST_CASE("complementarity solver agrees with active-set enumeration") {
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const int n = 2 + static_cast<int>(seed % 9);
    CounterRng rng(seed, 1);
    const double target = 0.3 + 0.6 * rng.next_unit();
    const Eigen::MatrixXd Sg = random_sigma(n, target, seed * 13 + 1);
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) r[i] = 0.1 + 1.9 * rng.next_unit();

    const Equilibrium eq = equilibrium_lcp_dense(Sg, r);
    CHECK(eq.converged);
    const Eigen::VectorXd oracle = oracles::lcp_active_set(Sg, r);
    CHECK((eq.u_star - oracle).cwiseAbs().maxCoeff() <= 1e-7);
    CHECK(eq.comp_residual <= 1e-8 * n);
    CHECK(eq.min_u >= -1e-15);
    ++checked;
  }
  CHECK(checked == 30);

  // the sparse-matrix entry point matches the dense one bit for bit
  const VarianceProfile V = make_profile(ProfileKind::banded, 50, 6, 0.2);
  const SampledMatrix Sg = sample_symmetric(V, EntryDistribution::gaussian(), 4);
  const Eigen::VectorXd r = Eigen::VectorXd::Ones(50);
  const Equilibrium a = equilibrium_lcp(Sg, r);
  const Equilibrium b = equilibrium_lcp_dense(Sg.dense(), r);
  CHECK((a.u_star - b.u_star).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.sweeps == b.sweeps);
}

TEST_CASE("logistic growth integrates to its closed form") {
  const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(1, 1);
  const Eigen::VectorXd r = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd u0(1);
  u0 << 0.5;

  // u(t) = 1 / (1 + e^{-t}); at t = 10 the gap to 1 is 4.5e-5, so the
  // 1e-6 agreement with the carrying capacity needs t >= 14
  const Eigen::VectorXd u10 = integrate_lv_dense(Z, r, u0, 10.0);
  CHECK(std::abs(u10[0] - 1.0 / (1.0 + std::exp(-10.0))) <= 1e-8);
  const Eigen::VectorXd u14 = integrate_lv_dense(Z, r, u0, 14.0);
  CHECK(std::abs(u14[0] - 1.0) <= 1e-6);
}

TEST_CASE("dynamics hold stationary points and stay nonnegative") {
  const VarianceProfile V = make_profile(ProfileKind::wigner, 20, 20, 0.2);
  const SampledMatrix Sg = sample_symmetric(V, EntryDistribution::gaussian(), 3);
  REQUIRE(spectral_norm(Sg).value < 1.0);
  const Eigen::VectorXd r = Eigen::VectorXd::Ones(20);
  const Equilibrium eq = equilibrium_lcp(Sg, r);

  for (double T : {1.0, 50.0}) {
    const Eigen::VectorXd uT = integrate_lv(Sg, r, eq.u_star, T);
    CHECK((uT - eq.u_star).cwiseAbs().maxCoeff() <= 1e-5);
  }

  CounterRng rng(8, 0);
  Eigen::VectorXd u0(20);
  for (int i = 0; i < 20; ++i) u0[i] = 0.05 + rng.next_unit();
  const Eigen::VectorXd uT = integrate_lv(Sg, r, u0, 30.0);
  CHECK(uT.minCoeff() >= 0.0);

  CHECK_THROWS_AS(integrate_lv(Sg, r, Eigen::VectorXd::Constant(20, -0.5), 1.0),
                  std::invalid_argument);
}

TEST_CASE("mutualistic blowups are caught") {
  Eigen::MatrixXd Sg(2, 2);
  Sg << 0.0, 1.5, 1.5, 0.0;
  CHECK_THROWS_AS(integrate_lv_dense(Sg, Eigen::VectorXd::Ones(2),
                                     Eigen::VectorXd::Ones(2), 50.0),
                  std::runtime_error);
}

TEST_CASE("trajectories land on the complementarity equilibrium") {
  const VarianceProfile V = make_profile(ProfileKind::wigner, 200, 200, 0.2);
  const SampledMatrix Sg = sample_symmetric(V, EntryDistribution::gaussian(), 1);
  const Eigen::VectorXd r = Eigen::VectorXd::Ones(200);
  const Equilibrium eq = equilibrium_lcp(Sg, r);

  CounterRng rng(1, named_stream(0xacce5500ull, 0));
  Eigen::VectorXd u0(200);
  for (int i = 0; i < 200; ++i) u0[i] = 0.1 + 1.9 * rng.next_unit();
  const Eigen::VectorXd uT = integrate_lv(Sg, r, u0, 500.0);
  CHECK((uT - eq.u_star).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("perturbation bound dominates measured shifts") {
  SUBCASE("closed forms") {
    const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(3, 3);
    Eigen::VectorXd eps(3);
    eps << 0.3, -0.4, 0.0;
    CHECK(perturbation_bound(Z, eps) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(perturbation_bound(Z, Eigen::VectorXd::Zero(3)) == 0.0);

    Eigen::MatrixXd asym = Eigen::MatrixXd::Zero(2, 2);
    asym(0, 1) = 0.5;
    CHECK_THROWS_AS(perturbation_bound(asym, Eigen::VectorXd::Ones(2)),
                    std::invalid_argument);

    Eigen::MatrixXd nearly = Eigen::MatrixXd::Identity(2, 2);
    nearly *= 1.0 - 1e-12;
    CHECK_THROWS_AS(perturbation_bound(nearly, Eigen::VectorXd::Ones(2)),
                    std::runtime_error);
  }

  SUBCASE("measured equilibrium shifts stay below the bound") {
    const Eigen::MatrixXd Sg = random_sigma(50, 0.7, 21);
    CounterRng rng(22, 0);
    Eigen::VectorXd r(50);
    for (int i = 0; i < 50; ++i) r[i] = 0.1 + 1.9 * rng.next_unit();
    const Equilibrium base = equilibrium_lcp_dense(Sg, r, 1e-12);
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd eps(50);
      for (int i = 0; i < 50; ++i) eps[i] = rng.next_normal();
      eps *= (1e-3 + 0.497 * rng.next_unit()) / eps.norm();
      const Equilibrium moved = equilibrium_lcp_dense(Sg, r + eps, 1e-12);
      const double shift = (moved.u_star - base.u_star).norm();
      CHECK(shift <= perturbation_bound(Sg, eps));
    }
  }

  SUBCASE("large systems switch to the iterative eigensolve") {
    // narrow bands fluctuate hard; scale 0.1 keeps lmax near 0.78 (seed 6)
    const VarianceProfile V = make_profile(ProfileKind::banded, 1100, 10, 0.1);
    const Eigen::MatrixXd Sg =
        sample_symmetric(V, EntryDistribution::gaussian(), 6).dense();
    Eigen::VectorXd eps = Eigen::VectorXd::Constant(1100, 0.01);
    const double got = perturbation_bound(Sg, eps);
    const double lmax =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Sg).eigenvalues().maxCoeff();
    const double want = eps.norm() / (1.0 - lmax);
    CHECK(got == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("predicted mixture components and survival") {
  const LvModel model = wigner_model(400, 0.2, 1.0);
  const FixedPoint fp = solve_fixed_point(model);
  const RectifiedGaussianMixture mix = predicted_mixture(model, fp);

  CHECK(mix.components() == 400);
  CHECK(mix.mean.maxCoeff() - mix.mean.minCoeff() <= 1e-11);
  CHECK(mix.sd.maxCoeff() - mix.sd.minCoeff() <= 1e-11);
  CHECK(mix.mean[0] == doctest::Approx((1.0 + fp.zeta[0]) * 1.0).epsilon(1e-14));
  CHECK(mix.sd[0] ==
        doctest::Approx((1.0 + fp.zeta[0]) * std::sqrt(fp.p[0])).epsilon(1e-14));

  const double gamma = survival_fraction(model, fp);
  CHECK(gamma == doctest::Approx(mix.survival()).epsilon(1e-13));
  CHECK(gamma > 0.5);
  CHECK(gamma == doctest::Approx(0.91630955756545309).epsilon(1e-7));

  // gamma exceeds one half on every valid model: the atom never wins
  // (random-support rows symmetrize by union, so row sums run well
  // above the nominal scale; 0.07 keeps them under the 1/4 guard)
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const VarianceProfile V =
        make_profile(ProfileKind::random_support, 60, 8, 0.07, seed);
    CounterRng rng(seed, 2);
    Eigen::VectorXd r(60);
    for (int i = 0; i < 60; ++i) r[i] = 0.1 + 1.9 * rng.next_unit();
    const LvModel m(V, r);
    const FixedPoint f = solve_fixed_point(m);
    CHECK(f.converged);
    CHECK(survival_fraction(m, f) > 0.5);
  }
}

TEST_CASE("transformed profile feeds the scalar recursion consistently") {
  const VarianceProfile V = make_profile(ProfileKind::banded, 100, 10, 0.24);
  CounterRng rng(12, 0);
  Eigen::VectorXd r(100);
  for (int i = 0; i < 100; ++i) r[i] = 0.5 + rng.next_unit();
  const LvModel model(V, r);
  const FixedPoint fp = solve_fixed_point(model);
  REQUIRE(fp.converged);

  const VarianceProfile Vt = transformed_profile(model, fp);
  const Eigen::VectorXd etat = transformed_shift(model, fp);
  CHECK(Vt.kind() == V.kind());
  CHECK(Vt.max_row_sum() < 1.0);
  for (auto [i, j] : std::vector<std::pair<int, int>>{{0, 1}, {5, 9}, {40, 45}, {0, 99}})
    CHECK(Vt.entry(i, j) ==
          (1.0 + fp.zeta[i]) * V.entry(i, j) * (1.0 + fp.zeta[j]));
  for (int i = 0; i < 100; ++i)
    CHECK(etat[i] == std::sqrt(1.0 + fp.zeta[i]) * r[i]);

  const LvSeLimit lim = lv_se_limit(Vt, etat);
  CHECK(lim.converged);
  const Eigen::VectorXd want = (1.0 + fp.zeta.array()) * fp.p.array();
  CHECK((lim.track.a - want).cwiseAbs().maxCoeff() <= 1e-8);
}
