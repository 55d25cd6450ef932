#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ampvp/gauss_kernels.hpp"
#include "ampvp/variance_profile.hpp"

namespace ampvp {

// Per-coordinate Gaussian recursion driven by a variance profile.
//
// After t steps the state holds, for every coordinate i:
//   cov(i):  t x t covariance of (Z_i^1, ..., Z_i^t)
//   gram(i): (t+1) x (t+1) Gram matrix of
//            (h(x0_i, 0), h(Z_i^1, 1), ..., h(Z_i^t, t))
// The step rule appends one row to cov from the neighbours' Gram
// matrices and then extends each Gram by one activation expectation
// row.  The old block of cov is copied verbatim, so cov at step t+1
// nests cov at step t bit for bit unless a repair fired.
class SeState {
 public:
  SeState(VarianceProfile profile, ActivationFamily h, Eigen::VectorXd eta,
          Eigen::VectorXd x0, int gh_order_1d = 100, int gh_order_2d = 60);

  // appends Z^{t+1}; throws std::runtime_error if a covariance update
  // leaves an eigenvalue below -1e-10
  void step();

  int t() const { return t_; }
  std::int64_t n() const { return n_; }
  bool repaired() const { return repaired_; }
  const VarianceProfile& profile() const { return profile_; }
  const ActivationFamily& activation() const { return h_; }
  const Eigen::VectorXd& eta() const { return eta_; }
  const Eigen::VectorXd& x0() const { return x0_; }

  const Eigen::MatrixXd& cov(std::int64_t i) const { return cov_[i]; }
  const Eigen::MatrixXd& gram(std::int64_t i) const { return gram_[i]; }

  // variances E (Z_i^s)^2 for 1 <= s <= t
  Eigen::VectorXd variances(int s) const;
  // (1/n) sum_i E (Z_i^s)^2, the predicted second moment of x^s
  double moment2(int s) const;
  // (1/n) sum_i E h(Z_i^s, s)^2
  double post_moment2(int s) const;
  // per-coordinate E dh(Z_i^s, s), the Onsager expectation vector
  Eigen::VectorXd mean_deriv(int s) const;

 private:
  void extend_gram();

  VarianceProfile profile_;
  ActivationFamily h_;
  Eigen::VectorXd eta_;
  Eigen::VectorXd x0_;
  std::int64_t n_ = 0;
  int t_ = 0;
  bool repaired_ = false;
  std::vector<Eigen::MatrixXd> cov_;
  std::vector<Eigen::MatrixXd> gram_;
  GaussHermiteRule rule1d_;
  GaussHermiteRule rule2d_;
};

// E h(Za, sa) h(Zb, sb) for centred jointly Gaussian (Za, Zb) with
// variances va, vb and covariance cab; uses closed rectified kernels
// when the family advertises them, otherwise a tensor quadrature rule
double activation_cross_moment(const ActivationFamily& h, double eta,
                               int sa, int sb, double va, double vb,
                               double cab, const GaussHermiteRule& rule2d);

// scalar statistic of a handful of iterate times; f receives eta_i and
// the iterate values at `times` in order
struct TestFunction {
  std::string name;
  std::vector<int> times;  // ascending, each >= 1
  std::function<double(double, const Eigen::VectorXd&)> f;
};

struct SePrediction {
  double value = 0.0;
  double std_error = 0.0;  // nonzero only on the Monte Carlo path
  bool monte_carlo = false;
};

// (1/n) sum_i beta_i E f(eta_i, Z_i at phi.times); quadrature when at
// most two times are active, shared-draw Monte Carlo (>= min_draws)
// otherwise.  Empty beta means all ones; |beta_i| must stay finite.
SePrediction se_expect(const SeState& state, const TestFunction& phi,
                       const Eigen::VectorXd& beta = Eigen::VectorXd(),
                       std::int64_t min_draws = 100000,
                       std::uint64_t seed = 0x5ef1);

// Scalar tracks of the shifted-ReLU recursion started from x0 = 1:
//   a[t]    = E (Z_i^t)^2
//   zeta[t] = S Phi(eta / sqrt(a[t]))   (same step index as a)
//   q[t]    = corr(Z_i^t, Z_i^{t-1}), q[1] = 0 as the lag into the
//             deterministic start has no correlation to speak of
struct LvSeTrack {
  Eigen::VectorXd a;
  Eigen::VectorXd zeta;
  Eigen::VectorXd q;
  Eigen::VectorXd a_prev;  // one step behind; the q update needs the lag
  int t = 0;
};

// track at t = 1: a = S (1 + eta)^2
LvSeTrack lv_se_init(const VarianceProfile& S, const Eigen::VectorXd& eta);

// one step: a' = S relu_m2(eta, sqrt a); zeta' from a'; q' through the
// normalized rectified cross moment (the t = 1 -> 2 step reduces to a
// first-moment form since the start is deterministic)
LvSeTrack lv_se_step(const LvSeTrack& track, const VarianceProfile& S,
                     const Eigen::VectorXd& eta);

struct LvSeLimit {
  LvSeTrack track;       // a at the fixed point, zeta, q near 1
  int iterations = 0;
  double residual = 0.0;  // ||a - S relu_m2(eta, sqrt a)||_inf
  bool converged = false;
};

// Picard to the fixed point; requires max row sum of S below 1 (the
// contraction rate), throws std::invalid_argument otherwise.  q is
// iterated until within tol of 1.
LvSeLimit lv_se_limit(const VarianceProfile& S, const Eigen::VectorXd& eta,
                      double tol = 1e-12, int max_iter = 20000);

}  // namespace ampvp
