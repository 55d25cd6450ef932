#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ampvp/gauss_kernels.hpp"
#include "ampvp/sampled_matrix.hpp"
#include "ampvp/state_evolution.hpp"
#include "ampvp/variance_profile.hpp"

namespace ampvp {

enum class OnsagerMode { se_expected, empirical_deriv, hadamard_sq };
std::string to_string(OnsagerMode mode);
OnsagerMode onsager_mode_from_string(const std::string& name);

struct AmpConfig {
  OnsagerMode onsager_mode = OnsagerMode::se_expected;
  int t_max = 1;
  ActivationFamily activation;
  Eigen::VectorXd eta;
  Eigen::VectorXd x0;
  // spectral_norm(W) above this flags the trajectory; flagged runs are
  // excluded from acceptance statistics
  double cond_limit = 2.0;
  bool zero_onsager = false;  // diagnostic switch, correction dropped
};

struct AmpTrajectory {
  // iterates[t] is x^t, t = 0..t_max
  std::vector<Eigen::VectorXd> iterates;
  // residuals[t-1]: |m2(x^t) - SE moment2(t)| for t = 1..t_max
  std::vector<double> residuals;
  std::uint64_t seed = 0;
  std::string matrix_id;
  std::string config_id;
  bool flagged = false;
  double spectral_norm_w = 0.0;

  const Eigen::VectorXd& x(int t) const { return iterates.at(t); }
  int t_max() const { return static_cast<int>(iterates.size()) - 1; }
};

// x^{t+1} = W h(x^t, t) - diag(b^t) h(x^{t-1}, t-1), no correction at
// t = 0; b^t per onsager_mode.  Requires se advanced to depth t_max
// with the same profile, activation, eta, x0 (se_expected reads its
// derivative expectations; the other modes only need it for the
// residual diagnostics).  Throws on NaN/Inf naming the step.
AmpTrajectory amp_run(const SampledMatrix& W, const VarianceProfile& S,
                      const AmpConfig& cfg, const SeState& se);

struct GapReport {
  double empirical = 0.0;
  double predicted = 0.0;
  double gap = 0.0;
  SePrediction prediction;
};

// empirical = (1/n) sum beta_i phi(eta_i, x_i at phi.times);
// predicted via se_expect; gap = |difference|
GapReport empirical_vs_se(const AmpTrajectory& traj, const SeState& se,
                          const TestFunction& phi,
                          const Eigen::VectorXd& beta = Eigen::VectorXd());

// d2 between the empirical particle cloud (x_i^1..x_i^t) and its
// Gaussian mixture law.  t = 1: exact sorted coupling against a
// mixture resample of equal count.  t >= 2: per-time slice distances
// aggregated as sqrt(sum of squares), a coupling lower bound.
double wasserstein_check(const AmpTrajectory& traj, const SeState& se, int t,
                         std::uint64_t mixture_seed = 1);

}  // namespace ampvp
