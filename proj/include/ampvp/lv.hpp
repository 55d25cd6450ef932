#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ampvp/measures.hpp"
#include "ampvp/sampled_matrix.hpp"
#include "ampvp/state_evolution.hpp"
#include "ampvp/variance_profile.hpp"

namespace ampvp {

// interaction variance profile plus growth rates; the profile norm
// bound max row sum < 1/4 and r > 0 are checked at construction
struct LvModel {
  LvModel(VarianceProfile V_in, Eigen::VectorXd r_in,
          EntryDistribution dist = EntryDistribution::gaussian());

  VarianceProfile V;
  Eigen::VectorXd r;
  EntryDistribution entry_dist;

  std::int64_t n() const { return V.n(); }
};

struct FixedPoint {
  Eigen::VectorXd p;     // >= 0
  Eigen::VectorXd zeta;  // in [0, 1)
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  double p_max = 0.0;  // invariance box edge used for the post check
  std::vector<double> residual_trace;
};

// damped Picard on (p, zeta) from (V (1+r)^2, 0); joint max-norm
// residual <= tol on success.  damping = 1 is plain Picard.
FixedPoint solve_fixed_point(const LvModel& model, double tol = 1e-12,
                             int max_iter = 10000, double damping = 1.0);

// smallest p with E(sqrt(p) xi + r_max)_+^2 <= 3p/4, by bisection
double fixed_point_box_edge(double r_max);

struct Equilibrium {
  Eigen::VectorXd u_star;  // >= 0
  Eigen::VectorXd w;       // (I - Sigma) u_star - r
  double comp_residual = 0.0;   // |<u_star, w>|
  double min_u = 0.0;
  double min_w = 0.0;
  std::string method;  // "lcp" or "ode"
  bool converged = false;
  int sweeps = 0;
};

// LCP(I - Sigma, -r) by projected SOR on the convex quadratic program
// min_{u >= 0} u'(I - Sigma)u/2 - r'u; requires spectral_norm(Sigma)
// < 1, throws std::invalid_argument otherwise.  A stall keeps the best
// iterate with converged = false.
Equilibrium equilibrium_lcp(const SampledMatrix& Sigma,
                            const Eigen::VectorXd& r, double tol = 1e-10,
                            double omega = 1.3, int max_sweeps = 10000);
Equilibrium equilibrium_lcp_dense(const Eigen::MatrixXd& Sigma,
                                  const Eigen::VectorXd& r,
                                  double tol = 1e-10, double omega = 1.3,
                                  int max_sweeps = 10000);

// du/dt = u . (r + (Sigma - I) u) integrated to time T with an
// embedded 5(4) pair; components dipping below -rtol reject the step,
// dips within [-rtol, 0) are clamped to 0.  Throws std::runtime_error
// when ||u||_inf exceeds 1e6.
Eigen::VectorXd integrate_lv(const SampledMatrix& Sigma,
                             const Eigen::VectorXd& r,
                             const Eigen::VectorXd& u0, double T,
                             double rtol = 1e-8);
Eigen::VectorXd integrate_lv_dense(const Eigen::MatrixXd& Sigma,
                                   const Eigen::VectorXd& r,
                                   const Eigen::VectorXd& u0, double T,
                                   double rtol = 1e-8);

// component i is the law of ((1 + zeta_i)(sqrt(p_i) xi + r_i))_+
RectifiedGaussianMixture predicted_mixture(const LvModel& model,
                                           const FixedPoint& fp);

// (1/n) sum_i Phi(r_i / sqrt(p_i)), the predicted surviving fraction;
// exceeds 1/2 whenever r > 0
double survival_fraction(const LvModel& model, const FixedPoint& fp);

// ||(I - Sigma)^{-1}|| ||eps|| = ||eps|| / lambda_min(I - Sigma);
// dense eigensolve for n <= 1024, shifted power iteration above.
// Throws when lambda_min < 1e-10.
double perturbation_bound(const Eigen::MatrixXd& Sigma,
                          const Eigen::VectorXd& eps_vec);

// profile with entries (1+zeta_i) v_ij (1+zeta_j) and the shift vector
// sqrt(1+zeta) . r feeding the scalar recursion whose limit satisfies
// a = (1+zeta) . p
VarianceProfile transformed_profile(const LvModel& model,
                                    const FixedPoint& fp);
Eigen::VectorXd transformed_shift(const LvModel& model, const FixedPoint& fp);

}  // namespace ampvp
