#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace ampvp {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;

inline double norm_pdf(double x) {
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

inline double norm_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.70710678118654752440084436210485);
}

// inverse standard normal CDF (Acklam's rational approximation refined by
// one Halley step; absolute error < 1e-15 on (0,1))
double norm_quantile(double p);

// P[sd*xi + mean >= 0]; point mass for sd = 0
double relu_prob(double mean, double sd);

// E (sd*xi + mean)_+
double relu_m1(double mean, double sd);

// E (sd*xi + mean)_+^2
double relu_m2(double mean, double sd);

// E (G1+b)_+ (G2+d)_+ for standard normals with correlation q.
// |q| = 1 is exact (partial Gaussian moments); |q| < 1 reduces the inner
// expectation to relu_m1 and integrates out G1 with a Gauss-Legendre rule
// whose panel starts at the integrand's only kink, g = -b. `order` controls
// the outer rule; doubling it is the refinement used in tests.
double relu_cross(double q, double b, double d, int order = 96);

// Gauss-Legendre nodes and weights on [-1, 1], cached per order;
// references stay valid for the process lifetime
struct QuadRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};
const QuadRule& gauss_legendre(int order);

// Gauss-Hermite rule in probabilists' normalization: integrates
// f against N(0,1), weights sum to 1, exact for polynomials of
// degree <= 2*order - 1. Built by eigendecomposition of the Jacobi matrix.
struct GaussHermiteRule {
  int order = 0;
  Eigen::VectorXd nodes;    // ascending, symmetric about 0
  Eigen::VectorXd weights;  // positive, sum to 1

  explicit GaussHermiteRule(int order);

  double integrate(const std::function<double(double)>& f) const {
    double acc = 0.0;
    for (int k = 0; k < order; ++k) acc += weights[k] * f(nodes[k]);
    return acc;
  }
};

// Activation h(x, eta, t) with an a.e. derivative and growth declaration
// |h| <= C (1 + |x|^growth).
struct ActivationFamily {
  std::string name;
  int growth = 1;
  // closed-form rectified-Gaussian kernels apply (h(x,eta,t) = (x+eta)_+)
  bool relu_kernels = false;
  std::function<double(double x, double eta, int t)> eval;
  std::function<double(double x, double eta, int t)> deriv;
};

ActivationFamily relu_shift_activation();
ActivationFamily identity_activation();
// smooth bounded activation, used to exercise the generic quadrature paths
ActivationFamily tanh_shift_activation();

struct GaussExpect {
  double mean_h = 0.0;     // E h(Z)
  double mean_h2 = 0.0;    // E h(Z)^2
  double mean_dh = 0.0;    // E h'(Z), direct quadrature of the derivative
  double stein_dh = 0.0;   // E[Z h(Z)] / variance
  bool stein_consistent = true;  // |mean_dh - stein_dh| <= 1e-6
};

// expectations of h under Z ~ N(0, variance); variance = 0 is a point mass
GaussExpect gauss_expect(const ActivationFamily& h, double eta, int t,
                         double variance, const GaussHermiteRule& rule);

}  // namespace ampvp
