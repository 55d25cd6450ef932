#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>

#include "ampvp/gauss_kernels.hpp"

namespace ampvp {

// Sorted sample vector with uniform weights 1/len.
class EmpiricalMeasure {
 public:
  explicit EmpiricalMeasure(Eigen::VectorXd samples);

  std::int64_t size() const { return samples_.size(); }
  const Eigen::VectorXd& sorted() const { return samples_; }
  double mean() const;
  double moment2() const;

 private:
  Eigen::VectorXd samples_;  // ascending, finite
};

// exact 1-D order-statistics coupling: d2^2 = (1/n) sum (a_(i) - b_(i))^2;
// requires equal counts (caller resamples)
double wasserstein2(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

// n-component mixture; component i is the law of (mean_i + sd_i * xi)_+,
// a rectified Gaussian with an atom at 0 of mass Phi(-mean_i/sd_i).
struct RectifiedGaussianMixture {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;  // >= 0

  std::int64_t components() const { return mean.size(); }
  double cdf(double x) const;
  double atom_mass() const;   // total mass at 0
  double mean_value() const;  // via relu_m1
  double moment2() const;     // via relu_m2
  double survival() const;    // (1/n) sum P[component > 0]
  // E phi(Y) with Y the mixture draw; kink-split quadrature per component
  double expect(const std::function<double(double)>& phi,
                int order = 96) const;
};

// uniform component, then one rectified Gaussian; deterministic per seed
EmpiricalMeasure sample_mixture(const RectifiedGaussianMixture& mix,
                                std::int64_t count, std::uint64_t seed);

// |empirical mean of phi - exact mixture expectation of phi|
double pl2_gap(const EmpiricalMeasure& a, const RectifiedGaussianMixture& mix,
               const std::function<double(double)>& phi);

// scalar test functions of PL(2) type used across experiments
struct ScalarTestFn {
  std::string name;
  std::function<double(double)> f;
};
ScalarTestFn tf_square();
ScalarTestFn tf_relu();
// Phi(x/eps): smooth indicator of {x > 0}
ScalarTestFn tf_smooth_indicator(double eps = 0.1);

}  // namespace ampvp
