#include "ampvp/measures.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ampvp/rng.hpp"

namespace ampvp {

EmpiricalMeasure::EmpiricalMeasure(Eigen::VectorXd samples)
    : samples_(std::move(samples)) {
  if (samples_.size() == 0)
    throw std::invalid_argument("EmpiricalMeasure: empty sample");
  if (!samples_.allFinite())
    throw std::invalid_argument("EmpiricalMeasure: non-finite sample");
  std::sort(samples_.data(), samples_.data() + samples_.size());
}

double EmpiricalMeasure::mean() const { return samples_.mean(); }

double EmpiricalMeasure::moment2() const {
  return samples_.squaredNorm() / static_cast<double>(samples_.size());
}

double wasserstein2(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("wasserstein2: sample counts differ");
  const double d2 =
      (a.sorted() - b.sorted()).squaredNorm() / static_cast<double>(a.size());
  return std::sqrt(d2);
}

double RectifiedGaussianMixture::cdf(double x) const {
  if (mean.size() != sd.size() || mean.size() == 0)
    throw std::invalid_argument("mixture: bad component arrays");
  if (x < 0.0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    if (sd[i] == 0.0)
      acc += mean[i] <= x ? 1.0 : 0.0;
    else
      acc += norm_cdf((x - mean[i]) / sd[i]);
  }
  return acc / static_cast<double>(mean.size());
}

double RectifiedGaussianMixture::atom_mass() const { return cdf(0.0); }

double RectifiedGaussianMixture::mean_value() const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i)
    acc += relu_m1(mean[i], sd[i]);
  return acc / static_cast<double>(mean.size());
}

double RectifiedGaussianMixture::moment2() const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i)
    acc += relu_m2(mean[i], sd[i]);
  return acc / static_cast<double>(mean.size());
}

double RectifiedGaussianMixture::survival() const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i)
    acc += relu_prob(mean[i], sd[i]);
  return acc / static_cast<double>(mean.size());
}

double RectifiedGaussianMixture::expect(
    const std::function<double(double)>& phi, int order) const {
  const QuadRule& rule = gauss_legendre(order);
  const double phi0 = phi(0.0);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    if (sd[i] == 0.0) {
      acc += phi(mean[i] > 0.0 ? mean[i] : 0.0);
      continue;
    }
    // atom at 0 plus a single panel starting at the rectification kink
    const double kink = -mean[i] / sd[i];
    acc += phi0 * norm_cdf(kink);
    const double lo = std::max(kink, -16.0);
    const double hi = 16.0;
    if (lo >= hi) continue;
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    double part = 0.0;
    for (int k = 0; k < rule.nodes.size(); ++k) {
      const double xi = mid + half * rule.nodes[k];
      part += rule.weights[k] * phi(mean[i] + sd[i] * xi) * norm_pdf(xi);
    }
    acc += half * part;
  }
  return acc / static_cast<double>(mean.size());
}

EmpiricalMeasure sample_mixture(const RectifiedGaussianMixture& mix,
                                std::int64_t count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_mixture: count < 1");
  if (mix.mean.size() != mix.sd.size() || mix.mean.size() == 0)
    throw std::invalid_argument("sample_mixture: bad component arrays");
  const std::int64_t m = mix.mean.size();
  CounterRng rng(seed, named_stream(0x6d697873ull, 0));
  Eigen::VectorXd out(count);
  for (std::int64_t k = 0; k < count; ++k) {
    const std::int64_t i = static_cast<std::int64_t>(rng.next_u64() % m);
    const double v = mix.mean[i] + mix.sd[i] * rng.next_normal();
    out[k] = v > 0.0 ? v : 0.0;
  }
  return EmpiricalMeasure(std::move(out));
}

double pl2_gap(const EmpiricalMeasure& a, const RectifiedGaussianMixture& mix,
               const std::function<double(double)>& phi) {
  double emp = 0.0;
  const Eigen::VectorXd& s = a.sorted();
  for (Eigen::Index k = 0; k < s.size(); ++k) emp += phi(s[k]);
  emp /= static_cast<double>(s.size());
  return std::abs(emp - mix.expect(phi));
}

ScalarTestFn tf_square() {
  return {"square", [](double x) { return x * x; }};
}

ScalarTestFn tf_relu() {
  return {"relu", [](double x) { return x > 0.0 ? x : 0.0; }};
}

ScalarTestFn tf_smooth_indicator(double eps) {
  return {"smooth-indicator",
          [eps](double x) { return norm_cdf(x / eps); }};
}

}  // namespace ampvp
