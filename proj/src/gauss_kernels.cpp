#include "ampvp/gauss_kernels.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace ampvp {

namespace {

// nodes/weights built from a symmetric tridiagonal Jacobi matrix
// (Golub-Welsch); total_mass scales the weights
QuadRule golub_welsch(const Eigen::VectorXd& offdiag, double total_mass) {
  const int m = static_cast<int>(offdiag.size()) + 1;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(m, m);
  for (int k = 0; k + 1 < m; ++k) {
    jacobi(k, k + 1) = offdiag[k];
    jacobi(k + 1, k) = offdiag[k];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  QuadRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights.resize(m);
  for (int k = 0; k < m; ++k) {
    const double v0 = es.eigenvectors()(0, k);
    rule.weights[k] = total_mass * v0 * v0;
  }
  return rule;
}

}  // namespace

const QuadRule& gauss_legendre(int order) {
  static std::mutex mu;
  static std::map<int, QuadRule>* cache = new std::map<int, QuadRule>();
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache->find(order);
  if (it == cache->end()) {
    if (order < 2) throw std::invalid_argument("quadrature order < 2");
    Eigen::VectorXd off(order - 1);
    for (int k = 1; k < order; ++k)
      off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
    it = cache->emplace(order, golub_welsch(off, 2.0)).first;
  }
  return it->second;
}

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("norm_quantile: p outside (0,1)");
  // Acklam's piecewise rational approximation
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
          c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // one Halley step against the exact CDF
  const double e = norm_cdf(x) - p;
  const double u = e / norm_pdf(x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double relu_prob(double mean, double sd) {
  if (sd < 0.0) throw std::invalid_argument("relu_prob: sd < 0");
  if (sd == 0.0) return mean >= 0.0 ? 1.0 : 0.0;
  return norm_cdf(mean / sd);
}

double relu_m1(double mean, double sd) {
  if (sd < 0.0) throw std::invalid_argument("relu_m1: sd < 0");
  if (sd == 0.0) return mean > 0.0 ? mean : 0.0;
  const double z = mean / sd;
  return mean * norm_cdf(z) + sd * norm_pdf(z);
}

double relu_m2(double mean, double sd) {
  if (sd < 0.0) throw std::invalid_argument("relu_m2: sd < 0");
  if (sd == 0.0) {
    const double m = mean > 0.0 ? mean : 0.0;
    return m * m;
  }
  const double z = mean / sd;
  return (mean * mean + sd * sd) * norm_cdf(z) + mean * sd * norm_pdf(z);
}

namespace {

// int_a^c g^2 phi(g) dg via the antiderivative Phi(g) - g phi(g)
double partial_m2(double a, double c) {
  return (norm_cdf(c) - c * norm_pdf(c)) - (norm_cdf(a) - a * norm_pdf(a));
}

}  // namespace

double relu_cross(double q, double b, double d, int order) {
  if (!(std::abs(q) <= 1.0))
    throw std::invalid_argument("relu_cross: |q| > 1");
  if (q == 1.0) {
    // G1 = G2: both factors positive iff g >= max(-b, -d)
    const double c = b < d ? -b : -d;
    return (1.0 + b * d) * norm_cdf(-c) + (b + d + c) * norm_pdf(c);
  }
  if (q == -1.0) {
    // G2 = -G1: support is -b <= g <= d
    if (d <= -b) return 0.0;
    const double i0 = norm_cdf(d) - norm_cdf(-b);
    const double i1 = norm_pdf(b) - norm_pdf(d);
    const double i2 = partial_m2(-b, d);
    return -i2 + (d - b) * i1 + b * d * i0;
  }
  // E (G1+b)_+ (G2+d)_+ = int_{-b}^{inf} (g+b) E(q g + sd G + d)_+ phi(g) dg;
  // the integrand's only kink sits at the panel start, so one high-order
  // Gauss-Legendre panel on [max(-b,-16), 16] converges spectrally
  const double sd = std::sqrt((1.0 - q) * (1.0 + q));
  const double lo = -b > -16.0 ? -b : -16.0;
  const double hi = 16.0;
  if (lo >= hi) return 0.0;
  const QuadRule& rule = gauss_legendre(order);
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  double acc = 0.0;
  for (int k = 0; k < order; ++k) {
    const double g = mid + half * rule.nodes[k];
    acc += rule.weights[k] * (g + b) * relu_m1(q * g + d, sd) * norm_pdf(g);
  }
  return half * acc;
}

GaussHermiteRule::GaussHermiteRule(int order_in) : order(order_in) {
  if (order < 2) throw std::invalid_argument("GaussHermiteRule: order < 2");
  Eigen::VectorXd off(order - 1);
  for (int k = 1; k < order; ++k) off[k - 1] = std::sqrt(double(k));
  QuadRule rule = golub_welsch(off, 1.0);
  nodes = std::move(rule.nodes);
  weights = std::move(rule.weights);
}

ActivationFamily relu_shift_activation() {
  ActivationFamily h;
  h.name = "relu-shift";
  h.growth = 1;
  h.relu_kernels = true;
  h.eval = [](double x, double eta, int) {
    const double v = x + eta;
    return v > 0.0 ? v : 0.0;
  };
  h.deriv = [](double x, double eta, int) {
    return x + eta > 0.0 ? 1.0 : 0.0;
  };
  return h;
}

ActivationFamily identity_activation() {
  ActivationFamily h;
  h.name = "identity";
  h.growth = 1;
  h.eval = [](double x, double, int) { return x; };
  h.deriv = [](double, double, int) { return 1.0; };
  return h;
}

ActivationFamily tanh_shift_activation() {
  ActivationFamily h;
  h.name = "tanh-shift";
  h.growth = 1;
  h.eval = [](double x, double eta, int) { return std::tanh(x + eta); };
  h.deriv = [](double x, double eta, int) {
    const double t = std::tanh(x + eta);
    return 1.0 - t * t;
  };
  return h;
}

GaussExpect gauss_expect(const ActivationFamily& h, double eta, int t,
                         double variance, const GaussHermiteRule& rule) {
  if (variance < 0.0)
    throw std::invalid_argument("gauss_expect: variance < 0");
  GaussExpect out;
  if (variance == 0.0) {
    out.mean_h = h.eval(0.0, eta, t);
    out.mean_h2 = out.mean_h * out.mean_h;
    out.mean_dh = h.deriv(0.0, eta, t);
    out.stein_dh = out.mean_dh;  // Stein quotient undefined at zero variance
    out.stein_consistent = true;
    return out;
  }
  const double sd = std::sqrt(variance);
  if (h.relu_kernels) {
    out.mean_h = relu_m1(eta, sd);
    out.mean_h2 = relu_m2(eta, sd);
    out.mean_dh = relu_prob(eta, sd);
    // E[Z (Z+eta)_+] = relu_m2 - eta relu_m1; the quotient equals Phi exactly
    out.stein_dh = (out.mean_h2 - eta * out.mean_h) / variance;
    out.stein_consistent = std::abs(out.mean_dh - out.stein_dh) <= 1e-6;
    return out;
  }
  double m1 = 0.0, m2 = 0.0, dh = 0.0, zh = 0.0;
  for (int k = 0; k < rule.order; ++k) {
    const double z = sd * rule.nodes[k];
    const double w = rule.weights[k];
    const double v = h.eval(z, eta, t);
    m1 += w * v;
    m2 += w * v * v;
    dh += w * h.deriv(z, eta, t);
    zh += w * z * v;
  }
  out.mean_h = m1;
  out.mean_h2 = m2;
  out.mean_dh = dh;
  out.stein_dh = zh / variance;
  out.stein_consistent = std::abs(out.mean_dh - out.stein_dh) <= 1e-6;
  return out;
}

}  // namespace ampvp
