#include "ampvp/state_evolution.hpp"

#include <algorithm>
#include <cmath>

#include "ampvp/rng.hpp"

namespace ampvp {

namespace {

constexpr double kPsdHardFloor = -1e-10;
constexpr int kMaxSteps = 30;

double clamp_corr(double q) { return std::min(1.0, std::max(-1.0, q)); }

}  // namespace

SeState::SeState(VarianceProfile profile, ActivationFamily h,
                 Eigen::VectorXd eta, Eigen::VectorXd x0, int gh_order_1d,
                 int gh_order_2d)
    : profile_(std::move(profile)),
      h_(std::move(h)),
      eta_(std::move(eta)),
      x0_(std::move(x0)),
      rule1d_(gh_order_1d),
      rule2d_(gh_order_2d) {
  n_ = profile_.n();
  if (eta_.size() != n_ || x0_.size() != n_)
    throw std::invalid_argument("SeState: eta/x0 size mismatch");
  if (!eta_.allFinite() || !x0_.allFinite())
    throw std::invalid_argument("SeState: non-finite parameters");
  if (!h_.eval || !h_.deriv)
    throw std::invalid_argument("SeState: activation not callable");
  cov_.resize(n_);
  gram_.resize(n_);
  for (std::int64_t i = 0; i < n_; ++i) {
    const double h0 = h_.eval(x0_[i], eta_[i], 0);
    gram_[i] = Eigen::MatrixXd::Constant(1, 1, h0 * h0);
    cov_[i] = Eigen::MatrixXd(0, 0);
  }
}

double activation_cross_moment(const ActivationFamily& h, double eta, int sa,
                               int sb, double va, double vb, double cab,
                               const GaussHermiteRule& rule2d) {
  if (va < 0.0 || vb < 0.0)
    throw std::invalid_argument("cross moment: negative variance");
  if (va == 0.0 || vb == 0.0) {
    // one argument degenerates to the point mass at 0
    const double fixed = va == 0.0 ? h.eval(0.0, eta, sa) : h.eval(0.0, eta, sb);
    const double var = va == 0.0 ? vb : va;
    const int time = va == 0.0 ? sb : sa;
    if (var == 0.0) return fixed * h.eval(0.0, eta, time);
    if (h.relu_kernels) return fixed * relu_m1(eta, std::sqrt(var));
    double acc = 0.0;
    const double sd = std::sqrt(var);
    for (int k = 0; k < rule2d.order; ++k)
      acc += rule2d.weights[k] * h.eval(sd * rule2d.nodes[k], eta, time);
    return fixed * acc;
  }
  const double sda = std::sqrt(va);
  const double sdb = std::sqrt(vb);
  const double q = clamp_corr(cab / (sda * sdb));
  if (h.relu_kernels)
    return sda * sdb * relu_cross(q, eta / sda, eta / sdb);
  // rotation: Za = sda g1, Zb = sdb (q g1 + sqrt(1-q^2) g2)
  const double c2 = std::sqrt(std::max(0.0, 1.0 - q * q));
  double acc = 0.0;
  for (int k1 = 0; k1 < rule2d.order; ++k1) {
    const double g1 = rule2d.nodes[k1];
    const double fa = h.eval(sda * g1, eta, sa);
    if (fa == 0.0) continue;
    double inner = 0.0;
    for (int k2 = 0; k2 < rule2d.order; ++k2) {
      const double zb = sdb * (q * g1 + c2 * rule2d.nodes[k2]);
      inner += rule2d.weights[k2] * h.eval(zb, eta, sb);
    }
    acc += rule2d.weights[k1] * fa * inner;
  }
  return acc;
}

void SeState::step() {
  if (t_ >= kMaxSteps) throw std::logic_error("SeState: step cap reached");
  const int t = t_;  // cov is t x t, gram is (t+1) x (t+1)

  // new covariance row: R'[t][b] = sum_l s_il gram_l[t][b]
  std::vector<Eigen::VectorXd> new_row(t + 1);
  {
    Eigen::VectorXd g(n_);
    for (int b = 0; b <= t; ++b) {
      for (std::int64_t l = 0; l < n_; ++l) g[l] = gram_[l](t, b);
      new_row[b] = profile_.apply(g);
    }
  }
  for (std::int64_t i = 0; i < n_; ++i) {
    Eigen::MatrixXd next(t + 1, t + 1);
    next.topLeftCorner(t, t) = cov_[i];
    for (int b = 0; b < t; ++b) {
      next(t, b) = new_row[b][i];
      next(b, t) = new_row[b][i];
    }
    next(t, t) = new_row[t][i];

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(next);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin < kPsdHardFloor)
      throw std::runtime_error("state evolution: covariance eigenvalue " +
                               std::to_string(lmin) + " below hard floor");
    if (lmin < 0.0) {
      // clip the negative tail; quadrature error must not poison the
      // downstream factorizations
      Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
      next = es.eigenvectors() * ev.asDiagonal() *
             es.eigenvectors().transpose();
      next = 0.5 * (next + next.transpose()).eval();
      repaired_ = true;
    }
    cov_[i] = std::move(next);
  }
  t_ = t + 1;
  extend_gram();
}

void SeState::extend_gram() {
  const int t = t_;  // cov is t x t, gram must become (t+1) x (t+1)
  for (std::int64_t i = 0; i < n_; ++i) {
    const Eigen::MatrixXd& R = cov_[i];
    Eigen::MatrixXd next(t + 1, t + 1);
    next.topLeftCorner(t, t) = gram_[i];
    const double vt = R(t - 1, t - 1);
    const GaussExpect ge = gauss_expect(h_, eta_[i], t, vt, rule1d_);
    // against the deterministic start Z^0 = x0
    const double h0 = h_.eval(x0_[i], eta_[i], 0);
    next(t, 0) = h0 * ge.mean_h;
    next(0, t) = next(t, 0);
    // against each Gaussian time b = 1..t-1
    for (int b = 1; b < t; ++b) {
      const double vb = R(b - 1, b - 1);
      const double cab = R(t - 1, b - 1);
      const double m =
          activation_cross_moment(h_, eta_[i], t, b, vt, vb, cab, rule2d_);
      next(t, b) = m;
      next(b, t) = m;
    }
    next(t, t) = ge.mean_h2;
    gram_[i] = std::move(next);
  }
}

Eigen::VectorXd SeState::variances(int s) const {
  if (s < 1 || s > t_) throw std::out_of_range("variances: bad step");
  Eigen::VectorXd v(n_);
  for (std::int64_t i = 0; i < n_; ++i) v[i] = cov_[i](s - 1, s - 1);
  return v;
}

double SeState::moment2(int s) const { return variances(s).mean(); }

double SeState::post_moment2(int s) const {
  if (s < 1 || s > t_) throw std::out_of_range("post_moment2: bad step");
  double acc = 0.0;
  for (std::int64_t i = 0; i < n_; ++i) acc += gram_[i](s, s);
  return acc / static_cast<double>(n_);
}

Eigen::VectorXd SeState::mean_deriv(int s) const {
  if (s < 1 || s > t_) throw std::out_of_range("mean_deriv: bad step");
  Eigen::VectorXd out(n_);
  for (std::int64_t i = 0; i < n_; ++i) {
    const double v = cov_[i](s - 1, s - 1);
    if (h_.relu_kernels) {
      out[i] = relu_prob(eta_[i], std::sqrt(v));
    } else {
      out[i] = gauss_expect(h_, eta_[i], s, v, rule1d_).mean_dh;
    }
  }
  return out;
}

namespace {

// PSD square root factor from an eigendecomposition; tolerates the
// semidefinite matrices a repair can produce
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal();
}

}  // namespace

SePrediction se_expect(const SeState& state, const TestFunction& phi,
                       const Eigen::VectorXd& beta, std::int64_t min_draws,
                       std::uint64_t seed) {
  const std::int64_t n = state.n();
  Eigen::VectorXd b = beta.size() == 0 ? Eigen::VectorXd::Ones(n) : beta;
  if (b.size() != n) throw std::invalid_argument("se_expect: beta size");
  if (!b.allFinite()) throw std::invalid_argument("se_expect: beta unbounded");
  const int k = static_cast<int>(phi.times.size());
  for (int s : phi.times)
    if (s < 1 || s > state.t())
      throw std::out_of_range("se_expect: test function time out of range");

  SePrediction out;
  if (k == 0) {
    double acc = 0.0;
    const Eigen::VectorXd empty;
    for (std::int64_t i = 0; i < n; ++i)
      acc += b[i] * phi.f(state.eta()[i], empty);
    out.value = acc / static_cast<double>(n);
    return out;
  }
  if (k == 1) {
    const int s = phi.times[0];
    const GaussHermiteRule rule(100);
    double acc = 0.0;
    Eigen::VectorXd arg(1);
    for (std::int64_t i = 0; i < n; ++i) {
      const double sd = std::sqrt(std::max(0.0, state.cov(i)(s - 1, s - 1)));
      double e = 0.0;
      for (int m = 0; m < rule.order; ++m) {
        arg[0] = sd * rule.nodes[m];
        e += rule.weights[m] * phi.f(state.eta()[i], arg);
      }
      acc += b[i] * e;
    }
    out.value = acc / static_cast<double>(n);
    return out;
  }
  if (k == 2) {
    const int sa = phi.times[0];
    const int sb = phi.times[1];
    const GaussHermiteRule rule(60);
    double acc = 0.0;
    Eigen::VectorXd arg(2);
    for (std::int64_t i = 0; i < n; ++i) {
      const double va = state.cov(i)(sa - 1, sa - 1);
      const double vb = state.cov(i)(sb - 1, sb - 1);
      const double cab = state.cov(i)(sa - 1, sb - 1);
      const double sda = std::sqrt(std::max(0.0, va));
      const double sdb = std::sqrt(std::max(0.0, vb));
      const double q =
          sda > 0.0 && sdb > 0.0 ? clamp_corr(cab / (sda * sdb)) : 0.0;
      const double c2 = std::sqrt(std::max(0.0, 1.0 - q * q));
      double e = 0.0;
      for (int m1 = 0; m1 < rule.order; ++m1) {
        const double g1 = rule.nodes[m1];
        arg[0] = sda * g1;
        double inner = 0.0;
        for (int m2 = 0; m2 < rule.order; ++m2) {
          arg[1] = sdb * (q * g1 + c2 * rule.nodes[m2]);
          inner += rule.weights[m2] * phi.f(state.eta()[i], arg);
        }
        e += rule.weights[m1] * inner;
      }
      acc += b[i] * e;
    }
    out.value = acc / static_cast<double>(n);
    return out;
  }

  // three or more active times: shared-draw Monte Carlo with per-i
  // factors of the covariance submatrix
  out.monte_carlo = true;
  const std::int64_t draws = std::max<std::int64_t>(min_draws, 1);
  std::vector<Eigen::MatrixXd> factors(n);
  for (std::int64_t i = 0; i < n; ++i) {
    Eigen::MatrixXd sub(k, k);
    for (int aa = 0; aa < k; ++aa)
      for (int bb = 0; bb < k; ++bb)
        sub(aa, bb) = state.cov(i)(phi.times[aa] - 1, phi.times[bb] - 1);
    factors[i] = psd_factor(sub);
  }
  CounterRng rng(seed, named_stream(0x73656d63ull, 0));
  double sum = 0.0, sumsq = 0.0;
  Eigen::VectorXd g(k), arg(k);
  for (std::int64_t m = 0; m < draws; ++m) {
    for (int c = 0; c < k; ++c) g[c] = rng.next_normal();
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      arg.noalias() = factors[i] * g;
      acc += b[i] * phi.f(state.eta()[i], arg);
    }
    acc /= static_cast<double>(n);
    sum += acc;
    sumsq += acc * acc;
  }
  out.value = sum / static_cast<double>(draws);
  const double var =
      std::max(0.0, sumsq / static_cast<double>(draws) - out.value * out.value);
  out.std_error = std::sqrt(var / static_cast<double>(draws));
  return out;
}

LvSeTrack lv_se_init(const VarianceProfile& S, const Eigen::VectorXd& eta) {
  if (eta.size() != S.n()) throw std::invalid_argument("lv_se_init: eta size");
  LvSeTrack tr;
  const Eigen::VectorXd one_eta = (1.0 + eta.array()).matrix();
  tr.a = S.apply(one_eta.cwiseProduct(one_eta));
  tr.zeta.resize(S.n());
  {
    Eigen::VectorXd g(S.n());
    for (Eigen::Index l = 0; l < S.n(); ++l)
      g[l] = relu_prob(eta[l], std::sqrt(tr.a[l]));
    tr.zeta = S.apply(g);
  }
  tr.q = Eigen::VectorXd::Zero(S.n());
  tr.a_prev = Eigen::VectorXd::Zero(S.n());
  tr.t = 1;
  return tr;
}

LvSeTrack lv_se_step(const LvSeTrack& track, const VarianceProfile& S,
                     const Eigen::VectorXd& eta) {
  const Eigen::Index n = S.n();
  if (track.a.size() != n || eta.size() != n)
    throw std::invalid_argument("lv_se_step: size mismatch");
  if (!(track.a.minCoeff() > 0.0))
    throw std::invalid_argument("lv_se_step: a must be positive");
  LvSeTrack next;
  next.t = track.t + 1;
  next.a_prev = track.a;

  Eigen::VectorXd m2(n), cross(n);
  for (Eigen::Index l = 0; l < n; ++l) {
    const double sd = std::sqrt(track.a[l]);
    m2[l] = relu_m2(eta[l], sd);
    if (track.t == 1) {
      // lag into the deterministic start: E h(Z^1) times h(x0) = 1+eta
      cross[l] = (1.0 + eta[l]) * relu_m1(eta[l], sd);
    } else {
      const double sdp = std::sqrt(track.a_prev[l]);
      cross[l] = sd * sdp *
                 relu_cross(clamp_corr(track.q[l]), eta[l] / sd, eta[l] / sdp);
    }
  }
  next.a = S.apply(m2);
  next.zeta.resize(n);
  {
    Eigen::VectorXd g(n);
    for (Eigen::Index l = 0; l < n; ++l)
      g[l] = relu_prob(eta[l], std::sqrt(next.a[l]));
    next.zeta = S.apply(g);
  }
  const Eigen::VectorXd num = S.apply(cross);
  next.q.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double denom = std::sqrt(next.a[i] * track.a[i]);
    next.q[i] = denom > 0.0 ? std::min(1.0, std::max(0.0, num[i] / denom)) : 0.0;
  }
  return next;
}

LvSeLimit lv_se_limit(const VarianceProfile& S, const Eigen::VectorXd& eta,
                      double tol, int max_iter) {
  if (!(S.max_row_sum() < 1.0))
    throw std::invalid_argument(
        "lv_se_limit: profile row-sum norm must be below 1");
  if (!(tol > 0.0)) throw std::invalid_argument("lv_se_limit: tol <= 0");
  const Eigen::Index n = S.n();

  LvSeLimit lim;
  Eigen::VectorXd a = S.apply(
      (1.0 + eta.array()).square().matrix());
  Eigen::VectorXd m2(n);
  int it = 0;
  for (; it < max_iter; ++it) {
    for (Eigen::Index l = 0; l < n; ++l)
      m2[l] = relu_m2(eta[l], std::sqrt(a[l]));
    const Eigen::VectorXd a_next = S.apply(m2);
    lim.residual = (a_next - a).cwiseAbs().maxCoeff();
    a = a_next;
    if (lim.residual <= tol) break;
  }
  lim.converged = lim.residual <= tol;
  lim.iterations = it + 1;

  LvSeTrack& tr = lim.track;
  tr.a = a;
  tr.a_prev = a;
  tr.t = lim.iterations;
  tr.zeta.resize(n);
  {
    Eigen::VectorXd g(n);
    for (Eigen::Index l = 0; l < n; ++l)
      g[l] = relu_prob(eta[l], std::sqrt(a[l]));
    tr.zeta = S.apply(g);
  }
  // with a fixed, the correlation map contracts toward 1
  tr.q = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd cross(n);
  for (int qit = 0; qit < max_iter; ++qit) {
    for (Eigen::Index l = 0; l < n; ++l) {
      const double sd = std::sqrt(a[l]);
      cross[l] = a[l] * relu_cross(clamp_corr(tr.q[l]), eta[l] / sd,
                                   eta[l] / sd);
    }
    const Eigen::VectorXd num = S.apply(cross);
    double delta = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double qn = std::min(1.0, std::max(0.0, num[i] / a[i]));
      delta = std::max(delta, std::abs(qn - tr.q[i]));
      tr.q[i] = qn;
    }
    if ((1.0 - tr.q.minCoeff()) <= tol || delta <= tol * 1e-2) break;
  }
  if ((1.0 - tr.q.minCoeff()) > tol) lim.converged = false;
  return lim;
}

}  // namespace ampvp
