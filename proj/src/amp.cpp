#include "ampvp/amp.hpp"

#include <cmath>
#include <stdexcept>

#include "ampvp/measures.hpp"
#include "ampvp/rng.hpp"

namespace ampvp {

std::string to_string(OnsagerMode mode) {
  switch (mode) {
    case OnsagerMode::se_expected: return "se_expected";
    case OnsagerMode::empirical_deriv: return "empirical_deriv";
    case OnsagerMode::hadamard_sq: return "hadamard_sq";
  }
  throw std::logic_error("unknown onsager mode");
}

OnsagerMode onsager_mode_from_string(const std::string& name) {
  if (name == "se_expected") return OnsagerMode::se_expected;
  if (name == "empirical_deriv") return OnsagerMode::empirical_deriv;
  if (name == "hadamard_sq") return OnsagerMode::hadamard_sq;
  throw std::invalid_argument("unknown onsager mode: " + name);
}

AmpTrajectory amp_run(const SampledMatrix& W, const VarianceProfile& S,
                      const AmpConfig& cfg, const SeState& se) {
  const Eigen::Index n = W.n();
  if (S.n() != n) throw std::invalid_argument("amp_run: profile size");
  if (cfg.eta.size() != n || cfg.x0.size() != n)
    throw std::invalid_argument("amp_run: eta/x0 size");
  if (cfg.t_max < 1) throw std::invalid_argument("amp_run: t_max < 1");
  if (se.t() < cfg.t_max)
    throw std::invalid_argument("amp_run: state evolution not deep enough");
  if (se.n() != n) throw std::invalid_argument("amp_run: state size");
  if (!cfg.activation.eval || !cfg.activation.deriv)
    throw std::invalid_argument("amp_run: activation not callable");

  AmpTrajectory traj;
  traj.seed = W.seed();
  traj.matrix_id = W.profile_id();
  traj.config_id = to_string(cfg.onsager_mode) +
                   (cfg.zero_onsager ? ":zero_onsager" : "") +
                   ":t=" + std::to_string(cfg.t_max);

  const SpectralResult sp = spectral_norm(W);
  traj.spectral_norm_w = sp.value;
  traj.flagged = sp.value > cfg.cond_limit;

  const ActivationFamily& h = cfg.activation;
  auto eval_h = [&](const Eigen::VectorXd& x, int t) {
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = h.eval(x[i], cfg.eta[i], t);
    return out;
  };
  auto eval_dh = [&](const Eigen::VectorXd& x, int t) {
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = h.deriv(x[i], cfg.eta[i], t);
    return out;
  };

  traj.iterates.reserve(cfg.t_max + 1);
  traj.iterates.push_back(cfg.x0);
  traj.residuals.reserve(cfg.t_max);

  for (int t = 0; t < cfg.t_max; ++t) {
    const Eigen::VectorXd& xt = traj.iterates[t];
    const Eigen::VectorXd ht = eval_h(xt, t);
    Eigen::VectorXd next = W.apply(ht);
    if (t >= 1 && !cfg.zero_onsager) {
      Eigen::VectorXd b(n);
      switch (cfg.onsager_mode) {
        case OnsagerMode::se_expected:
          b = S.apply(se.mean_deriv(t));
          break;
        case OnsagerMode::empirical_deriv:
          b = S.apply(eval_dh(xt, t));
          break;
        case OnsagerMode::hadamard_sq:
          b = W.apply_squared(eval_dh(xt, t));
          break;
      }
      const Eigen::VectorXd hprev = eval_h(traj.iterates[t - 1], t - 1);
      next -= b.cwiseProduct(hprev);
    }
    if (!next.allFinite())
      throw std::runtime_error("amp_run: non-finite iterate at step " +
                               std::to_string(t + 1));
    traj.iterates.push_back(std::move(next));
    const double m2 = traj.iterates.back().squaredNorm() /
                      static_cast<double>(n);
    traj.residuals.push_back(std::abs(m2 - se.moment2(t + 1)));
  }
  return traj;
}

GapReport empirical_vs_se(const AmpTrajectory& traj, const SeState& se,
                          const TestFunction& phi,
                          const Eigen::VectorXd& beta) {
  const Eigen::Index n = traj.x(0).size();
  Eigen::VectorXd b = beta.size() == 0 ? Eigen::VectorXd::Ones(n) : beta;
  if (b.size() != n) throw std::invalid_argument("empirical_vs_se: beta size");
  const int k = static_cast<int>(phi.times.size());
  for (int s : phi.times)
    if (s < 1 || s > traj.t_max())
      throw std::out_of_range("empirical_vs_se: time out of range");

  GapReport rep;
  Eigen::VectorXd arg(k);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) arg[c] = traj.x(phi.times[c])[i];
    acc += b[i] * phi.f(se.eta()[i], arg);
  }
  rep.empirical = acc / static_cast<double>(n);
  rep.prediction = se_expect(se, phi, beta);
  rep.predicted = rep.prediction.value;
  rep.gap = std::abs(rep.empirical - rep.predicted);
  return rep;
}

double wasserstein_check(const AmpTrajectory& traj, const SeState& se, int t,
                         std::uint64_t mixture_seed) {
  if (t < 1 || t > traj.t_max() || t > se.t())
    throw std::out_of_range("wasserstein_check: bad time");
  const Eigen::Index n = traj.x(1).size();

  auto slice_d2 = [&](int s) {
    // equal-count sample of the time-s Gaussian mixture: uniform
    // coordinate, then N(0, R_i[s-1][s-1])
    CounterRng rng(mixture_seed,
                   named_stream(0x77326d78ull, static_cast<std::uint64_t>(s)));
    Eigen::VectorXd sample(n);
    for (Eigen::Index m = 0; m < n; ++m) {
      const auto i = static_cast<Eigen::Index>(
          rng.next_u64() % static_cast<std::uint64_t>(n));
      const double v = se.cov(i)(s - 1, s - 1);
      sample[m] = std::sqrt(std::max(0.0, v)) * rng.next_normal();
    }
    return wasserstein2(EmpiricalMeasure(traj.x(s)),
                        EmpiricalMeasure(sample));
  };

  if (t == 1) return slice_d2(1);
  double acc = 0.0;
  for (int s = 1; s <= t; ++s) {
    const double d = slice_d2(s);
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace ampvp
