#include "ampvp/lv.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "ampvp/gauss_kernels.hpp"

namespace ampvp {

LvModel::LvModel(VarianceProfile V_in, Eigen::VectorXd r_in,
                 EntryDistribution dist)
    : V(std::move(V_in)), r(std::move(r_in)), entry_dist(std::move(dist)) {
  if (r.size() != V.n()) throw std::invalid_argument("LvModel: r size");
  if (!r.allFinite() || r.minCoeff() <= 0.0)
    throw std::invalid_argument("LvModel: r must be positive");
  if (!(V.max_row_sum() < 0.25))
    throw std::invalid_argument(
        "LvModel: profile row-sum norm must be below 1/4");
}

double fixed_point_box_edge(double r_max) {
  if (!(r_max > 0.0)) throw std::invalid_argument("box edge: r_max <= 0");
  auto excess = [&](double p) {
    return relu_m2(r_max, std::sqrt(p)) - 0.75 * p;
  };
  // excess(0) = r_max^2 > 0 and the slope settles at 1/4 below the
  // quadratic term, so a root exists; double until negative
  double hi = std::max(1.0, 4.0 * r_max * r_max);
  int guard = 0;
  while (excess(hi) > 0.0) {
    hi *= 2.0;
    if (++guard > 200) throw std::runtime_error("box edge: no sign change");
  }
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return hi;
}

FixedPoint solve_fixed_point(const LvModel& model, double tol, int max_iter,
                             double damping) {
  if (!(tol > 0.0)) throw std::invalid_argument("fixed point: tol <= 0");
  if (!(damping > 0.0) || damping > 1.0)
    throw std::invalid_argument("fixed point: damping outside (0, 1]");
  const Eigen::Index n = model.n();
  const VarianceProfile& V = model.V;
  const Eigen::VectorXd& r = model.r;

  FixedPoint fp;
  fp.p_max = fixed_point_box_edge(r.maxCoeff());
  fp.p = V.apply((1.0 + r.array()).square().matrix());
  fp.zeta = Eigen::VectorXd::Zero(n);
  fp.residual_trace.reserve(64);

  Eigen::VectorXd f(n), g(n);
  for (fp.iterations = 0; fp.iterations < max_iter; ++fp.iterations) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double sd = std::sqrt(std::max(0.0, fp.p[j]));
      f[j] = relu_m2(r[j], sd);
      g[j] = relu_prob(r[j], sd);
    }
    const Eigen::VectorXd one_z = (1.0 + fp.zeta.array()).matrix();
    const Eigen::VectorXd p_map =
        V.apply(one_z.array().square().matrix().cwiseProduct(f));
    const Eigen::VectorXd zeta_map =
        one_z.cwiseProduct(V.apply(one_z.cwiseProduct(g)));
    fp.residual = std::max((p_map - fp.p).cwiseAbs().maxCoeff(),
                           (zeta_map - fp.zeta).cwiseAbs().maxCoeff());
    fp.residual_trace.push_back(fp.residual);
    fp.p = damping * p_map + (1.0 - damping) * fp.p;
    fp.zeta = damping * zeta_map + (1.0 - damping) * fp.zeta;
    if (fp.residual <= tol) {
      ++fp.iterations;
      break;
    }
  }
  fp.converged = fp.residual <= tol;
  if (fp.p.minCoeff() < 0.0 || fp.p.maxCoeff() > fp.p_max)
    throw std::runtime_error("fixed point: iterate escaped the invariance box");
  return fp;
}

namespace {

Equilibrium psor_dense(const Eigen::MatrixXd& Sigma, const Eigen::VectorXd& r,
                       double tol, double omega, int max_sweeps) {
  const Eigen::Index n = r.size();
  Equilibrium eq;
  eq.method = "lcp";
  Eigen::VectorXd u = r.cwiseMax(0.0);
  Eigen::VectorXd best_u = u;
  double best_err = std::numeric_limits<double>::infinity();
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double su = Sigma.row(i).dot(u);
      const double grad = u[i] - su - r[i];
      u[i] = std::max(0.0, u[i] - omega * grad);
    }
    const Eigen::VectorXd w = u - Sigma * u - r;
    const double err = u.cwiseMin(w).cwiseAbs().maxCoeff();
    if (err < best_err) {
      best_err = err;
      best_u = u;
    }
    if (err <= tol) {
      ++sweep;
      break;
    }
  }
  eq.u_star = best_u;
  eq.w = eq.u_star - Sigma * eq.u_star - r;
  eq.comp_residual = std::abs(eq.u_star.dot(eq.w));
  eq.min_u = eq.u_star.minCoeff();
  eq.min_w = eq.w.minCoeff();
  eq.converged = best_err <= tol;
  eq.sweeps = sweep;
  return eq;
}

}  // namespace

Equilibrium equilibrium_lcp_dense(const Eigen::MatrixXd& Sigma,
                                  const Eigen::VectorXd& r, double tol,
                                  double omega, int max_sweeps) {
  if (Sigma.rows() != Sigma.cols() || Sigma.rows() != r.size())
    throw std::invalid_argument("lcp: size mismatch");
  if (!(omega > 0.0) || omega >= 2.0)
    throw std::invalid_argument("lcp: omega outside (0, 2)");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sigma);
  const double norm = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(norm < 1.0))
    throw std::invalid_argument("lcp: spectral norm of Sigma must be below 1");
  return psor_dense(Sigma, r, tol, omega, max_sweeps);
}

Equilibrium equilibrium_lcp(const SampledMatrix& Sigma,
                            const Eigen::VectorXd& r, double tol, double omega,
                            int max_sweeps) {
  if (Sigma.n() != r.size()) throw std::invalid_argument("lcp: size mismatch");
  if (!(omega > 0.0) || omega >= 2.0)
    throw std::invalid_argument("lcp: omega outside (0, 2)");
  const SpectralResult sp = spectral_norm(Sigma);
  if (!(sp.value < 1.0))
    throw std::invalid_argument("lcp: spectral norm of Sigma must be below 1");
  // PSOR sweeps need O(n) row access; materialize once
  return psor_dense(Sigma.dense(), r, tol, omega, max_sweeps);
}

namespace {

Eigen::VectorXd integrate_core(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply_sigma,
    const Eigen::VectorXd& r, const Eigen::VectorXd& u0, double T,
    double rtol) {
  if (u0.size() != r.size()) throw std::invalid_argument("integrate: size");
  if (!(T >= 0.0)) throw std::invalid_argument("integrate: negative horizon");
  if (u0.minCoeff() < 0.0)
    throw std::invalid_argument("integrate: negative start");
  if (!(rtol > 0.0)) throw std::invalid_argument("integrate: rtol <= 0");
  const double atol = 1e-12;

  auto deriv = [&](const Eigen::VectorXd& u) {
    return u.cwiseProduct(r + apply_sigma(u) - u).eval();
  };

  // Dormand-Prince 5(4) tableau
  static const double A[7][6] = {
      {0, 0, 0, 0, 0, 0},
      {1.0 / 5, 0, 0, 0, 0, 0},
      {3.0 / 40, 9.0 / 40, 0, 0, 0, 0},
      {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
       -5103.0 / 18656, 0},
      {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  static const double B5[7] = {35.0 / 384,    0, 500.0 / 1113, 125.0 / 192,
                               -2187.0 / 6784, 11.0 / 84, 0};
  static const double B4[7] = {5179.0 / 57600,    0,
                               7571.0 / 16695,    393.0 / 640,
                               -92097.0 / 339200, 187.0 / 2100,
                               1.0 / 40};

  Eigen::VectorXd y = u0;
  double t = 0.0;
  double hstep = std::min(1e-2, T > 0.0 ? T : 1e-2);
  if (T == 0.0) return y;

  std::vector<Eigen::VectorXd> k(7);
  int rejected_in_row = 0;
  while (t < T) {
    hstep = std::min(hstep, T - t);
    k[0] = deriv(y);
    for (int s = 1; s < 7; ++s) {
      Eigen::VectorXd ys = y;
      for (int j = 0; j < s; ++j)
        if (A[s][j] != 0.0) ys += (hstep * A[s][j]) * k[j];
      k[s] = deriv(ys);
    }
    Eigen::VectorXd y5 = y;
    Eigen::VectorXd err = Eigen::VectorXd::Zero(y.size());
    for (int s = 0; s < 7; ++s) {
      if (B5[s] != 0.0) y5 += (hstep * B5[s]) * k[s];
      const double db = B5[s] - B4[s];
      if (db != 0.0) err += (hstep * db) * k[s];
    }
    double err_norm = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double scale = atol + rtol * std::abs(y[i]);
      err_norm = std::max(err_norm, std::abs(err[i]) / scale);
    }
    const double dip = y5.minCoeff();
    if (err_norm <= 1.0 && dip >= -rtol) {
      t += hstep;
      y = y5.cwiseMax(0.0);  // dips within [-rtol, 0) are noise
      if (y.cwiseAbs().maxCoeff() > 1e6)
        throw std::runtime_error("integrate: trajectory blew up");
      const double grow = err_norm > 0.0
                              ? 0.9 * std::pow(err_norm, -0.2)
                              : 5.0;
      hstep *= std::clamp(grow, 0.2, 5.0);
      rejected_in_row = 0;
    } else {
      hstep *= dip < -rtol ? 0.5
                           : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2,
                                        0.9);
      if (++rejected_in_row > 200)
        throw std::runtime_error("integrate: step size collapsed");
    }
    if (hstep < 1e-14 * std::max(1.0, T))
      throw std::runtime_error("integrate: step size underflow");
  }
  return y;
}

}  // namespace

Eigen::VectorXd integrate_lv(const SampledMatrix& Sigma,
                             const Eigen::VectorXd& r,
                             const Eigen::VectorXd& u0, double T,
                             double rtol) {
  if (Sigma.n() != r.size()) throw std::invalid_argument("integrate: size");
  return integrate_core(
      [&](const Eigen::VectorXd& u) { return Sigma.apply(u); }, r, u0, T,
      rtol);
}

Eigen::VectorXd integrate_lv_dense(const Eigen::MatrixXd& Sigma,
                                   const Eigen::VectorXd& r,
                                   const Eigen::VectorXd& u0, double T,
                                   double rtol) {
  if (Sigma.rows() != Sigma.cols() || Sigma.rows() != r.size())
    throw std::invalid_argument("integrate: size");
  return integrate_core(
      [&](const Eigen::VectorXd& u) { return (Sigma * u).eval(); }, r, u0, T,
      rtol);
}

RectifiedGaussianMixture predicted_mixture(const LvModel& model,
                                           const FixedPoint& fp) {
  const Eigen::Index n = model.n();
  if (fp.p.size() != n || fp.zeta.size() != n)
    throw std::invalid_argument("mixture: fixed point size");
  RectifiedGaussianMixture mix;
  mix.mean.resize(n);
  mix.sd.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double amp = 1.0 + fp.zeta[i];
    mix.mean[i] = amp * model.r[i];
    mix.sd[i] = amp * std::sqrt(std::max(0.0, fp.p[i]));
  }
  return mix;
}

double survival_fraction(const LvModel& model, const FixedPoint& fp) {
  const Eigen::Index n = model.n();
  if (fp.p.size() != n) throw std::invalid_argument("survival: size");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    acc += relu_prob(model.r[i], std::sqrt(std::max(0.0, fp.p[i])));
  return acc / static_cast<double>(n);
}

double perturbation_bound(const Eigen::MatrixXd& Sigma,
                          const Eigen::VectorXd& eps_vec) {
  const Eigen::Index n = Sigma.rows();
  if (Sigma.cols() != n) throw std::invalid_argument("perturbation: square");
  if ((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("perturbation: Sigma must be symmetric");
  double lmax;
  if (n <= 1024) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sigma);
    lmax = es.eigenvalues().maxCoeff();
  } else {
    // shift by the Gershgorin radius so the top eigenvalue of
    // Sigma + cI dominates in magnitude
    const double c = Sigma.cwiseAbs().rowwise().sum().maxCoeff();
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n).normalized();
    double mu = 0.0;
    for (int it = 0; it < 10 * n; ++it) {
      Eigen::VectorXd y = Sigma * v + c * v;
      const double norm = y.norm();
      if (norm == 0.0) break;
      y /= norm;
      const double mu_next = y.dot(Sigma * y + c * y);
      const bool done = std::abs(mu_next - mu) < 1e-12 * std::max(1.0, c);
      mu = mu_next;
      v = std::move(y);
      if (done) break;
    }
    lmax = mu - c;
  }
  const double gap = 1.0 - lmax;
  if (gap < 1e-10)
    throw std::runtime_error("perturbation: I - Sigma nearly singular");
  return eps_vec.norm() / gap;
}

VarianceProfile transformed_profile(const LvModel& model,
                                    const FixedPoint& fp) {
  const Eigen::Index n = model.n();
  if (fp.zeta.size() != n)
    throw std::invalid_argument("transform: fixed point size");
  const VarianceProfile& V = model.V;
  std::vector<std::tuple<int, int, double>> trips;
  auto amp = [&](Eigen::Index i) { return 1.0 + fp.zeta[i]; };
  if (V.uniform()) {
    trips.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        trips.emplace_back(i, j, amp(i) * V.uniform_value() * amp(j));
  } else {
    for (int i = 0; i < n; ++i) {
      const int* cols = V.row_cols(i);
      const double* vals = V.row_vals(i);
      for (int k = 0; k < V.row_size(i); ++k)
        if (cols[k] > i)
          trips.emplace_back(i, cols[k], amp(i) * vals[k] * amp(cols[k]));
    }
  }
  return VarianceProfile::from_triplets(n, V.K(), V.kind(), V.scale(), trips);
}

Eigen::VectorXd transformed_shift(const LvModel& model, const FixedPoint& fp) {
  if (fp.zeta.size() != model.n())
    throw std::invalid_argument("transform: fixed point size");
  return (1.0 + fp.zeta.array()).sqrt().matrix().cwiseProduct(model.r);
}

}  // namespace ampvp
