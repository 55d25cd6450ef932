#include "ampvp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include "ampvp/amp.hpp"
#include "ampvp/lv.hpp"
#include "ampvp/measures.hpp"
#include "ampvp/state_evolution.hpp"
#include "json.hpp"

namespace ampvp {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

Eigen::VectorXd ParamSpec::draw(std::int64_t n, std::uint64_t seed,
                                std::uint64_t stream) const {
  Eigen::VectorXd out(n);
  if (kind == Kind::constant) {
    out.setConstant(value);
    return out;
  }
  CounterRng rng(seed, stream);
  for (std::int64_t i = 0; i < n; ++i)
    out[i] = low + (high - low) * rng.next_unit();
  return out;
}

namespace {

constexpr std::uint64_t kEtaTag = 0x6574611aull;
constexpr std::uint64_t kRTag = 0x72766563ull;

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

ParamSpec paramspec_from_json(const json& j, const std::string& field,
                              std::vector<std::string>& bad) {
  ParamSpec p;
  if (!j.is_object()) {
    bad.push_back(field);
    return p;
  }
  const std::string kind = j.value("kind", "constant");
  if (kind == "constant") {
    p.kind = ParamSpec::Kind::constant;
    if (!j.contains("value") || !j["value"].is_number()) {
      bad.push_back(field + ".value");
    } else {
      p.value = j["value"].get<double>();
      if (!std::isfinite(p.value)) bad.push_back(field + ".value");
    }
  } else if (kind == "uniform") {
    p.kind = ParamSpec::Kind::uniform;
    if (!j.contains("low") || !j.contains("high") || !j["low"].is_number() ||
        !j["high"].is_number()) {
      bad.push_back(field + ".low");
    } else {
      p.low = j["low"].get<double>();
      p.high = j["high"].get<double>();
      if (!std::isfinite(p.low) || !std::isfinite(p.high) || p.low > p.high)
        bad.push_back(field + ".low");
    }
  } else {
    bad.push_back(field + ".kind");
  }
  return p;
}

json paramspec_to_json(const ParamSpec& p) {
  ordered_json j;
  if (p.kind == ParamSpec::Kind::constant) {
    j["kind"] = "constant";
    j["value"] = p.value;
  } else {
    j["kind"] = "uniform";
    j["low"] = p.low;
    j["high"] = p.high;
  }
  return j;
}

double spec_min(const ParamSpec& p) {
  return p.kind == ParamSpec::Kind::constant ? p.value : p.low;
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid json: ") + e.what(),
                      {"(json)"});
  }
  if (!j.is_object()) throw ConfigError("config: not an object", {"(json)"});

  static const std::vector<std::string> known = {
      "experiment",   "n",       "profile",       "distribution",
      "r",            "eta",     "seeds",         "t_max",
      "onsager",      "zero_onsager", "tol",      "norm_eps",
      "mixture_seeds", "output_dir"};
  std::vector<std::string> bad;
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      bad.push_back(it.key() + " (unknown)");

  ExperimentConfig cfg;
  static const std::vector<std::string> kinds = {
      "amp_vs_se", "lv_equilibrium", "norm_bound", "fixed_point_study"};
  cfg.kind = j.value("experiment", "");
  if (std::find(kinds.begin(), kinds.end(), cfg.kind) == kinds.end())
    bad.push_back("experiment");

  if (!j.contains("n") || !j["n"].is_array() || j["n"].empty()) {
    bad.push_back("n");
  } else {
    for (const auto& v : j["n"]) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 2) {
        bad.push_back("n");
        break;
      }
      cfg.n_list.push_back(v.get<std::int64_t>());
    }
  }

  if (j.contains("profile")) {
    const json& p = j["profile"];
    if (!p.is_object()) {
      bad.push_back("profile");
    } else {
      try {
        cfg.profile_kind =
            profile_kind_from_string(p.value("kind", "wigner"));
      } catch (const std::invalid_argument&) {
        bad.push_back("profile.kind");
      }
      cfg.scale = p.value("scale", 0.2);
      if (!(cfg.scale > 0.0) || !std::isfinite(cfg.scale))
        bad.push_back("profile.scale");
      cfg.K = p.value("K", std::int64_t{0});
      cfg.profile_seed = p.value("seed", std::uint64_t{0});
      if (cfg.profile_kind != ProfileKind::wigner && cfg.K < 2)
        bad.push_back("profile.K");
    }
  }

  try {
    cfg.dist = [&] {
      const std::string name = j.value("distribution", "gaussian");
      switch (entry_kind_from_string(name)) {
        case EntryDistribution::Kind::gaussian:
          return EntryDistribution::gaussian();
        case EntryDistribution::Kind::rademacher:
          return EntryDistribution::rademacher();
        case EntryDistribution::Kind::uniform_centered:
          return EntryDistribution::uniform_centered();
        default:
          throw std::invalid_argument("custom tables are not a config entry");
      }
    }();
  } catch (const std::invalid_argument&) {
    bad.push_back("distribution");
  }

  if (j.contains("r")) cfg.r_spec = paramspec_from_json(j["r"], "r", bad);
  if (j.contains("eta"))
    cfg.eta_spec = paramspec_from_json(j["eta"], "eta", bad);
  if ((cfg.kind == "lv_equilibrium" || cfg.kind == "fixed_point_study") &&
      !(spec_min(cfg.r_spec) > 0.0))
    bad.push_back("r (must stay positive)");

  if (!j.contains("seeds") || !j["seeds"].is_array() || j["seeds"].empty()) {
    bad.push_back("seeds");
  } else {
    for (const auto& v : j["seeds"]) {
      if (!v.is_number_integer()) {
        bad.push_back("seeds");
        break;
      }
      cfg.seeds.push_back(v.get<std::uint64_t>());
    }
  }

  cfg.t_max = j.value("t_max", 5);
  if (cfg.t_max < 1 || cfg.t_max > 30) bad.push_back("t_max");
  cfg.onsager = j.value("onsager", "se_expected");
  try {
    onsager_mode_from_string(cfg.onsager);
  } catch (const std::invalid_argument&) {
    bad.push_back("onsager");
  }
  if (j.contains("zero_onsager")) {
    if (!j["zero_onsager"].is_boolean())
      bad.push_back("zero_onsager");
    else
      cfg.zero_onsager = j["zero_onsager"].get<bool>();
  }
  cfg.tol = j.value("tol", 1e-10);
  if (!(cfg.tol > 0.0) || !std::isfinite(cfg.tol)) bad.push_back("tol");
  cfg.norm_eps = j.value("norm_eps", 0.1);
  if (!(cfg.norm_eps > 0.0) || cfg.norm_eps > 0.5) bad.push_back("norm_eps");
  if (j.contains("mixture_seeds")) {
    cfg.mixture_seeds.clear();
    if (!j["mixture_seeds"].is_array() || j["mixture_seeds"].empty()) {
      bad.push_back("mixture_seeds");
    } else {
      for (const auto& v : j["mixture_seeds"]) {
        if (!v.is_number_integer()) {
          bad.push_back("mixture_seeds");
          break;
        }
        cfg.mixture_seeds.push_back(v.get<std::uint64_t>());
      }
    }
  }
  cfg.output_dir = j.value("output_dir", "out");
  if (cfg.output_dir.empty()) bad.push_back("output_dir");

  if (!bad.empty()) {
    std::string msg = "config: invalid fields:";
    for (const auto& f : bad) msg += " " + f;
    throw ConfigError(msg, bad);
  }
  return cfg;
}

ExperimentConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path, {"(file)"});
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

std::string config_to_json_text(const ExperimentConfig& cfg) {
  ordered_json j;
  j["experiment"] = cfg.kind;
  j["n"] = cfg.n_list;
  ordered_json prof;
  prof["kind"] = to_string(cfg.profile_kind);
  prof["K"] = cfg.K;
  prof["scale"] = cfg.scale;
  prof["seed"] = cfg.profile_seed;
  j["profile"] = std::move(prof);
  j["distribution"] = to_string(cfg.dist.kind);
  j["r"] = paramspec_to_json(cfg.r_spec);
  j["eta"] = paramspec_to_json(cfg.eta_spec);
  j["seeds"] = cfg.seeds;
  j["t_max"] = cfg.t_max;
  j["onsager"] = cfg.onsager;
  j["zero_onsager"] = cfg.zero_onsager;
  j["tol"] = cfg.tol;
  j["norm_eps"] = cfg.norm_eps;
  j["mixture_seeds"] = cfg.mixture_seeds;
  j["output_dir"] = cfg.output_dir;
  return j.dump(2);
}

int worker_count() {
  const char* env = std::getenv("AMPVP_WORKERS");
  if (!env) return 1;
  const long v = std::strtol(env, nullptr, 10);
  return static_cast<int>(std::clamp(v, 1L, 64L));
}

namespace {

VarianceProfile build_profile(const ExperimentConfig& cfg, std::int64_t n) {
  const std::int64_t K =
      cfg.profile_kind == ProfileKind::wigner ? n : std::min(cfg.K, n);
  return make_profile(cfg.profile_kind, n, K, cfg.scale, cfg.profile_seed);
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double quantile_of(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

// one (n, seed) cell: csv rows plus any per-n artifacts captured from
// the first seed of each n
struct CellOutput {
  std::vector<std::string> rows;
  std::map<std::string, std::string> extra_files;  // name -> content
  std::map<std::string, std::vector<double>> metrics;
  bool failed = false;
  std::string error;
};

CellOutput run_amp_cell(const ExperimentConfig& cfg, std::int64_t n,
                        std::uint64_t seed, bool first_seed) {
  CellOutput out;
  const VarianceProfile S = build_profile(cfg, n);
  const Eigen::VectorXd eta = cfg.eta_spec.draw(n, seed, kEtaTag);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(n);
  const ActivationFamily h = relu_shift_activation();

  SeState se(S, h, eta, x0);
  for (int t = 0; t < cfg.t_max; ++t) se.step();

  AmpConfig acfg;
  acfg.onsager_mode = onsager_mode_from_string(cfg.onsager);
  acfg.t_max = cfg.t_max;
  acfg.activation = h;
  acfg.eta = eta;
  acfg.x0 = x0;
  acfg.zero_onsager = cfg.zero_onsager;
  const SampledMatrix W = sample_symmetric(S, cfg.dist, seed);
  const AmpTrajectory traj = amp_run(W, S, acfg, se);

  const std::vector<ScalarTestFn> fns = {tf_square(), tf_relu(),
                                         tf_smooth_indicator()};
  for (int t = 1; t <= cfg.t_max; ++t) {
    const Eigen::VectorXd& xt = traj.x(t);
    const double m1 = xt.mean();
    const double m2 = xt.squaredNorm() / static_cast<double>(n);
    const double se_m2 = se.moment2(t);
    double gaps[3];
    for (int f = 0; f < 3; ++f) {
      const auto& fn = fns[f];
      TestFunction phi;
      phi.name = fn.name;
      phi.times = {t};
      phi.f = [&fn](double, const Eigen::VectorXd& xs) {
        return fn.f(xs[0]);
      };
      gaps[f] = empirical_vs_se(traj, se, phi).gap;
    }
    std::ostringstream row;
    row << n << ',' << seed << ',' << t << ',' << fmt(m1) << ',' << fmt(m2)
        << ',' << fmt(se_m2) << ',' << fmt(gaps[0]) << ',' << fmt(gaps[1])
        << ',' << fmt(gaps[2]) << ',' << (traj.flagged ? 1 : 0);
    out.rows.push_back(row.str());
    if (t == cfg.t_max && !traj.flagged) {
      out.metrics["gap_sq"].push_back(gaps[0]);
      out.metrics["gap_relu"].push_back(gaps[1]);
      out.metrics["gap_ind"].push_back(gaps[2]);
      out.metrics["moment2"].push_back(m2);
    }
  }

  if (first_seed) {
    // joint trace of the per-coordinate variances and the scalar
    // rectified recursion they must reproduce
    std::ostringstream track;
    track << "t,i,R_diag,a,zeta,q\n";
    LvSeTrack tr = lv_se_init(S, eta);
    for (int t = 1; t <= cfg.t_max; ++t) {
      if (t > 1) tr = lv_se_step(tr, S, eta);
      for (std::int64_t i = 0; i < n; ++i) {
        track << t << ',' << i << ',' << fmt(se.cov(i)(t - 1, t - 1)) << ','
              << fmt(tr.a[i]) << ',' << fmt(tr.zeta[i]) << ',' << fmt(tr.q[i])
              << '\n';
      }
    }
    out.extra_files["se_track_n" + std::to_string(n) + ".csv"] = track.str();
  }
  return out;
}

CellOutput run_lv_cell(const ExperimentConfig& cfg, std::int64_t n,
                       std::uint64_t seed, bool first_seed) {
  CellOutput out;
  const VarianceProfile V = build_profile(cfg, n);
  const Eigen::VectorXd r = cfg.r_spec.draw(n, seed, kRTag);
  const LvModel model(V, r, cfg.dist);
  const FixedPoint fp = solve_fixed_point(model, cfg.tol);
  const RectifiedGaussianMixture mix = predicted_mixture(model, fp);
  const double gamma = survival_fraction(model, fp);

  const SampledMatrix Sigma = sample_symmetric(V, cfg.dist, seed);
  const SpectralResult sp = spectral_norm(Sigma);
  const bool excluded = !(sp.value < 1.0);

  double d2 = 0.0, d2_lo = 0.0, d2_hi = 0.0, survival_emp = 0.0;
  Eigen::VectorXd u_star, w;
  if (!excluded) {
    const Equilibrium eq = equilibrium_lcp(Sigma, r, cfg.tol);
    u_star = eq.u_star;
    w = eq.w;
    survival_emp = static_cast<double>((u_star.array() > 1e-6).count()) /
                   static_cast<double>(n);
    const EmpiricalMeasure emp(u_star);
    std::vector<double> ds;
    for (std::uint64_t ms : cfg.mixture_seeds)
      ds.push_back(
          wasserstein2(emp, EmpiricalMeasure(sample_mixture(mix, n, ms))));
    d2 = median_of(ds);
    d2_lo = *std::min_element(ds.begin(), ds.end());
    d2_hi = *std::max_element(ds.begin(), ds.end());
    out.metrics["d2"].push_back(d2);
    out.metrics["gamma_err"].push_back(std::abs(survival_emp - gamma));
    out.metrics["sigma_norm"].push_back(sp.value);
  }

  std::ostringstream row;
  row << n << ',' << seed << ',' << fmt(d2) << ',' << fmt(d2_lo) << ','
      << fmt(d2_hi) << ',' << fmt(gamma) << ',' << fmt(survival_emp) << ','
      << fmt(sp.value) << ',' << (excluded ? 1 : 0);
  out.rows.push_back(row.str());

  if (first_seed) {
    std::ostringstream fpcsv;
    fpcsv << "i,p_i,zeta_i\n";
    for (std::int64_t i = 0; i < n; ++i)
      fpcsv << i << ',' << fmt(fp.p[i]) << ',' << fmt(fp.zeta[i]) << '\n';
    out.extra_files["fixedpoint_n" + std::to_string(n) + ".csv"] =
        fpcsv.str();

    std::ostringstream mixcsv;
    mixcsv << "i,mean,sd\n";
    for (std::int64_t i = 0; i < n; ++i)
      mixcsv << i << ',' << fmt(mix.mean[i]) << ',' << fmt(mix.sd[i]) << '\n';
    out.extra_files["mixture_n" + std::to_string(n) + ".csv"] = mixcsv.str();

    if (!excluded) {
      std::ostringstream eqcsv;
      eqcsv << "instance_seed,i,u_star_i,w_i\n";
      for (std::int64_t i = 0; i < n; ++i)
        eqcsv << seed << ',' << i << ',' << fmt(u_star[i]) << ','
              << fmt(w[i]) << '\n';
      out.extra_files["equilibria_n" + std::to_string(n) + ".csv"] =
          eqcsv.str();
    }
  }
  return out;
}

CellOutput run_norm_cell(const ExperimentConfig& cfg, std::int64_t n,
                         std::uint64_t seed) {
  CellOutput out;
  const VarianceProfile S = build_profile(cfg, n);
  const SampledMatrix W = sample_symmetric(S, cfg.dist, seed);
  const SpectralResult sp = spectral_norm(W);
  const double bound = gaussian_norm_bound(S, n, cfg.norm_eps);
  const bool within = sp.value <= bound;
  std::ostringstream row;
  row << n << ',' << seed << ',' << fmt(sp.value) << ',' << fmt(bound) << ','
      << (within ? 1 : 0);
  out.rows.push_back(row.str());
  out.metrics["norm"].push_back(sp.value);
  out.metrics["within"].push_back(within ? 1.0 : 0.0);
  return out;
}

CellOutput run_fp_cell(const ExperimentConfig& cfg, std::int64_t n,
                       std::uint64_t seed, bool first_seed) {
  CellOutput out;
  const VarianceProfile V = build_profile(cfg, n);
  const Eigen::VectorXd r = cfg.r_spec.draw(n, seed, kRTag);
  const LvModel model(V, r, cfg.dist);
  const FixedPoint fp = solve_fixed_point(model, cfg.tol);
  const double gamma = survival_fraction(model, fp);
  std::ostringstream row;
  row << n << ',' << seed << ',' << fp.iterations << ',' << fmt(fp.residual)
      << ',' << (fp.converged ? 1 : 0) << ',' << fmt(gamma) << ','
      << fmt(fp.p_max);
  out.rows.push_back(row.str());
  out.metrics["iterations"].push_back(fp.iterations);
  out.metrics["residual"].push_back(fp.residual);
  out.metrics["gamma"].push_back(gamma);

  if (first_seed) {
    std::ostringstream fpcsv;
    fpcsv << "i,p_i,zeta_i\n";
    for (std::int64_t i = 0; i < n; ++i)
      fpcsv << i << ',' << fmt(fp.p[i]) << ',' << fmt(fp.zeta[i]) << '\n';
    out.extra_files["fixedpoint_n" + std::to_string(n) + ".csv"] =
        fpcsv.str();
  }
  return out;
}

std::string results_header(const std::string& kind) {
  if (kind == "amp_vs_se")
    return "n,seed,t,moment1,moment2,se_moment2,gap_sq,gap_relu,gap_ind,"
           "flagged";
  if (kind == "lv_equilibrium")
    return "n,seed,d2,d2_lo,d2_hi,gamma,survival_emp,sigma_norm,excluded";
  if (kind == "norm_bound") return "n,seed,norm,bound,within";
  return "n,seed,iterations,residual,converged,gamma,p_max";
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  static const std::vector<std::string> kinds = {
      "amp_vs_se", "lv_equilibrium", "norm_bound", "fixed_point_study"};
  if (std::find(kinds.begin(), kinds.end(), cfg.kind) == kinds.end())
    throw ConfigError("run_experiment: unknown kind " + cfg.kind,
                      {"experiment"});
  if (cfg.n_list.empty()) throw ConfigError("run_experiment: empty n", {"n"});
  if (cfg.seeds.empty())
    throw ConfigError("run_experiment: empty seeds", {"seeds"});

  struct Cell {
    std::int64_t n;
    std::uint64_t seed;
    bool first_seed;
  };
  std::vector<Cell> cells;
  for (std::int64_t n : cfg.n_list)
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s)
      cells.push_back({n, cfg.seeds[s], s == 0});

  std::vector<CellOutput> outputs(cells.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= cells.size()) return;
      const Cell& cell = cells[c];
      try {
        if (cfg.kind == "amp_vs_se")
          outputs[c] = run_amp_cell(cfg, cell.n, cell.seed, cell.first_seed);
        else if (cfg.kind == "lv_equilibrium")
          outputs[c] = run_lv_cell(cfg, cell.n, cell.seed, cell.first_seed);
        else if (cfg.kind == "norm_bound")
          outputs[c] = run_norm_cell(cfg, cell.n, cell.seed);
        else
          outputs[c] = run_fp_cell(cfg, cell.n, cell.seed, cell.first_seed);
      } catch (const std::exception& e) {
        outputs[c].failed = true;
        outputs[c].error = e.what();
      }
    }
  };
  const int workers = std::min<int>(worker_count(),
                                    static_cast<int>(cells.size()));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  fs::create_directories(cfg.output_dir);
  const fs::path dir(cfg.output_dir);

  // rows already follow the (n, seed) order of the cell grid
  {
    std::ofstream res(dir / "results.csv");
    res << results_header(cfg.kind) << '\n';
    for (const auto& out : outputs)
      for (const auto& row : out.rows) res << row << '\n';
  }
  for (const auto& out : outputs)
    for (const auto& [name, content] : out.extra_files) {
      std::ofstream f(dir / name);
      f << content;
    }

  {
    // per-n median and quartiles of every collected metric
    std::ofstream sum(dir / "summary.csv");
    sum << "n,metric,count,median,q1,q3\n";
    for (std::int64_t n : cfg.n_list) {
      std::map<std::string, std::vector<double>> agg;
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (cells[c].n != n || outputs[c].failed) continue;
        for (const auto& [name, vals] : outputs[c].metrics)
          agg[name].insert(agg[name].end(), vals.begin(), vals.end());
      }
      for (const auto& [name, vals] : agg) {
        sum << n << ',' << name << ',' << vals.size() << ','
            << fmt(median_of(vals)) << ',' << fmt(quantile_of(vals, 0.25))
            << ',' << fmt(quantile_of(vals, 0.75)) << '\n';
      }
    }
  }

  std::vector<std::string> failures;
  for (std::size_t c = 0; c < cells.size(); ++c)
    if (outputs[c].failed)
      failures.push_back("n=" + std::to_string(cells[c].n) +
                         " seed=" + std::to_string(cells[c].seed) + ": " +
                         outputs[c].error);

  {
    const auto t_end = std::chrono::steady_clock::now();
    const double wall =
        std::chrono::duration<double>(t_end - t_start).count();
    ordered_json man;
    man["version"] = kArtifactVersion;
    man["config"] = json::parse(config_to_json_text(cfg));
    man["workers"] = workers;
    man["cells"] = cells.size();
    man["failures"] = failures;
    man["wall_time_s"] = wall;
    std::ofstream mf(dir / "manifest.json");
    mf << man.dump(2) << '\n';
  }
  return failures.empty() ? 0 : 1;
}

namespace {

struct Table {
  std::vector<std::string> cols;
  std::vector<std::vector<double>> rows;

  int col(const std::string& name) const {
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == name) return static_cast<int>(i);
    throw std::runtime_error("plotdata: missing column " + name);
  }
};

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("plotdata: cannot open " + path);
  Table t;
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("plotdata: empty file " + path);
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.cols.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != t.cols.size())
      throw std::runtime_error("plotdata: ragged row in " + path);
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace

void emit_plotdata(const std::string& results_csv, const std::string& kind,
                   const std::string& out_csv) {
  if (kind != "trend" && kind != "histogram")
    throw std::runtime_error("plotdata: unknown kind " + kind);
  const fs::path dir = fs::path(results_csv).parent_path();
  std::ofstream out(out_csv);
  if (!out) throw std::runtime_error("plotdata: cannot write " + out_csv);
  out << "x,y,group,seed\n";

  if (kind == "trend") {
    const Table t = read_csv(results_csv);
    const int cn = t.col("n");
    const int cseed = t.col("seed");
    // headline column: d2 for equilibrium runs, the first gap for amp runs
    int cy;
    std::string label;
    if (std::find(t.cols.begin(), t.cols.end(), std::string("d2")) !=
        t.cols.end()) {
      cy = t.col("d2");
      label = "d2";
    } else if (std::find(t.cols.begin(), t.cols.end(),
                         std::string("gap_sq")) != t.cols.end()) {
      cy = t.col("gap_sq");
      label = "gap_sq";
    } else {
      cy = t.col("norm");
      label = "norm";
    }
    std::map<std::int64_t, std::vector<double>> per_n;
    for (const auto& row : t.rows) {
      out << fmt(row[cn]) << ',' << fmt(row[cy]) << ',' << label << ','
          << static_cast<std::uint64_t>(row[cseed]) << '\n';
      per_n[static_cast<std::int64_t>(row[cn])].push_back(row[cy]);
    }
    for (const auto& [n, vals] : per_n)
      out << n << ',' << fmt(median_of(vals)) << ',' << label << "_median,0\n";
    return;
  }

  // histogram: pair the largest-n equilibrium export with its mixture
  std::int64_t best_n = -1;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("equilibria_n", 0) == 0 && name.size() > 16) {
      const std::int64_t n =
          std::stoll(name.substr(12, name.size() - 16));
      best_n = std::max(best_n, n);
    }
  }
  if (best_n < 0)
    throw std::runtime_error("plotdata: no equilibria export next to " +
                             results_csv);
  const Table eq =
      read_csv((dir / ("equilibria_n" + std::to_string(best_n) + ".csv"))
                   .string());
  const Table mx =
      read_csv((dir / ("mixture_n" + std::to_string(best_n) + ".csv"))
                   .string());
  const int cu = eq.col("u_star_i");
  const int cs = eq.col("instance_seed");
  const std::uint64_t seed =
      eq.rows.empty() ? 0 : static_cast<std::uint64_t>(eq.rows[0][cs]);
  std::vector<double> u;
  u.reserve(eq.rows.size());
  for (const auto& row : eq.rows) u.push_back(row[cu]);
  const double u_max = *std::max_element(u.begin(), u.end());

  RectifiedGaussianMixture mix;
  mix.mean.resize(static_cast<Eigen::Index>(mx.rows.size()));
  mix.sd.resize(static_cast<Eigen::Index>(mx.rows.size()));
  const int cm = mx.col("mean");
  const int csd = mx.col("sd");
  for (std::size_t i = 0; i < mx.rows.size(); ++i) {
    mix.mean[static_cast<Eigen::Index>(i)] = mx.rows[i][cm];
    mix.sd[static_cast<Eigen::Index>(i)] = mx.rows[i][csd];
  }

  const int bins = 60;
  const double hi = std::max(u_max, 1e-12);
  const double width = hi / bins;
  std::vector<std::int64_t> counts(bins, 0);
  for (double v : u) {
    int b = static_cast<int>(v / width);
    b = std::clamp(b, 0, bins - 1);
    ++counts[b];
  }
  const double total = static_cast<double>(u.size());
  for (int b = 0; b < bins; ++b) {
    const double lo = b * width;
    const double mid = lo + 0.5 * width;
    out << fmt(mid) << ','
        << fmt(static_cast<double>(counts[b]) / (total * width))
        << ",equilibrium," << seed << '\n';
    out << fmt(mid) << ','
        << fmt((mix.cdf(lo + width) - mix.cdf(lo)) / width) << ",mixture,"
        << seed << '\n';
  }
}

}  // namespace ampvp
