#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ampvp/rng.hpp"
#include "ampvp/sampled_matrix.hpp"
#include "ampvp/variance_profile.hpp"

namespace ampvp {

inline constexpr const char* kArtifactVersion = "0.1.0";

// scalar model parameter resolved per seed: a constant or an i.i.d.
// uniform draw over [low, high]
struct ParamSpec {
  enum class Kind { constant, uniform };
  Kind kind = Kind::constant;
  double value = 1.0;
  double low = 0.0;
  double high = 1.0;

  Eigen::VectorXd draw(std::int64_t n, std::uint64_t seed,
                       std::uint64_t stream) const;
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what,
                       std::vector<std::string> bad_fields = {})
      : std::runtime_error(what), fields(std::move(bad_fields)) {}
  std::vector<std::string> fields;
};

struct ExperimentConfig {
  std::string kind;  // amp_vs_se | lv_equilibrium | norm_bound |
                     // fixed_point_study
  std::vector<std::int64_t> n_list;
  ProfileKind profile_kind = ProfileKind::wigner;
  double scale = 0.2;
  std::int64_t K = 0;  // banded / block / random-support width
  std::uint64_t profile_seed = 0;  // random-support draws only
  EntryDistribution dist = EntryDistribution::gaussian();
  ParamSpec r_spec;    // lv_equilibrium, fixed_point_study
  ParamSpec eta_spec;  // amp_vs_se
  std::vector<std::uint64_t> seeds;
  int t_max = 5;
  std::string onsager = "se_expected";
  bool zero_onsager = false;
  double tol = 1e-10;
  double norm_eps = 0.1;  // norm_bound
  std::vector<std::uint64_t> mixture_seeds = {101, 102, 103};
  std::string output_dir = "out";
};

// throws ConfigError listing every offending field
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig config_from_json_file(const std::string& path);
std::string config_to_json_text(const ExperimentConfig& cfg);

// writes results.csv, summary.csv, manifest.json (and the per-n
// exports of the experiment kind) under cfg.output_dir; rows sorted by
// (n, seed) so reruns are byte-identical.  Returns 0, or 1 after a
// numerical failure (partial outputs are kept).  Worker count from
// AMPVP_WORKERS (default 1).
int run_experiment(const ExperimentConfig& cfg);

// tidy (x, y, group, seed) rows derived from an experiment output
// directory; kind "trend" aggregates (n, median d2), kind "histogram"
// bins the largest-n equilibrium against its mixture density.
// Throws std::runtime_error on unknown kind or missing inputs.
void emit_plotdata(const std::string& results_csv, const std::string& kind,
                   const std::string& out_csv);

int worker_count();

}  // namespace ampvp
