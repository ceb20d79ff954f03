#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pdboo/agents.hpp"
#include "pdboo/mdp.hpp"

namespace pdboo {

/// Shortest round-trip decimal form of a double (CSV/serialization helper).
std::string format_double(double v);

/*!
 * Parsed flat config: section name → (key → value), with "" holding keys that
 * appear before any `[section]` header. Lines are `key = value`, `#` starts a
 * comment, sections look like `[agent.pqr]`. Duplicate keys within a section
 * and malformed lines are errors.
 */
using ConfigMap = std::map<std::string, std::map<std::string, std::string>>;

ConfigMap parse_config_text(const std::string& text);
ConfigMap load_config_file(const std::string& path);
/// Deterministic re-serialization (sorted sections/keys) used for meta output.
std::string config_to_text(const ConfigMap& cfg);

struct ExperimentConfig {
  TabularMDP env;
  std::string env_label;  // "nchain" or the MDP file path
  /// (name, config) in declaration order; name comes from the section header.
  std::vector<std::pair<std::string, AgentConfig>> agents;
  std::int64_t total_steps = 30000;
  std::vector<std::uint64_t> seeds;
  std::int64_t eval_interval = 1000;
  std::int64_t episode_cap = 100;
  std::string output_dir;
  std::string kde_bandwidth_mode = "scott";
  /// Ground-truth return for the start state's optimal path when the env is a
  /// length-5 chain (mean/std), used for the summary W₂ column.
  bool has_ground_truth = false;
  double gt_mean = 0.0;
  double gt_std = 0.0;
};

/*!
 * Builds a runnable experiment from a parsed config. Throws
 * std::invalid_argument naming the offending key for unknown keys, missing
 * required keys (env, output_dir, seeds, at least one agent section), or
 * malformed values. Expansion keys (nchain.right_pairs, grid.*) must be
 * resolved by expand_experiments first.
 */
ExperimentConfig build_experiment(const ConfigMap& cfg);

/*!
 * Resolves sweep keys into concrete configs: `nchain.right_pairs = a:b,c:d`
 * emits one child per mean pair (reusing the component std of nchain.right),
 * and each `grid.<key> = v1,v2,...` crosses the list into every child
 * (`grid.agent.<name>.<field>` targets that agent section). Children get
 * `<label>` suffixes on output_dir; a config with no sweep keys yields itself
 * with an empty label.
 */
std::vector<std::pair<std::string, ConfigMap>> expand_experiments(const ConfigMap& cfg);

/// Count of decisions matching the exact optimal policy.
std::int64_t metric_optimal_count(const std::vector<TraceRow>& rows);
/// The always-optimal reference line.
std::int64_t oracle_line(std::int64_t total_steps);

/*!
 * W₂-to-Gaussian at each snapshot time, for rows whose sa_label matches.
 * Returns (t, distance) in ascending t.
 */
std::vector<std::pair<std::int64_t, double>> metric_w2_curve(
    const std::vector<SnapshotRow>& snapshots, const std::string& sa_label, double mu,
    double sigma);

struct DensityPoint {
  double x = 0.0;
  double density = 0.0;
};

/*!
 * Gaussian kernel density estimate on an even grid over [lo, hi]. A
 * non-positive bandwidth selects Scott's rule n^(−1/5)·sample_std; when the
 * sample has zero spread the bandwidth falls back to max(1e-6, |mean|·1e-3).
 * Requires ≥2 values, lo < hi, n_points ≥ 2.
 */
std::vector<DensityPoint> emit_density(std::span<const double> values, double lo, double hi,
                                       int n_points, double bandwidth = 0.0);

enum class ChainPath { left, right };

/*!
 * Closed-form return distribution of the two-step start-to-terminal paths of
 * the default-length chain, under the unscaled environment parameters (the
 * same ones nchain_make takes): each component mean/std is multiplied by γ².
 * Throws for chain lengths other than 5 (no closed form elsewhere).
 */
RewardDist ground_truth_nchain(double left_mean, double left_std, const RewardDist& right,
                               double gamma, ChainPath path, int chain_len = 5);

struct SummaryRow {
  std::string agent;
  int seed_count = 0;
  std::int64_t total_optimal = 0;
  double final_w2 = 0.0;  // NaN when no ground truth applies
};

struct RunReport {
  std::string output_dir;
  std::vector<SummaryRow> summary;
  std::vector<std::string> failures;  // "agent/seed: what" per failed run
};

/*!
 * Runs every (agent, seed) pair of one experiment on a worker pool
 * (PDBOO_THREADS caps the width), writing per-run trace_<agent>_<seed>.csv and
 * snapshots_<agent>_<seed>.csv plus summary.csv and meta.cfg into output_dir.
 * Per-run seeds derive from each listed seed and the agent index, so outputs
 * are byte-identical across reruns and independent of scheduling. Failing
 * runs are isolated: the rest complete, and the failure list comes back in
 * the report (also written to errors.log).
 */
RunReport run_experiment(const ExperimentConfig& cfg, const ConfigMap& resolved);

/// Stream seed for one (agent index, experiment seed) run.
std::uint64_t run_stream_seed(std::uint64_t experiment_seed, int agent_index);

/// CSV writers shared by the runner and the CLI.
std::string trace_csv(const std::vector<TraceRow>& rows);
std::string snapshots_csv(const std::vector<SnapshotRow>& rows);
std::string dp_trace_csv(const std::vector<DpTraceRow>& rows);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace pdboo
