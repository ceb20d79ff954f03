#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pdboo/agents.hpp"
#include "pdboo/dp.hpp"
#include "pdboo/harness.hpp"
#include "pdboo/mdp.hpp"
#include "pdboo/perturbation.hpp"
#include "pdboo/rng.hpp"

namespace fs = std::filesystem;
using namespace pdboo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitInvariantBreach = 2;

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (const char ch : text) {
    if (ch == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double_field(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw std::runtime_error("malformed numeric field '" + s + "'");
  }
  return v;
}

int cmd_run(const std::string& config_path, bool seed_set, std::uint64_t seed,
            const std::string& out_override) {
  ConfigMap base = load_config_file(config_path);
  if (seed_set) base[""]["seeds"] = std::to_string(seed);
  if (!out_override.empty()) base[""]["output_dir"] = out_override;
  const auto children = expand_experiments(base);
  bool any_failure = false;
  for (const auto& [label, child] : children) {
    const ExperimentConfig exp = build_experiment(child);
    const RunReport report = run_experiment(exp, child);
    std::cout << "experiment" << (label.empty() ? "" : " " + label) << " -> "
              << report.output_dir << "\n";
    for (const auto& row : report.summary)
      std::cout << "  " << row.agent << ": seeds=" << row.seed_count
                << " total_optimal=" << row.total_optimal
                << " final_w2=" << format_double(row.final_w2) << "\n";
    for (const auto& failure : report.failures) {
      std::cerr << "run failed: " << failure << "\n";
      any_failure = true;
    }
  }
  return any_failure ? kExitInvariantBreach : kExitOk;
}

int cmd_dp_verify(const std::string& mdp_path, double delta0, double eps, std::int64_t iters,
                  int n, int m, const std::string& xi_scale, std::uint64_t seed,
                  const std::string& out_dir) {
  const TabularMDP mdp = load_mdp_file(mdp_path);
  DpRunConfig cfg;
  cfg.n_quantiles = n;
  cfg.m_reward = m;
  cfg.n_iters = iters;
  cfg.schedule = {delta0, eps, DeltaSchedule::Form::power_law};
  if (xi_scale == "alpha_certified")
    cfg.xi_scale = XiScale::alpha_certified;
  else if (xi_scale == "raw_delta")
    cfg.xi_scale = XiScale::raw_delta;
  else
    throw std::invalid_argument("--xi-scale must be alpha_certified or raw_delta");

  Rng rng(seed);
  const auto trace = dp_convergence_run(mdp, cfg, rng);
  const fs::path out = fs::path(out_dir) / "dp_verify.csv";
  write_text_file(out.string(), dp_trace_csv(trace));

  bool breach = false;
  for (const auto& row : trace)
    if (row.assumption_ok && cfg.xi_scale == XiScale::alpha_certified &&
        row.sup_gap > row.bound)
      breach = true;
  const auto& last = trace.back();
  std::cout << "iters=" << last.n << " final_sup_gap=" << format_double(last.sup_gap)
            << " final_bound=" << format_double(last.bound)
            << " assumption_ok=" << (last.assumption_ok ? 1 : 0) << " csv=" << out.string()
            << "\n";
  if (breach) {
    std::cerr << "invariant breach: sup_gap exceeded the certified bound\n";
    return kExitInvariantBreach;
  }
  return kExitOk;
}

int cmd_oracle(const std::string& mdp_path, const std::string& policy_path,
               std::int64_t rollouts, std::uint64_t seed, const std::string& out_dir) {
  const TabularMDP mdp = load_mdp_file(mdp_path);
  std::vector<int> policy;
  for (const auto& line : split_lines(read_text_file(policy_path))) {
    const std::string t = line.substr(0, line.find('#'));
    if (t.find_first_not_of(" \t\r") == std::string::npos) continue;
    int a = 0;
    const auto res = std::from_chars(t.data() + t.find_first_not_of(" \t\r"),
                                     t.data() + t.size(), a);
    if (res.ec != std::errc{})
      throw std::invalid_argument("policy file: malformed action line '" + line + "'");
    policy.push_back(a);
  }
  if (static_cast<int>(policy.size()) != mdp.n_states)
    throw std::invalid_argument("policy file: expected one action per state (" +
                                std::to_string(mdp.n_states) + " lines)");
  for (int s = 0; s < mdp.n_states; ++s)
    if (policy[static_cast<std::size_t>(s)] < 0 ||
        policy[static_cast<std::size_t>(s)] >= mdp.n_actions)
      throw std::invalid_argument("policy file: action out of range at state " +
                                  std::to_string(s));
  if (rollouts < 1) throw std::invalid_argument("--rollouts must be >= 1");

  Rng rng(seed);
  std::string csv = "rollout,ret\n";
  double sum = 0.0, sum_sq = 0.0;
  for (std::int64_t k = 0; k < rollouts; ++k) {
    double ret = 0.0, disc = 1.0;
    int s = env_reset(mdp);
    for (int step = 0; step < 10000 && !mdp.is_terminal(s); ++step) {
      const Transition tr = env_step(mdp, s, policy[static_cast<std::size_t>(s)], rng, step);
      ret += disc * tr.reward;
      disc *= mdp.gamma;
      if (tr.done) break;
      s = tr.next_state;
    }
    sum += ret;
    sum_sq += ret * ret;
    csv += std::to_string(k) + "," + format_double(ret) + "\n";
  }
  const double mean = sum / static_cast<double>(rollouts);
  const double var = std::max(0.0, sum_sq / static_cast<double>(rollouts) - mean * mean);
  const fs::path out = fs::path(out_dir) / "oracle.csv";
  write_text_file(out.string(), csv);
  std::cout << "rollouts=" << rollouts << " mean=" << format_double(mean)
            << " std=" << format_double(std::sqrt(var)) << " csv=" << out.string() << "\n";
  return kExitOk;
}

int cmd_plotdata(const std::string& run_dir, const std::string& out_override) {
  const fs::path dir(run_dir);
  if (!fs::is_directory(dir)) throw std::invalid_argument("not a run directory: " + run_dir);
  const ConfigMap meta = load_config_file((dir / "meta.cfg").string());
  const ExperimentConfig exp = build_experiment(meta);
  const fs::path out_dir = out_override.empty() ? dir / "plots" : fs::path(out_override);
  fs::create_directories(out_dir);
  const std::string opt_label = "s" + std::to_string(exp.env.start_state) + "_a0";

  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("snapshots_", 0) == 0) {
      const std::string stem = name.substr(10, name.size() - 10 - 4);
      const auto lines = split_lines(read_text_file(entry.path().string()));
      std::vector<SnapshotRow> rows;
      for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split_csv(lines[i]);
        if (f.size() != 4) continue;
        rows.push_back({std::stoll(f[0]), f[1], std::stoi(f[2]), parse_double_field(f[3])});
      }
      if (exp.has_ground_truth) {
        const auto curve = metric_w2_curve(rows, opt_label, exp.gt_mean, exp.gt_std);
        std::string csv = "t,w2\n";
        for (const auto& [t, w2] : curve)
          csv += std::to_string(t) + "," + format_double(w2) + "\n";
        write_text_file((out_dir / ("w2curve_" + stem + ".csv")).string(), csv);
      }
      // Density of the final snapshot of the start state's first action.
      std::int64_t last_t = -1;
      for (const auto& row : rows) last_t = std::max(last_t, row.t);
      std::vector<double> values;
      for (const auto& row : rows)
        if (row.t == last_t && row.sa_label == opt_label) values.push_back(row.theta_value);
      if (values.size() >= 2) {
        const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
        const double spread = std::max(1e-3, *hi_it - *lo_it);
        const auto dens =
            emit_density(values, *lo_it - 0.5 * spread, *hi_it + 0.5 * spread, 256);
        std::string csv = "x,density\n";
        for (const auto& p : dens)
          csv += format_double(p.x) + "," + format_double(p.density) + "\n";
        write_text_file((out_dir / ("density_" + stem + ".csv")).string(), csv);
      }
    } else if (name.rfind("trace_", 0) == 0) {
      const std::string stem = name.substr(6, name.size() - 6 - 4);
      const auto lines = split_lines(read_text_file(entry.path().string()));
      std::string csv = "t,cumulative_optimal,oracle\n";
      std::int64_t cum = 0;
      for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split_csv(lines[i]);
        if (f.size() < 5) continue;
        cum += f[4] == "1" ? 1 : 0;
        csv += f[0] + "," + std::to_string(cum) + "," + f[0] + "\n";
      }
      write_text_file((out_dir / ("counts_" + stem + ".csv")).string(), csv);
    }
  }
  std::cout << "plot data written to " << out_dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantile-distribution control engine: experiments, exact DP verification, "
               "Monte-Carlo oracles, and plot-data emission"};
  app.require_subcommand(1);
  std::uint64_t seed = 1;
  std::string out_dir = ".";

  auto* run = app.add_subcommand("run", "Run a config-driven experiment (with sweep expansion)");
  std::string run_config;
  std::string run_out;
  bool run_seed_set = false;
  run->add_option("config", run_config, "experiment config file")->required();
  run->add_option("--seed", seed, "replace the config seed list with this single seed")
      ->each([&run_seed_set](const std::string&) { run_seed_set = true; });
  run->add_option("--out", run_out, "override the config output_dir");

  auto* dpv = app.add_subcommand("dp-verify", "Exact-DP convergence trace with certified bounds");
  std::string dpv_mdp;
  double dpv_delta0 = 0.5, dpv_eps = 0.001;
  std::int64_t dpv_iters = 200;
  int dpv_n = 512, dpv_m = 64;
  std::string dpv_scale = "alpha_certified";
  dpv->add_option("mdp", dpv_mdp, "MDP description file")->required();
  dpv->add_option("--delta0", dpv_delta0, "perturbation budget at step 1");
  dpv->add_option("--eps", dpv_eps, "power-law schedule exponent margin");
  dpv->add_option("--iters", dpv_iters, "operator applications");
  dpv->add_option("--n", dpv_n, "atoms per return distribution");
  dpv->add_option("--m", dpv_m, "atoms per discretized reward");
  dpv->add_option("--xi-scale", dpv_scale, "alpha_certified or raw_delta");
  dpv->add_option("--seed", seed, "master seed for the weight draws");
  dpv->add_option("--out", out_dir, "output directory");

  auto* orc = app.add_subcommand("oracle", "Monte-Carlo returns of a fixed policy");
  std::string orc_mdp, orc_policy;
  std::int64_t orc_rollouts = 10000;
  orc->add_option("mdp", orc_mdp, "MDP description file")->required();
  orc->add_option("--policy", orc_policy, "text file, one action per state")->required();
  orc->add_option("--rollouts", orc_rollouts, "episode count");
  orc->add_option("--seed", seed, "master seed");
  orc->add_option("--out", out_dir, "output directory");

  auto* plot = app.add_subcommand("plotdata", "Densities, W2 curves, and count curves for a run");
  std::string plot_dir, plot_out;
  plot->add_option("run_dir", plot_dir, "directory produced by `run`")->required();
  plot->add_option("--out", plot_out, "output directory (default <run_dir>/plots)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfigError;
  }

  try {
    if (run->parsed()) return cmd_run(run_config, run_seed_set, seed, run_out);
    if (dpv->parsed())
      return cmd_dp_verify(dpv_mdp, dpv_delta0, dpv_eps, dpv_iters, dpv_n, dpv_m, dpv_scale,
                           seed, out_dir);
    if (orc->parsed()) return cmd_oracle(orc_mdp, orc_policy, orc_rollouts, seed, out_dir);
    if (plot->parsed()) return cmd_plotdata(plot_dir, plot_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}
