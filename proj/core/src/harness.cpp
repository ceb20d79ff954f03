#include "pdboo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "pdboo/dp.hpp"
#include "pdboo/quantile.hpp"

namespace pdboo {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void bad_config(const std::string& what) { throw std::invalid_argument(what); }

double to_double(const std::string& value, const std::string& key) {
  double out = 0.0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto res = std::from_chars(first, last, out);
  if (res.ec != std::errc{} || res.ptr != last)
    bad_config("config: key '" + key + "' has a malformed number '" + value + "'");
  return out;
}

std::int64_t to_int64(const std::string& value, const std::string& key) {
  std::int64_t out = 0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto res = std::from_chars(first, last, out);
  if (res.ec != std::errc{} || res.ptr != last)
    bad_config("config: key '" + key + "' has a malformed integer '" + value + "'");
  return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (const char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

/// "mean:std" pair used by the chain reward keys.
std::pair<double, double> parse_mean_std(const std::string& s, const std::string& key) {
  const auto parts = split_on(s, ':');
  if (parts.size() != 2)
    bad_config("config: key '" + key + "' expects mean:std, got '" + s + "'");
  return {to_double(trim(parts[0]), key), to_double(trim(parts[1]), key)};
}

RewardDist parse_mixture(const std::string& s, const std::string& key) {
  const auto items = split_on(s, ',');
  RewardDist dist;
  const double w = 1.0 / static_cast<double>(items.size());
  for (const auto& item : items) {
    const auto [mean, std] = parse_mean_std(trim(item), key);
    dist.components.push_back({w, mean, std});
  }
  return dist;
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap cfg;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        bad_config("config line " + std::to_string(line_no) + ": malformed section header '" +
                   line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        bad_config("config line " + std::to_string(line_no) + ": empty section name");
      cfg[section];  // a section may legitimately hold no overrides
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      bad_config("config line " + std::to_string(line_no) + ": expected key = value, got '" +
                 line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      bad_config("config line " + std::to_string(line_no) + ": empty key");
    if (!cfg[section].emplace(key, value).second)
      bad_config("config line " + std::to_string(line_no) + ": duplicate key '" + key +
                 "' in section '" + section + "'");
  }
  return cfg;
}

ConfigMap load_config_file(const std::string& path) {
  return parse_config_text(read_text_file(path));
}

std::string config_to_text(const ConfigMap& cfg) {
  std::string out;
  const auto emit_keys = [&out](const std::map<std::string, std::string>& entries) {
    for (const auto& [key, value] : entries) out += key + " = " + value + "\n";
  };
  if (const auto it = cfg.find(""); it != cfg.end()) emit_keys(it->second);
  for (const auto& [section, entries] : cfg) {
    if (section.empty()) continue;
    out += "[" + section + "]\n";
    emit_keys(entries);
  }
  return out;
}

namespace {

/// Mutable view over one section that tracks consumption so leftovers can be
/// reported as unknown keys.
class KeyReader {
 public:
  KeyReader(const ConfigMap& cfg, std::string section)
      : section_(std::move(section)) {
    if (const auto it = cfg.find(section_); it != cfg.end()) entries_ = it->second;
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::string take(const std::string& key, const std::string& fallback) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const std::string v = it->second;
    entries_.erase(it);
    return v;
  }

  std::string require(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end())
      bad_config("config: missing required key '" + key +
                 (section_.empty() ? std::string() : "' in section '" + section_) + "'");
    const std::string v = it->second;
    entries_.erase(it);
    return v;
  }

  void finish() const {
    if (entries_.empty()) return;
    bad_config("config: unknown key '" + entries_.begin()->first +
               (section_.empty() ? std::string(" at top level")
                                 : "' in section '" + section_ + "'"));
  }

 private:
  std::string section_;
  std::map<std::string, std::string> entries_;
};

}  // namespace

ExperimentConfig build_experiment(const ConfigMap& cfg) {
  for (const auto& [section, entries] : cfg) {
    if (!section.empty() && section.rfind("agent.", 0) != 0)
      bad_config("config: unknown section '" + section + "'");
    if (section.empty())
      for (const auto& [key, value] : entries)
        if (key == "nchain.right_pairs" || key.rfind("grid.", 0) == 0)
          bad_config("config: sweep key '" + key +
                     "' must be resolved through expand_experiments before building");
  }

  KeyReader top(cfg, "");
  ExperimentConfig exp;

  const std::string env_kind = top.require("env");
  double global_gamma = 0.9;
  if (env_kind == "nchain") {
    const auto [left_mean, left_std] =
        parse_mean_std(top.take("nchain.left", "10:0.1"), "nchain.left");
    const RewardDist right = parse_mixture(top.take("nchain.right", "5:0.1,13:0.1"),
                                           "nchain.right");
    const auto chain_len =
        static_cast<int>(to_int64(top.take("nchain.chain_len", "5"), "nchain.chain_len"));
    const auto n_noop =
        static_cast<int>(to_int64(top.take("nchain.n_noop", "4"), "nchain.n_noop"));
    global_gamma = to_double(top.take("gamma", "0.9"), "gamma");
    exp.env = nchain_make(left_mean, left_std, right, chain_len, n_noop, global_gamma);
    exp.env_label = "nchain";
    if (chain_len == 5) {
      const RewardDist gt =
          ground_truth_nchain(left_mean, left_std, right, global_gamma, ChainPath::left);
      exp.has_ground_truth = true;
      exp.gt_mean = gt.components[0].mean;
      exp.gt_std = gt.components[0].std;
    }
  } else if (env_kind == "mdp_file") {
    const std::string path = top.require("mdp_file");
    exp.env = load_mdp_file(path);
    exp.env_label = path;
    global_gamma = exp.env.gamma;
  } else {
    bad_config("config: env must be 'nchain' or 'mdp_file', got '" + env_kind + "'");
  }

  exp.total_steps = to_int64(top.take("total_steps", "30000"), "total_steps");
  if (exp.total_steps < 1) bad_config("config: total_steps must be positive");
  for (const auto& item : split_on(top.require("seeds"), ',')) {
    const std::string s = trim(item);
    std::uint64_t seed = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty())
      bad_config("config: malformed seed '" + s + "'");
    exp.seeds.push_back(seed);
  }
  if (exp.seeds.empty()) bad_config("config: seeds must list at least one seed");
  if (std::set<std::uint64_t>(exp.seeds.begin(), exp.seeds.end()).size() != exp.seeds.size())
    bad_config("config: duplicate seeds would overwrite each other's outputs");
  exp.eval_interval = to_int64(top.take("eval_interval", "1000"), "eval_interval");
  if (exp.eval_interval < 0) bad_config("config: eval_interval must be >= 0");
  exp.episode_cap = to_int64(top.take("episode_cap", "100"), "episode_cap");
  if (exp.episode_cap < 1) bad_config("config: episode_cap must be >= 1");
  exp.output_dir = top.require("output_dir");
  exp.kde_bandwidth_mode = top.take("kde_bandwidth_mode", "scott");
  if (exp.kde_bandwidth_mode != "scott")
    to_double(exp.kde_bandwidth_mode, "kde_bandwidth_mode");  // numeric override
  top.finish();

  for (const auto& [section, entries] : cfg) {
    if (section.rfind("agent.", 0) != 0) continue;
    const std::string name = section.substr(6);
    if (name.empty()) bad_config("config: empty agent name in '" + section + "'");
    KeyReader agent(cfg, section);
    AgentConfig ac;
    ac.kind = agent_kind_from_name(agent.take("kind", name));
    ac.n_quantiles =
        static_cast<int>(to_int64(agent.take("n_quantiles", "200"), "n_quantiles"));
    ac.kappa = to_double(agent.take("kappa", "1"), "kappa");
    ac.lr = to_double(agent.take("lr", "0.05"), "lr");
    ac.gamma = to_double(agent.take("gamma", format_double(global_gamma)), "gamma");
    ac.eps_schedule.start = to_double(agent.take("eps_start", "1"), "eps_start");
    ac.eps_schedule.end = to_double(agent.take("eps_end", "0.01"), "eps_end");
    ac.eps_schedule.decay_steps = to_int64(agent.take("eps_decay_steps", "2500"),
                                           "eps_decay_steps");
    ac.c = to_double(agent.take("c", "50"), "c");
    ac.delta_schedule.delta0 = to_double(agent.take("delta0", "500"), "delta0");
    ac.delta_schedule.epsilon = to_double(agent.take("delta_eps", "0.001"), "delta_eps");
    const std::string form = agent.take("delta_form", "power_law");
    if (form == "power_law")
      ac.delta_schedule.form = DeltaSchedule::Form::power_law;
    else if (form == "constant")
      ac.delta_schedule.form = DeltaSchedule::Form::constant;
    else if (form == "sqrt_log_t_over_t")
      ac.delta_schedule.form = DeltaSchedule::Form::sqrt_log_t_over_t;
    else
      bad_config("config: unknown delta_form '" + form + "'");
    ac.dirichlet.beta = to_double(agent.take("beta", "0.05"), "beta");
    const std::string scale = agent.take("xi_scale", "raw_delta");
    if (scale == "raw_delta")
      ac.xi_scale = XiScale::raw_delta;
    else if (scale == "alpha_certified")
      ac.xi_scale = XiScale::alpha_certified;
    else
      bad_config("config: unknown xi_scale '" + scale + "'");
    ac.target_update_interval =
        to_int64(agent.take("target_update_interval", "25"), "target_update_interval");
    ac.batch_size = static_cast<int>(to_int64(agent.take("batch_size", "64"), "batch_size"));
    ac.replay_capacity = static_cast<std::size_t>(
        to_int64(agent.take("replay_capacity", "1000000"), "replay_capacity"));
    ac.start_steps = to_int64(agent.take("start_steps", "500"), "start_steps");
    ac.update_interval = to_int64(agent.take("update_interval", "1"), "update_interval");
    agent.finish();
    validate_agent_config(ac);
    exp.agents.emplace_back(name, ac);
  }
  if (exp.agents.empty()) bad_config("config: at least one [agent.<name>] section is required");
  return exp;
}

std::vector<std::pair<std::string, ConfigMap>> expand_experiments(const ConfigMap& cfg) {
  std::vector<std::pair<std::string, ConfigMap>> children = {{"", cfg}};
  const auto global_it = cfg.find("");
  const auto global = global_it == cfg.end() ? std::map<std::string, std::string>{}
                                             : global_it->second;

  if (const auto it = global.find("nchain.right_pairs"); it != global.end()) {
    // Mixture-mean pairs share the component std of the configured mixture.
    double comp_std = 0.1;
    if (const auto right = global.find("nchain.right"); right != global.end())
      comp_std = parse_mixture(right->second, "nchain.right").components.front().std;
    std::vector<std::pair<std::string, ConfigMap>> next;
    for (const auto& item : split_on(it->second, ',')) {
      const auto [lo, hi] = parse_mean_std(trim(item), "nchain.right_pairs");
      for (const auto& [label, child] : children) {
        ConfigMap c = child;
        c[""].erase("nchain.right_pairs");
        c[""]["nchain.right"] = format_double(lo) + ":" + format_double(comp_std) + "," +
                                format_double(hi) + ":" + format_double(comp_std);
        const std::string part = "right_" + format_double(lo) + "_" + format_double(hi);
        next.emplace_back(label.empty() ? part : label + "_" + part, c);
      }
    }
    children = std::move(next);
  }

  for (const auto& [key, value] : global) {
    if (key.rfind("grid.", 0) != 0) continue;
    const std::string target = key.substr(5);
    std::string section, field = target;
    if (target.rfind("agent.", 0) == 0) {
      const std::size_t dot = target.find('.', 6);
      if (dot == std::string::npos)
        bad_config("config: grid key '" + key + "' must name an agent field");
      section = target.substr(0, dot);
      field = target.substr(dot + 1);
    }
    const std::string label_stem = field.substr(field.rfind('.') + 1);
    const auto values = split_on(value, ',');
    if (values.empty() || trim(values.front()).empty())
      bad_config("config: grid key '" + key + "' has no values");
    std::vector<std::pair<std::string, ConfigMap>> next;
    for (const auto& [label, child] : children) {
      for (const auto& raw : values) {
        const std::string v = trim(raw);
        ConfigMap c = child;
        c[""].erase(key);
        c[section][field] = v;
        const std::string part = label_stem + "_" + v;
        next.emplace_back(label.empty() ? part : label + "_" + part, c);
      }
    }
    children = std::move(next);
  }

  if (children.size() > 1 || !children.front().first.empty()) {
    std::string base_dir;
    if (const auto it = global.find("output_dir"); it != global.end()) base_dir = it->second;
    for (auto& [label, child] : children)
      if (!base_dir.empty()) child[""]["output_dir"] = base_dir + "/" + label;
  }
  return children;
}

std::int64_t metric_optimal_count(const std::vector<TraceRow>& rows) {
  std::int64_t count = 0;
  for (const auto& row : rows) count += row.is_optimal_action ? 1 : 0;
  return count;
}

std::int64_t oracle_line(std::int64_t total_steps) { return total_steps; }

std::vector<std::pair<std::int64_t, double>> metric_w2_curve(
    const std::vector<SnapshotRow>& snapshots, const std::string& sa_label, double mu,
    double sigma) {
  std::map<std::int64_t, std::vector<double>> by_t;
  for (const auto& row : snapshots)
    if (row.sa_label == sa_label) by_t[row.t].push_back(row.theta_value);
  std::vector<std::pair<std::int64_t, double>> out;
  out.reserve(by_t.size());
  for (auto& [t, values] : by_t)
    out.emplace_back(t, wasserstein2_to_gaussian(QuantileDist(std::move(values)), mu, sigma));
  return out;
}

std::vector<DensityPoint> emit_density(std::span<const double> values, double lo, double hi,
                                       int n_points, double bandwidth) {
  if (values.size() < 2)
    throw std::invalid_argument("emit_density: need at least two sample values");
  if (!(lo < hi)) throw std::invalid_argument("emit_density: grid needs lo < hi");
  if (n_points < 2) throw std::invalid_argument("emit_density: need at least two grid points");

  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (const double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  const double sample_std = std::sqrt(ss / (n - 1.0));

  double bw = bandwidth;
  if (!(bw > 0.0)) bw = sample_std * std::pow(n, -0.2);  // Scott's rule
  if (!(bw > 0.0)) bw = std::max(1e-6, std::abs(mean) * 1e-3);  // degenerate sample

  const double inv_norm = 1.0 / (n * bw * std::sqrt(2.0 * M_PI));
  std::vector<DensityPoint> out(static_cast<std::size_t>(n_points));
  const double step = (hi - lo) / static_cast<double>(n_points - 1);
  for (int i = 0; i < n_points; ++i) {
    const double x = lo + step * i;
    double f = 0.0;
    for (const double v : values) {
      const double u = (x - v) / bw;
      f += std::exp(-0.5 * u * u);
    }
    out[static_cast<std::size_t>(i)] = {x, f * inv_norm};
  }
  return out;
}

RewardDist ground_truth_nchain(double left_mean, double left_std, const RewardDist& right,
                               double gamma, ChainPath path, int chain_len) {
  if (chain_len != 5)
    throw std::invalid_argument(
        "ground_truth_nchain: closed form only covers the length-5 chain");
  if (right.components.empty())
    throw std::invalid_argument("ground_truth_nchain: empty right mixture");
  const double g2 = gamma * gamma;
  RewardDist out;
  if (path == ChainPath::left) {
    out.components.push_back({1.0, g2 * left_mean, g2 * left_std});
  } else {
    for (const auto& c : right.components)
      out.components.push_back({c.weight, g2 * c.mean, g2 * c.std});
  }
  return out;
}

std::uint64_t run_stream_seed(std::uint64_t experiment_seed, int agent_index) {
  return Rng::derive_stream(experiment_seed, static_cast<std::uint64_t>(agent_index));
}

std::string trace_csv(const std::vector<TraceRow>& rows) {
  std::string out =
      "t,episode,state,action,is_optimal_action,reward,done,loss,criterion_kind,"
      "q_mean_best,bonus_or_gap\n";
  for (const auto& r : rows) {
    out += std::to_string(r.t) + "," + std::to_string(r.episode) + "," +
           std::to_string(r.state) + "," + std::to_string(r.action) + "," +
           (r.is_optimal_action ? "1" : "0") + "," + format_double(r.reward) + "," +
           (r.done ? "1" : "0") + "," + format_double(r.loss) + "," + r.criterion_kind + "," +
           format_double(r.q_mean_best) + "," + format_double(r.bonus_or_gap) + "\n";
  }
  return out;
}

std::string snapshots_csv(const std::vector<SnapshotRow>& rows) {
  std::string out = "t,sa_label,theta_index,theta_value\n";
  for (const auto& r : rows)
    out += std::to_string(r.t) + "," + r.sa_label + "," + std::to_string(r.theta_index) + "," +
           format_double(r.theta_value) + "\n";
  return out;
}

std::string dp_trace_csv(const std::vector<DpTraceRow>& rows) {
  std::string out = "n,sup_gap,bound,assumption_ok\n";
  for (const auto& r : rows)
    out += std::to_string(r.n) + "," + format_double(r.sup_gap) + "," +
           format_double(r.bound) + "," + (r.assumption_ok ? "1" : "0") + "\n";
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("write_text_file: cannot open '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write_text_file: short write to '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_text_file: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

int worker_count(int n_jobs) {
  int cap = static_cast<int>(std::thread::hardware_concurrency());
  if (cap < 1) cap = 1;
  if (const char* env = std::getenv("PDBOO_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed >= 1) cap = parsed;
  }
  return std::max(1, std::min(cap, n_jobs));
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg, const ConfigMap& resolved) {
  if (cfg.agents.empty()) throw std::invalid_argument("run_experiment: no agents configured");
  if (cfg.seeds.empty()) throw std::invalid_argument("run_experiment: no seeds configured");
  if (cfg.total_steps < 1) throw std::invalid_argument("run_experiment: total_steps must be positive");
  fs::create_directories(cfg.output_dir);
  write_text_file((fs::path(cfg.output_dir) / "meta.cfg").string(), config_to_text(resolved));

  struct JobResult {
    bool ok = false;
    std::int64_t optimal = 0;
    double final_w2 = std::numeric_limits<double>::quiet_NaN();
    std::string error;
  };
  const int n_agents = static_cast<int>(cfg.agents.size());
  const int n_seeds = static_cast<int>(cfg.seeds.size());
  const int n_jobs = n_agents * n_seeds;
  std::vector<JobResult> results(static_cast<std::size_t>(n_jobs));

  const std::string opt_label = "s" + std::to_string(cfg.env.start_state) + "_a0";
  std::atomic<int> next_job{0};
  const auto worker = [&]() {
    for (int job; (job = next_job.fetch_add(1)) < n_jobs;) {
      const int agent_index = job / n_seeds;
      const int seed_index = job % n_seeds;
      const auto& [name, agent_cfg] = cfg.agents[static_cast<std::size_t>(agent_index)];
      const std::uint64_t exp_seed = cfg.seeds[static_cast<std::size_t>(seed_index)];
      auto& res = results[static_cast<std::size_t>(job)];
      try {
        const RunTrace trace =
            train_run(cfg.env, agent_cfg, cfg.total_steps, run_stream_seed(exp_seed, agent_index),
                      cfg.eval_interval, cfg.episode_cap);
        const std::string stem = name + "_" + std::to_string(exp_seed);
        write_text_file((fs::path(cfg.output_dir) / ("trace_" + stem + ".csv")).string(),
                        trace_csv(trace.rows));
        write_text_file((fs::path(cfg.output_dir) / ("snapshots_" + stem + ".csv")).string(),
                        snapshots_csv(trace.snapshots));
        res.optimal = metric_optimal_count(trace.rows);
        if (cfg.has_ground_truth && !trace.snapshots.empty()) {
          const std::int64_t last_t = trace.snapshots.back().t;
          std::vector<double> values;
          for (const auto& snap : trace.snapshots)
            if (snap.t == last_t && snap.sa_label == opt_label)
              values.push_back(snap.theta_value);
          if (!values.empty())
            res.final_w2 = wasserstein2_to_gaussian(QuantileDist(std::move(values)),
                                                    cfg.gt_mean, cfg.gt_std);
        }
        res.ok = true;
      } catch (const std::exception& e) {
        res.error = name + "/" + std::to_string(exp_seed) + ": " + e.what();
      }
    }
  };

  const int n_threads = worker_count(n_jobs);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  RunReport report;
  report.output_dir = cfg.output_dir;
  std::string summary = "agent,seed_count,total_optimal,final_w2\n";
  for (int i = 0; i < n_agents; ++i) {
    SummaryRow row;
    row.agent = cfg.agents[static_cast<std::size_t>(i)].first;
    double w2_sum = 0.0;
    int w2_count = 0;
    for (int j = 0; j < n_seeds; ++j) {
      const auto& res = results[static_cast<std::size_t>(i * n_seeds + j)];
      if (!res.ok) {
        report.failures.push_back(res.error);
        continue;
      }
      ++row.seed_count;
      row.total_optimal += res.optimal;
      w2_sum += res.final_w2;
      ++w2_count;
    }
    row.final_w2 = w2_count > 0 ? w2_sum / w2_count
                                : std::numeric_limits<double>::quiet_NaN();
    report.summary.push_back(row);
    summary += row.agent + "," + std::to_string(row.seed_count) + "," +
               std::to_string(row.total_optimal) + "," + format_double(row.final_w2) + "\n";
  }
  write_text_file((fs::path(cfg.output_dir) / "summary.csv").string(), summary);
  if (!report.failures.empty()) {
    std::string log;
    for (const auto& f : report.failures) log += f + "\n";
    write_text_file((fs::path(cfg.output_dir) / "errors.log").string(), log);
  }
  return report;
}

}  // namespace pdboo
