// End-to-end tests of the command-line binary: exit-code contract, CSV
// outputs of every subcommand, determinism under a fixed master seed, and the
// shipped config fixtures.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "pdboo/harness.hpp"

namespace fs = std::filesystem;
using namespace pdboo;

namespace {

const std::string kCli = PDBOO_CLI_PATH;
const std::string kData = PDBOO_TEST_DATA_DIR;
const std::string kConfigs = PDBOO_CONFIG_DIR;

fs::path fresh_tmp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pdboo_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the binary with shell-level redirection, returning the exit code and
// leaving combined stdout+stderr in `capture`.
int run_cli(const std::string& args, const fs::path& capture) {
  const std::string cmd = kCli + " " + args + " > " + capture.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

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

double to_num(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  REQUIRE(res.ec == std::errc{});
  return v;
}

}  // namespace

TEST_CASE("exit codes: help is 0, missing or unknown subcommands are 1") {
  const fs::path dir = fresh_tmp_dir("exit_codes");
  CHECK(run_cli("--help", dir / "help.txt") == 0);
  CHECK(read_text_file((dir / "help.txt").string()).find("Usage") != std::string::npos);

  CHECK(run_cli("", dir / "noargs.txt") == 1);
  const int unknown = run_cli("frobnicate", dir / "unknown.txt");
  CHECK(unknown == 1);
  // The failure message must include usage guidance.
  const std::string text = read_text_file((dir / "unknown.txt").string());
  CHECK(text.find("Usage") != std::string::npos);
}

TEST_CASE("dp-verify: trace rows respect the certified bound and reruns are byte-identical") {
  const fs::path dir = fresh_tmp_dir("dp_verify");
  const std::string mdp = kData + "/nchain_default.mdp";
  const std::string common = "dp-verify " + mdp + " --iters 8 --n 64 --m 32 --seed 3 --out ";
  CHECK(run_cli(common + (dir / "a").string(), dir / "out_a.txt") == 0);
  CHECK(run_cli(common + (dir / "b").string(), dir / "out_b.txt") == 0);

  const std::string csv_a = read_text_file((dir / "a" / "dp_verify.csv").string());
  const std::string csv_b = read_text_file((dir / "b" / "dp_verify.csv").string());
  CHECK(csv_a == csv_b);

  const auto lines = split_lines(csv_a);
  REQUIRE(lines.size() == 9);
  CHECK(lines[0] == "n,sup_gap,bound,assumption_ok");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv(lines[i]);
    REQUIRE(f.size() == 4);
    CHECK(to_num(f[0]) == doctest::Approx(static_cast<double>(i)).epsilon(1e-12));
    CHECK(f[3] == "1");
    CHECK(to_num(f[1]) <= to_num(f[2]));
  }
  // The default chain needs only a couple of bootstrap steps, so the mean gap
  // collapses to numerical noise well within eight iterations.
  const auto last = split_csv(lines.back());
  CHECK(to_num(last[1]) < 1e-9);
}

TEST_CASE("dp-verify: missing input file and bad flag values exit 1") {
  const fs::path dir = fresh_tmp_dir("dp_verify_bad");
  CHECK(run_cli("dp-verify " + (dir / "nope.mdp").string(), dir / "o1.txt") == 1);
  CHECK(run_cli("dp-verify " + kData + "/nchain_default.mdp --xi-scale sideways --iters 2 --out " +
                    dir.string(),
                dir / "o2.txt") == 1);
}

TEST_CASE("oracle: always-left rollouts on the default chain match the analytic return law") {
  const fs::path dir = fresh_tmp_dir("oracle");
  const std::string cmd = "oracle " + kData + "/nchain_default.mdp --policy " + kData +
                          "/nchain_left_policy.txt --rollouts 2000 --seed 11 --out ";
  CHECK(run_cli(cmd + (dir / "a").string(), dir / "out_a.txt") == 0);
  CHECK(run_cli(cmd + (dir / "b").string(), dir / "out_b.txt") == 0);
  const std::string csv_a = read_text_file((dir / "a" / "oracle.csv").string());
  CHECK(csv_a == read_text_file((dir / "b" / "oracle.csv").string()));

  const auto lines = split_lines(csv_a);
  REQUIRE(lines.size() == 2001);
  CHECK(lines[0] == "rollout,ret");
  double sum = 0.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv(lines[i]);
    REQUIRE(f.size() == 2);
    sum += to_num(f[1]);
  }
  const double mean = sum / 2000.0;
  const double se = 0.081 / std::sqrt(2000.0);
  CHECK(std::abs(mean - 8.1) <= 4 * se);
}

TEST_CASE("oracle: malformed policy files exit 1") {
  const fs::path dir = fresh_tmp_dir("oracle_bad");
  write_text_file((dir / "short.txt").string(), "0\n0\n0\n");
  CHECK(run_cli("oracle " + kData + "/nchain_default.mdp --policy " + (dir / "short.txt").string() +
                    " --rollouts 10 --out " + dir.string(),
                dir / "o1.txt") == 1);
  write_text_file((dir / "range.txt").string(), "0\n0\n9\n0\n0\n");
  CHECK(run_cli("oracle " + kData + "/nchain_default.mdp --policy " + (dir / "range.txt").string() +
                    " --rollouts 10 --out " + dir.string(),
                dir / "o2.txt") == 1);
}

TEST_CASE("run: tiny experiment produces the full file set and is seed-deterministic") {
  const fs::path dir = fresh_tmp_dir("run_tiny");
  const std::string cfg_text =
      "env = nchain\n"
      "total_steps = 60\n"
      "seeds = 1,2\n"
      "eval_interval = 20\n"
      "episode_cap = 10\n"
      "output_dir = " + (dir / "default_out").string() + "\n"
      "[agent.pqr]\n"
      "n_quantiles = 8\n"
      "lr = 0.1\n"
      "batch_size = 4\n"
      "replay_capacity = 64\n"
      "start_steps = 10\n"
      "target_update_interval = 5\n"
      "delta0 = 5\n";
  write_text_file((dir / "tiny.cfg").string(), cfg_text);

  const std::string base = "run " + (dir / "tiny.cfg").string() + " --out ";
  CHECK(run_cli(base + (dir / "a").string(), dir / "out_a.txt") == 0);
  CHECK(run_cli(base + (dir / "b").string(), dir / "out_b.txt") == 0);

  for (const std::string name : {"meta.cfg", "summary.csv", "trace_pqr_1.csv", "trace_pqr_2.csv",
                                 "snapshots_pqr_1.csv", "snapshots_pqr_2.csv"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(dir / "a" / name));
    if (name != "meta.cfg")  // meta.cfg embeds the output path, which differs.
      CHECK(read_text_file((dir / "a" / name).string()) ==
            read_text_file((dir / "b" / name).string()));
  }
  const auto summary = split_lines(read_text_file((dir / "a" / "summary.csv").string()));
  REQUIRE(summary.size() == 2);
  CHECK(summary[0] == "agent,seed_count,total_optimal,final_w2");
  CHECK(split_csv(summary[1])[0] == "pqr");
  CHECK(split_csv(summary[1])[1] == "2");

  // --seed collapses the seed list to one run.
  CHECK(run_cli(base + (dir / "c").string() + " --seed 77", dir / "out_c.txt") == 0);
  CHECK(fs::exists(dir / "c" / "trace_pqr_77.csv"));
  CHECK(!fs::exists(dir / "c" / "trace_pqr_1.csv"));
}

TEST_CASE("run: config errors exit 1") {
  const fs::path dir = fresh_tmp_dir("run_bad");
  CHECK(run_cli("run " + (dir / "missing.cfg").string(), dir / "o1.txt") == 1);
  write_text_file((dir / "bad.cfg").string(),
                  "env = nchain\nseeds = 1\noutput_dir = " + (dir / "o").string() +
                      "\nbogus_key = 3\n[agent.pqr]\n");
  CHECK(run_cli("run " + (dir / "bad.cfg").string(), dir / "o2.txt") == 1);
  const std::string text = read_text_file((dir / "o2.txt").string());
  CHECK(text.find("bogus_key") != std::string::npos);
}

TEST_CASE("plotdata: emits curve, density, and count files that parse cleanly") {
  const fs::path dir = fresh_tmp_dir("plotdata");
  const std::string cfg_text =
      "env = nchain\n"
      "total_steps = 60\n"
      "seeds = 4\n"
      "eval_interval = 20\n"
      "episode_cap = 10\n"
      "output_dir = " + (dir / "run").string() + "\n"
      "[agent.dltv]\n"
      "n_quantiles = 8\n"
      "lr = 0.1\n"
      "batch_size = 4\n"
      "replay_capacity = 64\n"
      "start_steps = 10\n"
      "target_update_interval = 5\n";
  write_text_file((dir / "p.cfg").string(), cfg_text);
  REQUIRE(run_cli("run " + (dir / "p.cfg").string(), dir / "run_out.txt") == 0);
  CHECK(run_cli("plotdata " + (dir / "run").string(), dir / "plot_out.txt") == 0);

  const fs::path plots = dir / "run" / "plots";
  for (const std::string name : {"w2curve_dltv_4.csv", "density_dltv_4.csv", "counts_dltv_4.csv"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(plots / name));
  }
  const auto w2 = split_lines(read_text_file((plots / "w2curve_dltv_4.csv").string()));
  REQUIRE(w2.size() == 4);  // header + snapshots at t = 20, 40, 60
  CHECK(w2[0] == "t,w2");
  for (std::size_t i = 1; i < w2.size(); ++i) {
    const double v = to_num(split_csv(w2[i])[1]);
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
  }
  const auto counts = split_lines(read_text_file((plots / "counts_dltv_4.csv").string()));
  REQUIRE(counts.size() == 61);
  CHECK(counts[0] == "t,cumulative_optimal,oracle");
  double prev = 0.0;
  for (std::size_t i = 1; i < counts.size(); ++i) {
    const auto f = split_csv(counts[i]);
    REQUIRE(f.size() == 3);
    const double cum = to_num(f[1]);
    CHECK(cum >= prev);
    CHECK(cum <= to_num(f[2]));  // cannot beat the always-optimal oracle line
    prev = cum;
  }
  const auto dens = split_lines(read_text_file((plots / "density_dltv_4.csv").string()));
  REQUIRE(dens.size() == 257);
  for (std::size_t i = 1; i < dens.size(); ++i)
    CHECK(to_num(split_csv(dens[i])[1]) >= 0.0);

  CHECK(run_cli("plotdata " + (dir / "not_a_dir").string(), dir / "plot_bad.txt") == 1);
}

TEST_CASE("shipped configs: default experiment and mixture sweep both build") {
  const ConfigMap base = load_config_file(kConfigs + "/default_nchain.cfg");
  const auto children = expand_experiments(base);
  REQUIRE(children.size() == 1);
  const ExperimentConfig exp = build_experiment(children[0].second);
  REQUIRE(exp.agents.size() == 4);
  CHECK(exp.agents[0].first == "dltv");
  CHECK(exp.agents[1].first == "p_dltv");
  CHECK(exp.agents[2].first == "pqr");
  CHECK(exp.agents[3].first == "qr_eps_greedy");
  CHECK(exp.total_steps == 30000);
  CHECK(exp.seeds.size() == 4);
  CHECK(exp.has_ground_truth);
  CHECK(exp.gt_mean == doctest::Approx(8.1).epsilon(1e-12));

  const ConfigMap sweep = load_config_file(kConfigs + "/table1_sweep.cfg");
  const auto sweep_children = expand_experiments(sweep);
  REQUIRE(sweep_children.size() == 8);
  CHECK(sweep_children.front().first == "right_8_10");
  CHECK(sweep_children.back().first == "right_1_17");
  for (const auto& [label, child] : sweep_children) {
    CAPTURE(label);
    const ExperimentConfig child_exp = build_experiment(child);
    CHECK(child_exp.agents.size() == 4);
    // Every pair keeps the pre-discount mixture mean at 9; the stored reward
    // carries the single entry-step discount factor.
    CHECK(reward_mean(child_exp.env.reward_at(3, 1)) ==
          doctest::Approx(0.9 * 9.0).epsilon(1e-12));
  }
}
