#include "pdboo/mdp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace pdboo {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double_token(const std::string& tok, int line_no) {
  double value = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    throw std::runtime_error("mdp file: bad number '" + tok + "' at line " +
                             std::to_string(line_no));
  return value;
}

int parse_int_token(const std::string& tok, int line_no) {
  int value = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    throw std::runtime_error("mdp file: bad integer '" + tok + "' at line " +
                             std::to_string(line_no));
  return value;
}

bool is_deterministic_zero(const RewardDist& dist) {
  return dist.components.size() == 1 && dist.components[0].weight == 1.0 &&
         dist.components[0].mean == 0.0 && dist.components[0].std == 0.0;
}

}  // namespace

RewardDist RewardDist::deterministic(double value) {
  RewardDist d;
  d.components = {{1.0, value, 0.0}};
  return d;
}

RewardDist RewardDist::half_half(double mean_a, double mean_b, double std) {
  RewardDist d;
  d.components = {{0.5, mean_a, std}, {0.5, mean_b, std}};
  return d;
}

double reward_mean(const RewardDist& dist) {
  double m = 0.0;
  for (const auto& c : dist.components) m += c.weight * c.mean;
  return m;
}

double reward_variance(const RewardDist& dist) {
  const double m = reward_mean(dist);
  double second = 0.0;
  for (const auto& c : dist.components) second += c.weight * (c.std * c.std + c.mean * c.mean);
  return second - m * m;
}

TabularMDP nchain_make(double left_mean, double left_std, const RewardDist& right,
                       int chain_len, int n_noop, double gamma) {
  if (chain_len < 3 || chain_len % 2 == 0)
    throw std::invalid_argument("nchain_make: chain_len must be odd and >= 3");
  if (n_noop < 0) throw std::invalid_argument("nchain_make: n_noop must be >= 0");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("nchain_make: gamma must lie in [0, 1)");
  if (left_std < 0.0) throw std::invalid_argument("nchain_make: left_std must be >= 0");

  TabularMDP m;
  m.n_states = chain_len;
  m.n_actions = 2 + n_noop;
  m.gamma = gamma;
  m.start_state = (chain_len - 1) / 2;
  m.terminal.assign(static_cast<std::size_t>(chain_len), 0);
  m.terminal.front() = 1;
  m.terminal.back() = 1;
  m.transition.assign(
      static_cast<std::size_t>(chain_len) * m.n_actions * chain_len, 0.0);
  m.reward.assign(static_cast<std::size_t>(chain_len) * m.n_actions,
                  RewardDist::deterministic(0.0));

  auto set_p = [&](int s, int a, int s2) {
    m.transition[(static_cast<std::size_t>(s) * m.n_actions + a) * chain_len + s2] = 1.0;
  };
  // Entry-transition rewards carry the one-step discount (see header).
  RewardDist left_scaled;
  left_scaled.components = {{1.0, gamma * left_mean, gamma * left_std}};
  RewardDist right_scaled;
  for (const auto& c : right.components)
    right_scaled.components.push_back({c.weight, gamma * c.mean, gamma * c.std});

  for (int s = 0; s < chain_len; ++s) {
    if (m.is_terminal(s)) {
      for (int a = 0; a < m.n_actions; ++a) set_p(s, a, s);
      continue;
    }
    set_p(s, 0, s - 1);
    set_p(s, 1, s + 1);
    for (int a = 2; a < m.n_actions; ++a) set_p(s, a, s);
    if (s - 1 == 0) m.reward[static_cast<std::size_t>(s) * m.n_actions + 0] = left_scaled;
    if (s + 1 == chain_len - 1)
      m.reward[static_cast<std::size_t>(s) * m.n_actions + 1] = right_scaled;
  }

  double max_mean = 0.0;
  for (const auto& dist : m.reward)
    for (const auto& c : dist.components) max_mean = std::max(max_mean, std::abs(c.mean));
  m.rmax = max_mean > 0.0 ? max_mean : 1.0;
  return m;
}

int env_reset(const TabularMDP& mdp) { return mdp.start_state; }

double sample_reward(const RewardDist& dist, Rng& rng) {
  if (dist.components.empty()) throw std::invalid_argument("sample_reward: empty mixture");
  const double u = rng.uniform();
  double acc = 0.0;
  const RewardComponent* chosen = &dist.components.back();
  for (const auto& c : dist.components) {
    acc += c.weight;
    if (u < acc) {
      chosen = &c;
      break;
    }
  }
  if (chosen->std > 0.0) return chosen->mean + chosen->std * rng.normal();
  return chosen->mean;
}

Transition env_step(const TabularMDP& mdp, int state, int action, Rng& rng,
                    std::int64_t t) {
  if (state < 0 || state >= mdp.n_states)
    throw std::invalid_argument("env_step: state out of range");
  if (action < 0 || action >= mdp.n_actions)
    throw std::invalid_argument("env_step: action out of range");
  if (mdp.is_terminal(state))
    throw std::invalid_argument("env_step: cannot step from a terminal state");

  const double u = rng.uniform();
  double acc = 0.0;
  int next = -1;
  int last_positive = -1;
  for (int s2 = 0; s2 < mdp.n_states; ++s2) {
    const double p = mdp.p(state, action, s2);
    if (p > 0.0) last_positive = s2;
    acc += p;
    if (u < acc) {
      next = s2;
      break;
    }
  }
  if (next < 0) next = last_positive;  // guard against row sums just under 1
  if (next < 0) throw std::runtime_error("env_step: transition row is all zero");

  Transition tr;
  tr.state = state;
  tr.action = action;
  tr.next_state = next;
  tr.reward = sample_reward(mdp.reward_at(state, action), rng);
  tr.done = mdp.is_terminal(next);
  tr.t = t;
  return tr;
}

std::vector<std::string> mdp_validate(const TabularMDP& mdp) {
  std::vector<std::string> out;
  const auto S = static_cast<std::size_t>(mdp.n_states);
  const auto A = static_cast<std::size_t>(mdp.n_actions);
  if (mdp.n_states < 1) out.push_back("n_states must be >= 1");
  if (mdp.n_actions < 1) out.push_back("n_actions must be >= 1");
  if (!(mdp.gamma >= 0.0 && mdp.gamma < 1.0))
    out.push_back("gamma must lie in [0, 1), got " + fmt_double(mdp.gamma));
  if (!(mdp.rmax > 0.0)) out.push_back("rmax must be positive");
  if (mdp.n_states >= 1 && (mdp.start_state < 0 || mdp.start_state >= mdp.n_states))
    out.push_back("start_state out of range");
  if (mdp.transition.size() != S * A * S || mdp.reward.size() != S * A ||
      mdp.terminal.size() != S) {
    out.push_back("field sizes inconsistent with n_states/n_actions");
    return out;
  }

  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      const std::string where = " at (s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")";
      double row_sum = 0.0;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        const double p = mdp.p(s, a, s2);
        if (p < 0.0) out.push_back("negative transition probability" + where);
        row_sum += p;
      }
      if (std::abs(row_sum - 1.0) > 1e-9)
        out.push_back("transition row sums to " + fmt_double(row_sum) + where);

      const auto& dist = mdp.reward_at(s, a);
      if (dist.components.empty()) {
        out.push_back("empty reward mixture" + where);
        continue;
      }
      double wsum = 0.0;
      for (const auto& c : dist.components) {
        if (c.weight < 0.0) out.push_back("negative mixture weight" + where);
        if (c.std < 0.0) out.push_back("negative mixture std" + where);
        if (std::abs(c.mean) > mdp.rmax + 1e-12)
          out.push_back("reward component mean " + fmt_double(c.mean) +
                        " exceeds rmax bound" + where);
        wsum += c.weight;
      }
      if (std::abs(wsum - 1.0) > 1e-12)
        out.push_back("mixture weights sum to " + fmt_double(wsum) + where);

      if (mdp.is_terminal(s)) {
        if (std::abs(mdp.p(s, a, s) - 1.0) > 1e-9)
          out.push_back("terminal state does not self-loop" + where);
        if (reward_mean(dist) != 0.0 || reward_variance(dist) != 0.0)
          out.push_back("terminal state pays nonzero reward" + where);
      }
    }
  }
  return out;
}

TabularMDP parse_mdp_text(const std::string& text) {
  // Pass 1: split into trimmed, comment-free lines and locate the header.
  std::vector<std::pair<int, std::string>> lines;  // (line number, content)
  {
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto hash = raw.find('#');
      if (hash != std::string::npos) raw.erase(hash);
      const auto first = raw.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      const auto last = raw.find_last_not_of(" \t\r");
      lines.emplace_back(line_no, raw.substr(first, last - first + 1));
    }
  }

  auto tokenize = [](const std::string& line) {
    std::vector<std::string> toks;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) toks.push_back(tok);
    return toks;
  };

  TabularMDP m;
  bool have_header = false;
  int header_line = 0;
  for (const auto& [line_no, line] : lines) {
    const auto toks = tokenize(line);
    if (toks[0] != "mdp") continue;
    if (have_header)
      throw std::runtime_error("mdp file: duplicate header at line " + std::to_string(line_no));
    if (toks.size() != 5)
      throw std::runtime_error("mdp file: header needs 4 fields at line " +
                               std::to_string(line_no));
    m.n_states = parse_int_token(toks[1], line_no);
    m.n_actions = parse_int_token(toks[2], line_no);
    m.gamma = parse_double_token(toks[3], line_no);
    m.rmax = parse_double_token(toks[4], line_no);
    have_header = true;
    header_line = line_no;
  }
  if (!have_header) throw std::runtime_error("mdp file: missing 'mdp' header line");
  if (m.n_states < 1 || m.n_actions < 1)
    throw std::runtime_error("mdp file: non-positive dimensions at line " +
                             std::to_string(header_line));

  const auto S = static_cast<std::size_t>(m.n_states);
  const auto A = static_cast<std::size_t>(m.n_actions);
  m.transition.assign(S * A * S, 0.0);
  m.terminal.assign(S, 0);
  std::vector<RewardDist> rewards(S * A);  // components appended in line order
  std::vector<char> p_seen(S * A * S, 0);
  bool have_start = false;

  auto check_state = [&](int s, int line_no) {
    if (s < 0 || s >= m.n_states)
      throw std::runtime_error("mdp file: state index out of range at line " +
                               std::to_string(line_no));
  };
  auto check_action = [&](int a, int line_no) {
    if (a < 0 || a >= m.n_actions)
      throw std::runtime_error("mdp file: action index out of range at line " +
                               std::to_string(line_no));
  };

  for (const auto& [line_no, line] : lines) {
    const auto toks = tokenize(line);
    const std::string& kind = toks[0];
    if (kind == "mdp") continue;
    if (kind == "P") {
      if (toks.size() != 5)
        throw std::runtime_error("mdp file: P line needs 4 fields at line " +
                                 std::to_string(line_no));
      const int s = parse_int_token(toks[1], line_no);
      const int a = parse_int_token(toks[2], line_no);
      const int s2 = parse_int_token(toks[3], line_no);
      check_state(s, line_no);
      check_action(a, line_no);
      check_state(s2, line_no);
      const std::size_t idx = (static_cast<std::size_t>(s) * A + a) * S + s2;
      if (p_seen[idx])
        throw std::runtime_error("mdp file: duplicate transition entry at line " +
                                 std::to_string(line_no));
      p_seen[idx] = 1;
      m.transition[idx] = parse_double_token(toks[4], line_no);
    } else if (kind == "R") {
      if (toks.size() != 6)
        throw std::runtime_error("mdp file: R line needs 5 fields at line " +
                                 std::to_string(line_no));
      const int s = parse_int_token(toks[1], line_no);
      const int a = parse_int_token(toks[2], line_no);
      check_state(s, line_no);
      check_action(a, line_no);
      RewardComponent c;
      c.weight = parse_double_token(toks[3], line_no);
      c.mean = parse_double_token(toks[4], line_no);
      c.std = parse_double_token(toks[5], line_no);
      rewards[static_cast<std::size_t>(s) * A + a].components.push_back(c);
    } else if (kind == "terminal") {
      if (toks.size() != 2)
        throw std::runtime_error("mdp file: terminal line needs 1 field at line " +
                                 std::to_string(line_no));
      const int s = parse_int_token(toks[1], line_no);
      check_state(s, line_no);
      m.terminal[static_cast<std::size_t>(s)] = 1;
    } else if (kind == "start") {
      if (toks.size() != 2)
        throw std::runtime_error("mdp file: start line needs 1 field at line " +
                                 std::to_string(line_no));
      const int s = parse_int_token(toks[1], line_no);
      check_state(s, line_no);
      m.start_state = s;
      have_start = true;
    } else {
      throw std::runtime_error("mdp file: unknown directive '" + kind + "' at line " +
                               std::to_string(line_no));
    }
  }
  if (!have_start) m.start_state = 0;

  for (auto& dist : rewards)
    if (dist.components.empty()) dist = RewardDist::deterministic(0.0);
  m.reward = std::move(rewards);

  const auto violations = mdp_validate(m);
  if (!violations.empty()) {
    std::string msg = "mdp file: validation failed:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw std::runtime_error(msg);
  }
  return m;
}

std::string mdp_to_text(const TabularMDP& mdp) {
  std::vector<std::string> lines;
  lines.push_back("mdp " + std::to_string(mdp.n_states) + " " + std::to_string(mdp.n_actions) +
                  " " + fmt_double(mdp.gamma) + " " + fmt_double(mdp.rmax));
  lines.push_back("start " + std::to_string(mdp.start_state));
  for (int s = 0; s < mdp.n_states; ++s)
    if (mdp.is_terminal(s)) lines.push_back("terminal " + std::to_string(s));
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        const double p = mdp.p(s, a, s2);
        if (p != 0.0)
          lines.push_back("P " + std::to_string(s) + " " + std::to_string(a) + " " +
                          std::to_string(s2) + " " + fmt_double(p));
      }
      const auto& dist = mdp.reward_at(s, a);
      if (is_deterministic_zero(dist)) continue;
      for (const auto& c : dist.components)
        lines.push_back("R " + std::to_string(s) + " " + std::to_string(a) + " " +
                        fmt_double(c.weight) + " " + fmt_double(c.mean) + " " +
                        fmt_double(c.std));
    }
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& line : lines) {
    out += line;
    out += '\n';
  }
  return out;
}

TabularMDP load_mdp_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_mdp_file: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_mdp_text(buf.str());
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(e.what()) + " [" + path + "]");
  }
}

void save_mdp_file(const TabularMDP& mdp, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_mdp_file: cannot open " + path);
  out << mdp_to_text(mdp);
  if (!out) throw std::runtime_error("save_mdp_file: write failed for " + path);
}

}  // namespace pdboo
