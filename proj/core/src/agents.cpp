#include "pdboo/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pdboo/quantile.hpp"

namespace pdboo {

std::string agent_kind_name(AgentKind kind) {
  switch (kind) {
    case AgentKind::qr_eps_greedy: return "qr_eps_greedy";
    case AgentKind::dltv: return "dltv";
    case AgentKind::p_dltv: return "p_dltv";
    case AgentKind::pqr: return "pqr";
  }
  throw std::invalid_argument("agent_kind_name: unknown kind");
}

AgentKind agent_kind_from_name(const std::string& name) {
  if (name == "qr_eps_greedy") return AgentKind::qr_eps_greedy;
  if (name == "dltv") return AgentKind::dltv;
  if (name == "p_dltv") return AgentKind::p_dltv;
  if (name == "pqr") return AgentKind::pqr;
  throw std::invalid_argument("agent_kind_from_name: unknown agent kind '" + name + "'");
}

double eps_at(const EpsSchedule& schedule, std::int64_t t) {
  if (t < 1) throw std::invalid_argument("eps_at: t must be >= 1");
  if (schedule.decay_steps < 1)
    throw std::invalid_argument("eps_at: decay_steps must be >= 1");
  const double frac = std::min(
      1.0, static_cast<double>(t - 1) / static_cast<double>(schedule.decay_steps));
  return schedule.start + (schedule.end - schedule.start) * frac;
}

void validate_agent_config(const AgentConfig& cfg) {
  if (cfg.n_quantiles < 1)
    throw std::invalid_argument("agent config: n_quantiles must be >= 1");
  if (!(cfg.kappa > 0.0)) throw std::invalid_argument("agent config: kappa must be positive");
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("agent config: lr must be positive");
  if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0))
    throw std::invalid_argument("agent config: gamma must lie in [0, 1)");
  if (cfg.batch_size < 1) throw std::invalid_argument("agent config: batch_size must be >= 1");
  if (cfg.replay_capacity < static_cast<std::size_t>(cfg.batch_size))
    throw std::invalid_argument("agent config: replay_capacity must cover one batch");
  if (cfg.target_update_interval < 1)
    throw std::invalid_argument("agent config: target_update_interval must be >= 1");
  if (cfg.start_steps < 0) throw std::invalid_argument("agent config: start_steps must be >= 0");
  if (cfg.update_interval < 1)
    throw std::invalid_argument("agent config: update_interval must be >= 1");
  switch (cfg.kind) {
    case AgentKind::qr_eps_greedy:
      if (!(cfg.eps_schedule.start >= 0.0 && cfg.eps_schedule.start <= 1.0 &&
            cfg.eps_schedule.end >= 0.0 && cfg.eps_schedule.end <= 1.0))
        throw std::invalid_argument("agent config: eps bounds must lie in [0, 1]");
      if (cfg.eps_schedule.decay_steps < 1)
        throw std::invalid_argument("agent config: eps decay_steps must be >= 1");
      break;
    case AgentKind::dltv:
    case AgentKind::p_dltv:
      if (!(cfg.c > 0.0)) throw std::invalid_argument("agent config: c must be positive");
      if (cfg.n_quantiles % 2 != 0)
        throw std::invalid_argument(
            "agent config: upper-tail variance needs an even atom count");
      break;
    case AgentKind::pqr:
      if (!(cfg.delta_schedule.delta0 >= 0.0))
        throw std::invalid_argument("agent config: delta0 must be >= 0");
      if (!(cfg.dirichlet.beta > 0.0))
        throw std::invalid_argument("agent config: dirichlet beta must be positive");
      break;
  }
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : cap_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  buf_.reserve(std::min<std::size_t>(capacity, 1 << 20));
}

void ReplayBuffer::push(const Transition& t) {
  if (buf_.size() < cap_) {
    buf_.push_back(t);
  } else {
    buf_[next_] = t;
    next_ = (next_ + 1) % cap_;
  }
}

std::vector<Transition> ReplayBuffer::sample(int batch_size, Rng& rng) const {
  if (buf_.empty()) throw std::logic_error("ReplayBuffer::sample: buffer is empty");
  if (batch_size < 1) throw std::invalid_argument("ReplayBuffer::sample: batch_size must be >= 1");
  std::vector<Transition> out;
  out.reserve(static_cast<std::size_t>(batch_size));
  for (int i = 0; i < batch_size; ++i)
    out.push_back(buf_[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(buf_.size())))]);
  return out;
}

int act_eps_greedy(const QuantileTable& table, int s, double eps, Rng& rng) {
  if (!(eps >= 0.0 && eps <= 1.0))
    throw std::invalid_argument("act_eps_greedy: eps must lie in [0, 1]");
  const double u = rng.uniform();
  if (u < eps) return rng.uniform_int(table.n_actions);
  return greedy_action_mean(table, s);
}

namespace {

int bonus_argmax(const QuantileTable& table, int s, double coeff) {
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < table.n_actions; ++a) {
    const auto locs = table.at(s, a);
    const double val = dist_mean(locs) + coeff * std::sqrt(left_truncated_variance(locs));
    if (val > best_val) {
      best_val = val;
      best = a;
    }
  }
  return best;
}

}  // namespace

int act_dltv(const QuantileTable& table, int s, double c, std::int64_t t) {
  if (t < 1) throw std::invalid_argument("act_dltv: t must be >= 1");
  const double td = static_cast<double>(t);
  const double c_t = c * std::sqrt(std::log(td) / td);
  return bonus_argmax(table, s, c_t);
}

int act_pdltv(const QuantileTable& table, int s, double c, std::int64_t t, Rng& rng,
              double* c_t_out) {
  if (t < 1) throw std::invalid_argument("act_pdltv: t must be >= 1");
  const double td = static_cast<double>(t);
  const double z = rng.normal();  // fresh coefficient draw per decision
  const double c_t = c * z * std::sqrt(std::log(td) / td);
  if (c_t_out != nullptr) *c_t_out = c_t;
  return bonus_argmax(table, s, c_t);
}

PqrAction act_pqr(const QuantileTable& table, int s, double delta_t,
                  const DirichletParams& beta, XiScale xi_scale, double vmax, Rng& rng) {
  if (!(delta_t >= 0.0)) throw std::invalid_argument("act_pqr: delta_t must be >= 0");
  const auto x = sample_simplex(beta, table.n_quantiles, rng);
  const double scale = xi_scale == XiScale::alpha_certified
                           ? alpha_from_delta(delta_t, table.n_quantiles, vmax)
                           : delta_t;
  PqrAction res;
  res.xi = make_xi(x, scale);
  res.action = greedy_action(table, s, res.xi);
  return res;
}

std::vector<double> td_target(const QuantileTable& target_table, double r, int s_next,
                              int a_star, double gamma, bool done) {
  const auto n = static_cast<std::size_t>(target_table.n_quantiles);
  if (done) return std::vector<double>(n, r);
  const auto theta = target_table.at(s_next, a_star);
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = r + gamma * theta[static_cast<int>(j)];
  return out;
}

double qr_update_step(QuantileTable& table, const QuantileTable& target_table,
                      std::span<const Transition> batch, double gamma, double lr,
                      double kappa, const TargetActionSelector& selector) {
  if (batch.empty()) throw std::invalid_argument("qr_update_step: empty batch");
  const HuberParams hp{kappa};
  const int n = table.n_quantiles;
  std::vector<double> grad(static_cast<std::size_t>(n));
  double total_loss = 0.0;
  for (const auto& tr : batch) {
    const int a_star =
        tr.done ? 0
                : (selector ? selector(target_table, tr.next_state)
                            : greedy_action_mean(target_table, tr.next_state));
    const auto targets = td_target(target_table, tr.reward, tr.next_state, a_star, gamma, tr.done);
    const auto sorted = SortedTargets::build(targets);
    auto pred = table.at(tr.state, tr.action);
    total_loss += quantile_huber_fast(pred, sorted, hp, grad);
    for (int i = 0; i < n; ++i) pred[i] -= lr * grad[static_cast<std::size_t>(i)];
  }
  return total_loss / static_cast<double>(batch.size());
}

RunTrace train_run(const TabularMDP& env, const AgentConfig& cfg, std::int64_t total_steps,
                   std::uint64_t seed, std::int64_t eval_interval, std::int64_t episode_cap) {
  validate_agent_config(cfg);
  {
    const auto violations = mdp_validate(env);
    if (!violations.empty())
      throw std::invalid_argument("train_run: invalid environment: " + violations.front());
  }
  if (total_steps < 0) throw std::invalid_argument("train_run: total_steps must be >= 0");
  if (episode_cap < 1) throw std::invalid_argument("train_run: episode_cap must be >= 1");

  // Exact optimal policy, once, for the is_optimal_action column.
  const auto vi = q_value_iteration(env, 1e-10);
  std::vector<int> best_action(static_cast<std::size_t>(env.n_states), 0);
  for (int s = 0; s < env.n_states; ++s)
    for (int a = 1; a < env.n_actions; ++a)
      if (vi.at(s, a) > vi.at(s, best_action[static_cast<std::size_t>(s)]))
        best_action[static_cast<std::size_t>(s)] = a;

  Rng rng(seed);
  QuantileTable table = QuantileTable::zeros(env.n_states, env.n_actions, cfg.n_quantiles);
  QuantileTable target = table;
  ReplayBuffer buffer(cfg.replay_capacity);
  const double vmax = env.vmax();
  const std::string kind_name = agent_kind_name(cfg.kind);

  RunTrace out;
  out.rows.reserve(static_cast<std::size_t>(total_steps));
  int state = env_reset(env);
  int episode = 0;
  std::int64_t steps_in_episode = 0;

  for (std::int64_t t = 1; t <= total_steps; ++t) {
    double q_mean_best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < env.n_actions; ++a)
      q_mean_best = std::max(q_mean_best, dist_mean(table.at(state, a)));

    int action = 0;
    std::string criterion = kind_name;
    double bonus_or_gap = 0.0;
    if (t <= cfg.start_steps) {
      action = rng.uniform_int(env.n_actions);
      criterion = "random";
    } else {
      switch (cfg.kind) {
        case AgentKind::qr_eps_greedy: {
          const double eps = eps_at(cfg.eps_schedule, t);
          action = act_eps_greedy(table, state, eps, rng);
          bonus_or_gap = eps;
          break;
        }
        case AgentKind::dltv: {
          action = act_dltv(table, state, cfg.c, t);
          const double td = static_cast<double>(t);
          bonus_or_gap = cfg.c * std::sqrt(std::log(td) / td) *
                         std::sqrt(left_truncated_variance(table.at(state, action)));
          break;
        }
        case AgentKind::p_dltv: {
          double c_t = 0.0;
          action = act_pdltv(table, state, cfg.c, t, rng, &c_t);
          bonus_or_gap = c_t * std::sqrt(left_truncated_variance(table.at(state, action)));
          break;
        }
        case AgentKind::pqr: {
          const double delta_t = delta_at(cfg.delta_schedule, t);
          const auto res =
              act_pqr(table, state, delta_t, cfg.dirichlet, cfg.xi_scale, vmax, rng);
          action = res.action;
          bonus_or_gap = perturbation_gap(table.at(state, action), res.xi.weights);
          break;
        }
      }
    }

    const Transition tr = env_step(env, state, action, rng, t);
    buffer.push(tr);

    double loss = 0.0;
    if (t > cfg.start_steps && t % cfg.update_interval == 0 &&
        buffer.size() >= static_cast<std::size_t>(cfg.batch_size)) {
      const auto batch = buffer.sample(cfg.batch_size, rng);
      loss = qr_update_step(table, target, batch, cfg.gamma, cfg.lr, cfg.kappa);
    }
    if (t % cfg.target_update_interval == 0) target = table;

    out.rows.push_back({t, episode, state, action,
                        action == best_action[static_cast<std::size_t>(state)], tr.reward,
                        tr.done, loss, criterion, q_mean_best, bonus_or_gap});

    if (eval_interval > 0 && (t % eval_interval == 0 || t == total_steps)) {
      for (int a = 0; a < std::min(2, env.n_actions); ++a) {
        const std::string label =
            "s" + std::to_string(env.start_state) + "_a" + std::to_string(a);
        const auto theta = table.at(env.start_state, a);
        for (int j = 0; j < cfg.n_quantiles; ++j)
          out.snapshots.push_back({t, label, j, theta[j]});
      }
    }

    ++steps_in_episode;
    if (tr.done || steps_in_episode >= episode_cap) {
      state = env_reset(env);
      ++episode;
      steps_in_episode = 0;
    } else {
      state = tr.next_state;
    }
  }
  out.final_table = std::move(table);
  return out;
}

}  // namespace pdboo
