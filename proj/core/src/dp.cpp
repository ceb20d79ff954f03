#include "pdboo/dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "pdboo/stats.hpp"

namespace pdboo {

DistTable DistTable::zeros(int n_states, int n_actions, int n_quantiles) {
  if (n_states < 1 || n_actions < 1 || n_quantiles < 1)
    throw std::invalid_argument("DistTable::zeros: dimensions must be positive");
  DistTable t;
  t.n_states = n_states;
  t.n_actions = n_actions;
  t.n_quantiles = n_quantiles;
  t.data.assign(static_cast<std::size_t>(n_states) * n_actions * n_quantiles, 0.0);
  return t;
}

QuantileDist project_to_quantiles(const ParticleSet& p, int n) {
  if (p.particles.empty())
    throw std::invalid_argument("project_to_quantiles: empty particle set");
  if (n < 1) throw std::invalid_argument("project_to_quantiles: n must be positive");
  std::vector<Particle> sorted = p.particles;
  std::sort(sorted.begin(), sorted.end(),
            [](const Particle& a, const Particle& b) { return a.value < b.value; });
  double total = 0.0;
  for (const auto& atom : sorted) total += atom.weight;
  if (!(total > 0.0))
    throw std::invalid_argument("project_to_quantiles: total weight must be positive");

  QuantileDist z;
  z.locations.resize(static_cast<std::size_t>(n));
  std::size_t idx = 0;
  double cum = sorted[0].weight;
  for (int i = 0; i < n; ++i) {
    const double threshold = midpoint_level(i, n) * total;
    while (cum < threshold && idx + 1 < sorted.size()) cum += sorted[++idx].weight;
    z.locations[static_cast<std::size_t>(i)] = sorted[idx].value;
  }
  return z;
}

ParticleSet discretize_reward(const RewardDist& dist, int m) {
  if (m < 1) throw std::invalid_argument("discretize_reward: m must be positive");
  if (dist.components.empty())
    throw std::invalid_argument("discretize_reward: empty mixture");
  const double atom_weight = 1.0 / static_cast<double>(m);
  ParticleSet out;
  out.particles.resize(static_cast<std::size_t>(m));

  bool all_point_masses = true;
  for (const auto& c : dist.components)
    if (c.std > 0.0) all_point_masses = false;

  if (all_point_masses) {
    // Discrete generalized inverse: exact values, no bisection noise.
    std::vector<RewardComponent> comps = dist.components;
    std::sort(comps.begin(), comps.end(),
              [](const RewardComponent& a, const RewardComponent& b) { return a.mean < b.mean; });
    double total = 0.0;
    for (const auto& c : comps) total += c.weight;
    std::size_t idx = 0;
    double cum = comps[0].weight;
    for (int i = 0; i < m; ++i) {
      const double threshold = midpoint_level(i, m) * total;
      while (cum < threshold && idx + 1 < comps.size()) cum += comps[++idx].weight;
      out.particles[static_cast<std::size_t>(i)] = {comps[idx].mean, atom_weight};
    }
    return out;
  }

  const auto mixture_cdf = [&](double x) {
    double f = 0.0;
    for (const auto& c : dist.components) f += c.weight * normal_cdf(x, c.mean, c.std);
    return f;
  };
  double lo0 = std::numeric_limits<double>::infinity();
  double hi0 = -std::numeric_limits<double>::infinity();
  for (const auto& c : dist.components) {
    lo0 = std::min(lo0, c.mean - 12.0 * c.std - 1.0);
    hi0 = std::max(hi0, c.mean + 12.0 * c.std + 1.0);
  }
  for (int i = 0; i < m; ++i) {
    const double tau = midpoint_level(i, m);
    double lo = lo0, hi = hi0;
    int it = 0;
    for (; it < 200 && hi - lo > 1e-12; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mixture_cdf(mid) < tau)
        lo = mid;
      else
        hi = mid;
    }
    if (hi - lo > 1e-12)
      throw std::runtime_error("discretize_reward: quantile bisection failed to converge");
    out.particles[static_cast<std::size_t>(i)] = {0.5 * (lo + hi), atom_weight};
  }
  return out;
}

int greedy_action(const DistTable& table, int s, const PerturbationWeights& xi) {
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < table.n_actions; ++a) {
    const double val = xi_expectation(table.at(s, a), xi.weights);
    if (val > best_val) {
      best_val = val;
      best = a;
    }
  }
  return best;
}

int greedy_action_mean(const DistTable& table, int s) {
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < table.n_actions; ++a) {
    const double val = dist_mean(table.at(s, a));
    if (val > best_val) {
      best_val = val;
      best = a;
    }
  }
  return best;
}

std::vector<std::vector<double>> discretize_all_rewards(const TabularMDP& mdp, int m) {
  std::vector<std::vector<double>> atoms;
  atoms.reserve(static_cast<std::size_t>(mdp.n_states) * mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      const auto p = discretize_reward(mdp.reward_at(s, a), m);
      std::vector<double> values;
      values.reserve(p.particles.size());
      for (const auto& atom : p.particles) values.push_back(atom.value);
      atoms.push_back(std::move(values));
    }
  }
  return atoms;
}

DistTable pdboo_apply(const DistTable& table, const PerturbationWeights& xi,
                      const TabularMDP& mdp,
                      const std::vector<std::vector<double>>& reward_atoms) {
  if (table.n_states != mdp.n_states || table.n_actions != mdp.n_actions)
    throw std::invalid_argument("pdboo_apply: table shape does not match the MDP");
  if (xi.size() != table.n_quantiles)
    throw std::invalid_argument("pdboo_apply: weight count does not match atom count");
  if (reward_atoms.size() != static_cast<std::size_t>(mdp.n_states) * mdp.n_actions)
    throw std::invalid_argument("pdboo_apply: reward atom table has the wrong shape");

  const int n = table.n_quantiles;
  const double gamma = mdp.gamma;
  DistTable out = DistTable::zeros(mdp.n_states, mdp.n_actions, n);

  // One greedy choice per next state, shared by every (s,a).
  std::vector<int> a_star(static_cast<std::size_t>(mdp.n_states));
  for (int s2 = 0; s2 < mdp.n_states; ++s2)
    a_star[static_cast<std::size_t>(s2)] = greedy_action(table, s2, xi);

  ParticleSet scratch;
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      const auto& atoms = reward_atoms[static_cast<std::size_t>(s) * mdp.n_actions + a];
      const std::size_t m = atoms.size();
      scratch.particles.clear();
      if (mdp.is_terminal(s)) {
        const double w = 1.0 / static_cast<double>(m);
        for (const double r : atoms) scratch.particles.push_back({r, w});
      } else {
        for (int s2 = 0; s2 < mdp.n_states; ++s2) {
          const double p = mdp.p(s, a, s2);
          if (p == 0.0) continue;
          const auto next = table.at(s2, a_star[static_cast<std::size_t>(s2)]);
          const double w = p / (static_cast<double>(m) * static_cast<double>(n));
          for (const double r : atoms)
            for (const double theta : next) scratch.particles.push_back({r + gamma * theta, w});
        }
      }
      const auto projected = project_to_quantiles(scratch, n);
      std::copy(projected.locations.begin(), projected.locations.end(), out.at(s, a).begin());
    }
  }
  return out;
}

DistTable pdboo_apply(const DistTable& table, const PerturbationWeights& xi,
                      const TabularMDP& mdp, int m_reward) {
  return pdboo_apply(table, xi, mdp, discretize_all_rewards(mdp, m_reward));
}

ValueIterationResult q_value_iteration(const TabularMDP& mdp, double tol) {
  if (!(mdp.gamma >= 0.0 && mdp.gamma < 1.0))
    throw std::invalid_argument("q_value_iteration: gamma must lie in [0, 1)");
  if (!(tol > 0.0)) throw std::invalid_argument("q_value_iteration: tol must be positive");
  const auto S = static_cast<std::size_t>(mdp.n_states);
  const auto A = static_cast<std::size_t>(mdp.n_actions);
  std::vector<double> mean_r(S * A);
  for (std::size_t k = 0; k < S * A; ++k) mean_r[k] = reward_mean(mdp.reward[k]);

  ValueIterationResult res;
  res.n_actions = mdp.n_actions;
  res.q.assign(S * A, 0.0);
  std::vector<double> next(S * A, 0.0);
  std::vector<double> v(S, 0.0);
  const int max_iters = 1000000;
  for (res.iterations = 0; res.iterations < max_iters; ) {
    for (int s = 0; s < mdp.n_states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < mdp.n_actions; ++a)
        best = std::max(best, res.q[static_cast<std::size_t>(s) * A + a]);
      v[static_cast<std::size_t>(s)] = best;
    }
    double change = 0.0;
    for (int s = 0; s < mdp.n_states; ++s) {
      for (int a = 0; a < mdp.n_actions; ++a) {
        const std::size_t k = static_cast<std::size_t>(s) * A + a;
        double backup = mean_r[k];
        if (!mdp.is_terminal(s)) {
          double ev = 0.0;
          for (int s2 = 0; s2 < mdp.n_states; ++s2) {
            const double p = mdp.p(s, a, s2);
            if (p != 0.0) ev += p * v[static_cast<std::size_t>(s2)];
          }
          backup += mdp.gamma * ev;
        }
        next[k] = backup;
        change = std::max(change, std::abs(backup - res.q[k]));
      }
    }
    res.q.swap(next);
    ++res.iterations;
    if (change < tol) break;
  }
  return res;
}

double projection_slack(double vmax, int n_quantiles, int m_reward) {
  return 4.0 * vmax * (1.0 / n_quantiles + 1.0 / m_reward);
}

namespace {

// Upper bound on the schedule tail Σ_{t >= m} Δ_t (term at m plus integral).
double schedule_tail_bound(const DeltaSchedule& schedule, double m) {
  if (schedule.delta0 <= 0.0) return 0.0;
  if (schedule.form != DeltaSchedule::Form::power_law) return 0.0;  // summable only when ~0
  return schedule.delta0 *
         (std::pow(m, -(1.0 + schedule.epsilon)) +
          std::pow(m, -schedule.epsilon) / schedule.epsilon);
}

}  // namespace

double mean_gap_bound(std::int64_t n, double gamma, double vmax,
                      const DeltaSchedule& schedule, double tail_tol) {
  if (n < 1) throw std::invalid_argument("mean_gap_bound: n must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("mean_gap_bound: gamma must lie in [0, 1)");
  if (!(vmax > 0.0)) throw std::invalid_argument("mean_gap_bound: vmax must be positive");
  (void)tail_tol;  // fixed-cap truncation; see header
  if (!check_summability(schedule, 1, 1e-30).summable)
    throw std::domain_error("mean_gap_bound: schedule is not summable, no finite bound exists");

  const std::int64_t cap = std::max<std::int64_t>(n + 2000, 10000);
  // delta[t], t = 1..cap+2; inner sums via the recurrences
  //   c_k = Σ_{i=1..k} γ^i Δ_{k+1−i},  d_k = Σ_{i=1..k} γ^i Δ_{k+2−i}.
  std::vector<double> delta(static_cast<std::size_t>(cap) + 3, 0.0);
  for (std::int64_t t = 1; t <= cap + 2; ++t)
    delta[static_cast<std::size_t>(t)] = delta_at(schedule, t);
  std::vector<double> c(static_cast<std::size_t>(cap) + 1, 0.0);
  std::vector<double> d(static_cast<std::size_t>(cap) + 1, 0.0);
  c[1] = gamma * delta[1];
  d[1] = gamma * delta[2];
  for (std::int64_t k = 1; k < cap; ++k) {
    c[static_cast<std::size_t>(k + 1)] =
        gamma * (delta[static_cast<std::size_t>(k + 1)] + c[static_cast<std::size_t>(k)]);
    d[static_cast<std::size_t>(k + 1)] =
        gamma * (delta[static_cast<std::size_t>(k + 2)] + d[static_cast<std::size_t>(k)]);
  }

  // Majorant for everything past the cap (over-estimates, never under):
  //   Σ_{k>K} 2γ^{k−1}V ≤ 2V γ^K/(1−γ), and the Δ parts are bounded by
  //   swapping sums and applying the schedule tail bound.
  double tail = 2.0 * vmax * std::pow(gamma, static_cast<double>(cap)) / (1.0 - gamma);
  double dsum = 0.0;
  double g = 1.0;
  for (std::int64_t i = 1; i <= cap + 1; ++i) {
    g *= gamma;
    if (g == 0.0) break;
    const double m1 = static_cast<double>(std::max<std::int64_t>(cap + 2 - i, 1));
    const double m2 = static_cast<double>(std::max<std::int64_t>(cap + 3 - i, 1));
    dsum += g * (schedule_tail_bound(schedule, m1) + schedule_tail_bound(schedule, m2));
  }
  dsum += 2.0 * schedule_tail_bound(schedule, 1.0) *
          std::pow(gamma, static_cast<double>(cap + 2)) / (1.0 - gamma);
  tail += 2.0 * dsum;

  // Tail-first accumulation: with a shared cap this makes the bound exactly
  // non-increasing in n (adding non-negative heads can only grow the sum).
  double acc = tail;
  for (std::int64_t k = cap; k >= n; --k) {
    const double term = 2.0 * std::pow(gamma, static_cast<double>(k - 1)) * vmax +
                        2.0 * (c[static_cast<std::size_t>(k)] + d[static_cast<std::size_t>(k)]);
    acc += term;
  }
  return acc;
}

std::vector<DpTraceRow> dp_convergence_run(const TabularMDP& mdp, const DpRunConfig& cfg,
                                           Rng& rng, DistTable* final_table) {
  {
    const auto violations = mdp_validate(mdp);
    if (!violations.empty())
      throw std::invalid_argument("dp_convergence_run: invalid MDP: " + violations.front());
  }
  if (cfg.n_iters < 1) throw std::invalid_argument("dp_convergence_run: n_iters must be >= 1");

  const double vmax = mdp.vmax();
  const auto atoms = discretize_all_rewards(mdp, cfg.m_reward);
  const auto vi = q_value_iteration(mdp, 1e-12);
  const bool assumption_ok = check_summability(cfg.schedule, 1, 1e-12).summable;
  const double slack = projection_slack(vmax, cfg.n_quantiles, cfg.m_reward);

  DistTable z = DistTable::zeros(mdp.n_states, mdp.n_actions, cfg.n_quantiles);
  std::vector<DpTraceRow> trace;
  trace.reserve(static_cast<std::size_t>(cfg.n_iters));
  for (std::int64_t n = 1; n <= cfg.n_iters; ++n) {
    const double delta = delta_at(cfg.schedule, n);
    const double alpha = cfg.xi_scale == XiScale::alpha_certified
                             ? alpha_from_delta(delta, cfg.n_quantiles, vmax)
                             : delta;
    const auto x = sample_simplex(cfg.dirichlet, cfg.n_quantiles, rng);
    const auto xi = make_xi(x, alpha);
    z = pdboo_apply(z, xi, mdp, atoms);

    double sup_gap = 0.0;
    for (int s = 0; s < mdp.n_states; ++s) {
      for (int a = 0; a < mdp.n_actions; ++a) {
        double abs_mean = 0.0;
        for (const double v : z.at(s, a)) abs_mean += std::abs(v);
        abs_mean /= cfg.n_quantiles;
        if (abs_mean > vmax + 1e-9)
          throw std::runtime_error(
              "dp_convergence_run: first-moment regularity breached at (s=" +
              std::to_string(s) + ", a=" + std::to_string(a) + ", n=" + std::to_string(n) +
              "): " + std::to_string(abs_mean) + " > " + std::to_string(vmax));
        sup_gap = std::max(sup_gap, std::abs(dist_mean(z.at(s, a)) - vi.at(s, a)));
      }
    }
    const double bound =
        assumption_ok
            ? mean_gap_bound(n, mdp.gamma, vmax, cfg.schedule, 1e-9) + slack
            : std::numeric_limits<double>::infinity();
    trace.push_back({n, sup_gap, bound, assumption_ok});
  }
  if (final_table != nullptr) *final_table = std::move(z);
  return trace;
}

}  // namespace pdboo
