#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "oracles.hpp"
#include "pdboo/dp.hpp"
#include "pdboo/mdp.hpp"
#include "random_mdp.hpp"

using namespace pdboo;

namespace {

TabularMDP default_nchain() {
  return nchain_make(10.0, 0.1, RewardDist::half_half(5.0, 13.0, 0.1));
}

// Single non-terminal state with a deterministic self-loop reward of 1.
TabularMDP one_state_loop(double gamma) {
  TabularMDP m;
  m.n_states = 1;
  m.n_actions = 1;
  m.gamma = gamma;
  m.rmax = 1.0;
  m.start_state = 0;
  m.terminal = {0};
  m.transition = {1.0};
  m.reward = {RewardDist::deterministic(1.0)};
  return m;
}

PerturbationWeights unit_xi(int n) {
  PerturbationWeights xi;
  xi.weights.assign(static_cast<std::size_t>(n), 1.0);
  return xi;
}

}  // namespace

TEST_CASE("project_to_quantiles hand cases") {
  SUBCASE("point mass spreads to every atom") {
    ParticleSet p{{{7.5, 1.0}}};
    const auto z = project_to_quantiles(p, 4);
    REQUIRE(z.size() == 4);
    for (double v : z.locations) CHECK(v == 7.5);
  }
  SUBCASE("two equal atoms at N=2") {
    ParticleSet p{{{0.0, 0.5}, {1.0, 0.5}}};
    const auto z = project_to_quantiles(p, 2);
    CHECK(z.locations[0] == 0.0);
    CHECK(z.locations[1] == 1.0);
  }
  SUBCASE("left-continuous generalized inverse at exact thresholds") {
    // F(0) = 0.25 exactly; level 0.25 must map to 0, not 1.
    ParticleSet p{{{0.0, 0.25}, {1.0, 0.75}}};
    const auto z = project_to_quantiles(p, 2);
    CHECK(z.locations[0] == 0.0);
    CHECK(z.locations[1] == 1.0);
  }
  SUBCASE("unsorted input is sorted internally") {
    ParticleSet p{{{3.0, 0.25}, {1.0, 0.25}, {2.0, 0.25}, {0.0, 0.25}}};
    const auto z = project_to_quantiles(p, 4);
    CHECK(z.locations == std::vector<double>{0.0, 1.0, 2.0, 3.0});
  }
  SUBCASE("idempotent on equiprobable atoms at midpoint quantiles") {
    const auto q = oracle::gaussian_quantiles(64, 3.0, 2.0);
    ParticleSet p;
    for (double v : q) p.particles.push_back({v, 1.0 / 64.0});
    const auto z = project_to_quantiles(p, 64);
    CHECK(z.locations == q);
  }
  SUBCASE("empty set rejected") {
    ParticleSet p;
    CHECK_THROWS(project_to_quantiles(p, 4));
  }
}

TEST_CASE("discretize_reward: deterministic, Gaussian, discrete, mixture") {
  SUBCASE("deterministic reward is exact") {
    const auto p = discretize_reward(RewardDist::deterministic(3.25), 7);
    REQUIRE(p.particles.size() == 7);
    for (const auto& atom : p.particles) {
      CHECK(atom.value == 3.25);
      CHECK(std::abs(atom.weight - 1.0 / 7.0) <= 1e-15);
    }
  }
  SUBCASE("standard normal at M=2 sits at the quartiles") {
    RewardDist g;
    g.components = {{1.0, 0.0, 1.0}};
    const auto p = discretize_reward(g, 2);
    CHECK(std::abs(p.particles[0].value - (-0.6744897501960817)) <= 1e-10);
    CHECK(std::abs(p.particles[1].value - 0.6744897501960817) <= 1e-10);
  }
  SUBCASE("Gaussian atoms agree with the closed-form quantile route") {
    RewardDist g;
    g.components = {{1.0, 9.0, 0.09}};
    const auto p = discretize_reward(g, 64);
    for (int i = 0; i < 64; ++i) {
      const double want = 9.0 + 0.09 * oracle::phi_inv(oracle::tau_hat(i, 64));
      CHECK(std::abs(p.particles[static_cast<std::size_t>(i)].value - want) <= 1e-9);
    }
  }
  SUBCASE("discrete two-point mixture is exact") {
    RewardDist d;
    d.components = {{0.5, 1.0, 0.0}, {0.5, 2.0, 0.0}};
    const auto p = discretize_reward(d, 4);
    CHECK(p.particles[0].value == 1.0);
    CHECK(p.particles[1].value == 1.0);
    CHECK(p.particles[2].value == 2.0);
    CHECK(p.particles[3].value == 2.0);
  }
  SUBCASE("wide mixture mean is close to the mixture mean") {
    const auto p = discretize_reward(RewardDist::half_half(5.0, 13.0, 0.1), 64);
    double mean = 0.0;
    for (const auto& atom : p.particles) mean += atom.value;
    mean /= 64.0;
    CHECK(std::abs(mean - 9.0) <= 0.02);
    // Halves split around the two modes.
    CHECK(p.particles[31].value < 6.0);
    CHECK(p.particles[32].value > 12.0);
  }
  CHECK_THROWS(discretize_reward(RewardDist::deterministic(0.0), 0));
}

TEST_CASE("greedy_action: reductions, hand case, ties") {
  DistTable t = DistTable::zeros(1, 2, 2);
  t.at(0, 0)[0] = 8.0;
  t.at(0, 0)[1] = 8.0;
  t.at(0, 1)[0] = 0.0;
  t.at(0, 1)[1] = 16.0;
  PerturbationWeights skew{{0.0, 2.0}};
  CHECK(greedy_action(t, 0, skew) == 1);  // 16 beats 8
  CHECK(greedy_action(t, 0, unit_xi(2)) == 0);  // tie on means -> lowest index
  CHECK(greedy_action_mean(t, 0) == 0);

  // The xi == 1 reduction is exact at argmax level on random tables.
  Rng rng(5150);
  for (int rep = 0; rep < 1000; ++rep) {
    DistTable r = DistTable::zeros(3, 4, 8);
    for (auto& v : r.data) v = rng.uniform(-50.0, 50.0);
    for (int s = 0; s < 3; ++s) {
      CHECK(greedy_action(r, s, unit_xi(8)) == greedy_action_mean(r, s));
      // Independent argmax-of-means oracle.
      int best = 0;
      double best_mean = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < 4; ++a) {
        double mean = 0.0;
        for (double v : r.at(s, a)) mean += v;
        mean /= 8.0;
        if (mean > best_mean) {
          best_mean = mean;
          best = a;
        }
      }
      CHECK(greedy_action_mean(r, s) == best);
    }
  }
}

TEST_CASE("pdboo_apply: one-state fixed point") {
  const auto m = one_state_loop(0.5);
  const auto xi = unit_xi(8);
  DistTable t = DistTable::zeros(1, 1, 8);
  // Iterate from zeros: theta converges to r/(1-gamma) = 2 along exact dyadics.
  for (int it = 0; it < 80; ++it) t = pdboo_apply(t, xi, m, 16);
  for (double v : t.at(0, 0)) CHECK(std::abs(v - 2.0) <= 1e-12);
  // The fixed point maps to itself exactly.
  DistTable fp = DistTable::zeros(1, 1, 8);
  for (auto& v : fp.data) v = 2.0;
  const auto mapped = pdboo_apply(fp, xi, m, 16);
  CHECK(mapped.data == fp.data);
}

TEST_CASE("pdboo_apply on the chain from zeros reproduces the entry reward") {
  const auto m = default_nchain();
  DistTable t = DistTable::zeros(5, 6, 200);
  const auto out = pdboo_apply(t, unit_xi(200), m, 200);
  // gamma * 0 contributes nothing, so entry (s1, left) is exactly the
  // 200-atom discretization of the stored N(9, 0.09^2) (projection is
  // idempotent at matching resolution).
  const auto atoms = discretize_reward(m.reward_at(1, 0), 200);
  const auto span = out.at(1, 0);
  for (int i = 0; i < 200; ++i)
    CHECK(span[static_cast<std::size_t>(i)] == atoms.particles[static_cast<std::size_t>(i)].value);
  CHECK(std::abs(dist_mean(out.at(1, 0)) - 9.0) <= 0.01);
  // Terminal entries stay at zero; non-reward moves stay at zero.
  for (double v : out.at(0, 3)) CHECK(v == 0.0);
  for (double v : out.at(2, 4)) CHECK(v == 0.0);
}

TEST_CASE("pdboo_apply means follow the scalar backup within projection error") {
  Rng rng(777);
  for (int rep = 0; rep < 20; ++rep) {
    const auto m = testsupport::random_mdp(rng);
    const int n = 64, mr = 64;
    DistTable t = DistTable::zeros(m.n_states, m.n_actions, n);
    for (auto& v : t.data) v = rng.uniform(-5.0, 5.0);
    const auto x = sample_simplex(DirichletParams{0.05}, n, rng);
    const auto xi = make_xi(x, rng.uniform(0.0, 0.5));
    const auto out = pdboo_apply(t, xi, m, mr);
    for (int s = 0; s < m.n_states; ++s) {
      for (int a = 0; a < m.n_actions; ++a) {
        // Independent scalar backup with its own argmax and mean loops.
        double backup = reward_mean(m.reward_at(s, a));
        for (int s2 = 0; s2 < m.n_states; ++s2) {
          const double p = m.p(s, a, s2);
          if (p == 0.0) continue;
          int best = 0;
          double best_val = -std::numeric_limits<double>::infinity();
          for (int a2 = 0; a2 < m.n_actions; ++a2) {
            double val = 0.0;
            for (int i = 0; i < n; ++i)
              val += xi.weights[static_cast<std::size_t>(i)] * t.at(s2, a2)[static_cast<std::size_t>(i)];
            val /= n;
            if (val > best_val) {
              best_val = val;
              best = a2;
            }
          }
          double mean_next = 0.0;
          for (double v : t.at(s2, best)) mean_next += v;
          backup += m.gamma * p * (mean_next / n);
        }
        const double spread = 2.0 * (0.8 + 0.15 * 6.0 + m.gamma * 5.0);
        CHECK(std::abs(dist_mean(out.at(s, a)) - backup) <= 2.0 * spread / std::min(n, mr));
      }
    }
  }
}

TEST_CASE("pdboo_apply keeps first moments within the return bound") {
  const auto m = default_nchain();
  Rng rng(31337);
  DistTable t = DistTable::zeros(5, 6, 64);
  for (int it = 0; it < 50; ++it) {
    const auto x = sample_simplex(DirichletParams{0.05}, 64, rng);
    t = pdboo_apply(t, make_xi(x, 0.3), m, 32);
    for (int s = 0; s < 5; ++s) {
      for (int a = 0; a < 6; ++a) {
        double abs_mean = 0.0;
        for (double v : t.at(s, a)) abs_mean += std::abs(v);
        CHECK(abs_mean / 64.0 <= m.vmax() + 1e-9);
      }
    }
  }
}

TEST_CASE("pdboo_apply rejects mismatched shapes") {
  const auto m = default_nchain();
  DistTable wrong = DistTable::zeros(4, 6, 8);
  CHECK_THROWS(pdboo_apply(wrong, unit_xi(8), m, 8));
  DistTable ok = DistTable::zeros(5, 6, 8);
  CHECK_THROWS(pdboo_apply(ok, unit_xi(7), m, 8));
}

TEST_CASE("q_value_iteration: closed forms and the chain") {
  const auto loop = one_state_loop(0.5);
  const auto r1 = q_value_iteration(loop, 1e-12);
  CHECK(std::abs(r1.at(0, 0) - 2.0) <= 1e-9);

  const auto m = default_nchain();
  const auto res = q_value_iteration(m, 1e-9);
  CHECK(std::abs(res.at(2, 0) - 8.1) <= 1e-9);
  CHECK(std::abs(res.at(2, 1) - 7.29) <= 1e-9);
  for (int a = 2; a < 6; ++a) CHECK(std::abs(res.at(2, a) - 7.29) <= 1e-9);
  CHECK(std::abs(res.at(1, 0) - 9.0) <= 1e-9);
  CHECK(std::abs(res.at(3, 1) - 8.1) <= 1e-9);
  CHECK(std::abs(res.at(1, 1) - 7.29) <= 1e-9);  // gamma * V(s2)
  for (int a = 0; a < 6; ++a) {
    CHECK(res.at(0, a) == 0.0);
    CHECK(res.at(4, a) == 0.0);
  }
  // Contraction-rate iteration cap: ceil(ln(tol(1-gamma)/(2 Vmax))/ln gamma) = 271.
  CHECK(res.iterations <= 271);
}

TEST_CASE("mean_gap_bound: zero-schedule geometric closed form is exact") {
  DeltaSchedule zero{0.0, 1.0, DeltaSchedule::Form::power_law};
  CHECK(mean_gap_bound(1, 0.5, 1.0, zero, 1e-9) == 4.0);
  CHECK(mean_gap_bound(2, 0.5, 1.0, zero, 1e-9) == 2.0);
  CHECK(mean_gap_bound(3, 0.5, 1.0, zero, 1e-9) == 1.0);
  CHECK(mean_gap_bound(10, 0.5, 1.0, zero, 1e-9) == 0.0078125);
}

TEST_CASE("mean_gap_bound dominates an independent partial-sum oracle") {
  DeltaSchedule sch{0.5, 0.001, DeltaSchedule::Form::power_law};
  const double gamma = 0.9, vmax = 10.0;
  for (std::int64_t n : {1, 5, 50}) {
    // Literal double sum over k = n..2000 (a strict lower bound of the series).
    double partial = 0.0;
    for (std::int64_t k = n; k <= 2000; ++k) {
      double inner = 0.0;
      for (std::int64_t i = 1; i <= k; ++i)
        inner += std::pow(gamma, static_cast<double>(i)) *
                 (delta_at(sch, k + 2 - i) + delta_at(sch, k + 1 - i));
      partial += 2.0 * std::pow(gamma, static_cast<double>(k - 1)) * vmax + 2.0 * inner;
    }
    const double bound = mean_gap_bound(n, gamma, vmax, sch, 1e-9);
    CHECK(bound >= partial - 1e-6);
  }
}

TEST_CASE("mean_gap_bound is non-increasing in n") {
  DeltaSchedule sch{0.5, 0.001, DeltaSchedule::Form::power_law};
  double prev = mean_gap_bound(1, 0.9, 10.0, sch, 1e-9);
  for (std::int64_t n = 2; n <= 300; ++n) {
    const double cur = mean_gap_bound(n, 0.9, 10.0, sch, 1e-9);
    CHECK(cur <= prev);
    prev = cur;
  }
}

TEST_CASE("mean_gap_bound decays for fast schedules and rejects divergent ones") {
  DeltaSchedule fast{1.0, 1.0, DeltaSchedule::Form::power_law};
  const double b1 = mean_gap_bound(1, 0.5, 1.0, fast, 1e-9);
  const double b10 = mean_gap_bound(10, 0.5, 1.0, fast, 1e-9);
  const double b_far = mean_gap_bound(50000, 0.5, 1.0, fast, 1e-9);
  CHECK(b10 < b1);
  CHECK(b_far < b10 / 100.0);
  CHECK(b_far < 1e-3);

  DeltaSchedule cst{1.0, 1.0, DeltaSchedule::Form::constant};
  CHECK_THROWS(mean_gap_bound(1, 0.5, 1.0, cst, 1e-9));
}

TEST_CASE("dp_convergence_run: unperturbed limit matches value iteration") {
  const auto m = default_nchain();
  DpRunConfig cfg;
  cfg.n_quantiles = 200;
  cfg.m_reward = 64;
  cfg.schedule = {0.0, 1.0, DeltaSchedule::Form::power_law};
  cfg.n_iters = 120;
  cfg.xi_scale = XiScale::alpha_certified;
  Rng rng(606);
  DistTable final_table;
  const auto trace = dp_convergence_run(m, cfg, rng, &final_table);
  REQUIRE(trace.size() == 120);
  CHECK(trace.front().n == 1);
  CHECK(trace.back().n == 120);
  for (const auto& row : trace) CHECK(row.assumption_ok);
  // Mean contraction drives the gap to reward-discretization level.
  CHECK(trace.back().sup_gap <= 0.01);
  CHECK(trace.back().sup_gap <= 1e-6 * m.vmax() + projection_slack(m.vmax(), 200, 64));
  // sup_gap is monotone-dominated by the recorded bound everywhere.
  for (const auto& row : trace) CHECK(row.sup_gap <= row.bound);
  // Final table means agree with scalar value iteration.
  const auto vi = q_value_iteration(m, 1e-10);
  for (int s = 0; s < 5; ++s)
    for (int a = 0; a < 6; ++a)
      CHECK(std::abs(dist_mean(final_table.at(s, a)) - vi.at(s, a)) <= 0.01);
}

TEST_CASE("dp_convergence_run: perturbed run on a random MDP obeys the bound") {
  Rng gen(4242);
  const auto m = testsupport::random_mdp(gen);
  DpRunConfig cfg;
  cfg.n_quantiles = 64;
  cfg.m_reward = 32;
  cfg.schedule = {0.5, 0.001, DeltaSchedule::Form::power_law};
  cfg.n_iters = 50;
  Rng rng(11);
  const auto trace = dp_convergence_run(m, cfg, rng);
  for (const auto& row : trace) {
    CHECK(row.assumption_ok);
    CHECK(row.sup_gap <= row.bound);
  }
  // Determinism: rerun with the same seed gives the identical trace.
  Rng rng2(11);
  const auto trace2 = dp_convergence_run(m, cfg, rng2);
  REQUIRE(trace2.size() == trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    CHECK(trace[i].sup_gap == trace2[i].sup_gap);
    CHECK(trace[i].bound == trace2[i].bound);
  }
}

TEST_CASE("dp_convergence_run flags a divergent schedule") {
  const auto m = one_state_loop(0.5);
  DpRunConfig cfg;
  cfg.n_quantiles = 8;
  cfg.m_reward = 8;
  cfg.schedule = {0.5, 1.0, DeltaSchedule::Form::constant};
  cfg.n_iters = 10;
  Rng rng(3);
  const auto trace = dp_convergence_run(m, cfg, rng);
  for (const auto& row : trace) {
    CHECK_FALSE(row.assumption_ok);
    CHECK(std::isinf(row.bound));
  }
}
