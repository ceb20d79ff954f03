#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pdboo/rng.hpp"

namespace pdboo {

/// One mixture component of a reward distribution.
struct RewardComponent {
  double weight = 1.0;
  double mean = 0.0;
  double std = 0.0;
};

/*!
 * Gaussian-mixture reward. A deterministic reward is a single component with
 * std = 0. Weights are non-negative and sum to 1 within 1e-12.
 */
struct RewardDist {
  std::vector<RewardComponent> components;

  static RewardDist deterministic(double value);
  /// Two equally weighted Gaussians.
  static RewardDist half_half(double mean_a, double mean_b, double std);
};

/// Mixture mean Σ w_i μ_i.
double reward_mean(const RewardDist& dist);
/// Mixture variance Σ w_i (σ_i² + μ_i²) − mean².
double reward_variance(const RewardDist& dist);

struct Transition {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;
  bool done = false;
  std::int64_t t = 0;
};

/*!
 * Finite MDP with tabular transitions and Gaussian-mixture rewards.
 * Immutable after construction; shareable across threads.
 */
struct TabularMDP {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> transition;  // [s*A*S + a*S + s'] row-stochastic in s'
  std::vector<RewardDist> reward;  // [s*A + a]
  double gamma = 0.0;
  std::vector<char> terminal;  // per state
  int start_state = 0;
  double rmax = 0.0;  // bound on |reward component means|

  double p(int s, int a, int s2) const {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
  }
  const RewardDist& reward_at(int s, int a) const {
    return reward[static_cast<std::size_t>(s) * n_actions + a];
  }
  bool is_terminal(int s) const { return terminal[static_cast<std::size_t>(s)] != 0; }
  /// Return-scale bound rmax / (1 − gamma).
  double vmax() const { return rmax / (1.0 - gamma); }
};

/*!
 * Chain of `chain_len` states (odd, ≥ 3) with both ends terminal and the
 * start in the middle. Action 0 moves left, action 1 moves right, actions
 * 2..2+n_noop−1 stay put; all moves are deterministic. A reward is paid only
 * on the transition that enters an end state.
 *
 * `left_mean/left_std` and `right` describe the end rewards as values
 * received one step after entry; the stored entry-transition distributions
 * are those values scaled by gamma, so the realized discounted return of the
 * two-step path from the start equals gamma² times the nominal draw.
 * rmax is set to the largest |stored component mean|.
 */
TabularMDP nchain_make(double left_mean, double left_std, const RewardDist& right,
                       int chain_len = 5, int n_noop = 4, double gamma = 0.9);

/// Start state (stateless; the MDP itself holds no cursor).
int env_reset(const TabularMDP& mdp);

/*!
 * Sample one step: next_state ~ P(·|s,a), reward ~ reward_at(s,a),
 * done = terminal(next_state). Throws when stepping from a terminal state or
 * out-of-range action. `t` is copied into the returned Transition.
 */
Transition env_step(const TabularMDP& mdp, int state, int action, Rng& rng,
                    std::int64_t t = 0);

/// Draw from the mixture: pick a component by weight, then add std·z. The
/// Gaussian draw is skipped when the chosen component has std = 0.
double sample_reward(const RewardDist& dist, Rng& rng);

/// All invariant violations, each as a human-readable line; empty means ok.
std::vector<std::string> mdp_validate(const TabularMDP& mdp);

/*!
 * Line-oriented MDP description:
 *   mdp <n_states> <n_actions> <gamma> <rmax>
 *   P <s> <a> <s'> <prob>        (unlisted entries are 0)
 *   R <s> <a> <weight> <mean> <std>   (repeat for mixture components;
 *                                      omitted (s,a) means deterministic 0)
 *   terminal <s>
 *   start <s>
 * `#` starts a comment. Canonical serialization prints shortest round-trip
 * decimals and sorts all lines lexicographically, so canonical files
 * round-trip byte-for-byte.
 */
TabularMDP parse_mdp_text(const std::string& text);
std::string mdp_to_text(const TabularMDP& mdp);

/// parse_mdp_text over a file; parse errors carry line numbers, and the
/// result must pass mdp_validate.
TabularMDP load_mdp_file(const std::string& path);
void save_mdp_file(const TabularMDP& mdp, const std::string& path);

}  // namespace pdboo
