#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pdboo/dp.hpp"
#include "pdboo/mdp.hpp"
#include "pdboo/perturbation.hpp"
#include "pdboo/rng.hpp"

namespace pdboo {

/// Per-(s,a) quantile atom locations owned by a learning agent. Same layout as
/// the DP table; agents mutate it by loss subgradient steps.
using QuantileTable = DistTable;

enum class AgentKind { qr_eps_greedy, dltv, p_dltv, pqr };

/// Canonical short name used in configs, file names, and trace rows.
std::string agent_kind_name(AgentKind kind);
/// Inverse of agent_kind_name; throws std::invalid_argument on unknown names.
AgentKind agent_kind_from_name(const std::string& name);

/// Linear anneal from start to end over decay_steps decisions, then flat.
struct EpsSchedule {
  double start = 1.0;
  double end = 1e-2;
  std::int64_t decay_steps = 2500;
};

/// Exploration rate at global step t (1-based): start at t=1, end from
/// t = decay_steps+1 onward.
double eps_at(const EpsSchedule& schedule, std::int64_t t);

struct AgentConfig {
  AgentKind kind = AgentKind::qr_eps_greedy;
  int n_quantiles = 200;
  double kappa = 1.0;
  /// Tabular step size. Deliberately larger than typical network learning
  /// rates: each (s,a) cell is updated directly, so desk-scale step budgets
  /// need a coarser step.
  double lr = 0.05;
  double gamma = 0.9;
  EpsSchedule eps_schedule{};  // qr_eps_greedy only
  double c = 50.0;             // dltv / p_dltv bonus coefficient
  DeltaSchedule delta_schedule{500.0, 1e-3, DeltaSchedule::Form::power_law};  // pqr
  DirichletParams dirichlet{};                                                // pqr
  XiScale xi_scale = XiScale::raw_delta;                                      // pqr
  std::int64_t target_update_interval = 25;
  int batch_size = 64;
  std::size_t replay_capacity = 1000000;
  std::int64_t start_steps = 500;
  /// Gradient steps every this many environment steps once warmup ends.
  std::int64_t update_interval = 1;
};

/// Throws std::invalid_argument listing the first violated field constraint.
void validate_agent_config(const AgentConfig& cfg);

/// Fixed-capacity ring buffer with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(const Transition& t);
  std::size_t size() const { return buf_.size(); }
  std::size_t capacity() const { return cap_; }
  const Transition& at(std::size_t i) const { return buf_.at(i); }
  /// batch_size uniform draws; throws std::logic_error if empty.
  std::vector<Transition> sample(int batch_size, Rng& rng) const;

 private:
  std::vector<Transition> buf_;
  std::size_t cap_ = 0;
  std::size_t next_ = 0;  // overwrite cursor once full
};

/// ε-greedy over atom means: with probability eps a uniform action, otherwise
/// the mean argmax (lowest index on ties). Always consumes exactly one uniform
/// draw for the ε test, plus one more when exploring.
int act_eps_greedy(const QuantileTable& table, int s, double eps, Rng& rng);

/// Optimism-in-the-face-of-uncertainty choice: argmax over actions of
///   mean + c_t·sqrt(upper-tail variance),  c_t = c·sqrt(ln t / t).
/// t=1 gives c_t=0 (pure greedy). Throws on t < 1 or odd atom counts.
int act_dltv(const QuantileTable& table, int s, double c, std::int64_t t);

/// Randomized-coefficient variant: c_t = c·z·sqrt(ln t / t) with z a fresh
/// standard normal per decision, so negative (risk-averse) draws occur.
/// Optionally reports the drawn c_t for logging.
int act_pdltv(const QuantileTable& table, int s, double c, std::int64_t t, Rng& rng,
              double* c_t_out = nullptr);

struct PqrAction {
  int action = 0;
  PerturbationWeights xi;  // the weights actually used (for audit)
};

/// Perturbed-expectation choice: draws x ~ Dirichlet(beta), scales it into ξ
/// (raw_delta uses delta_t as the scale directly; alpha_certified converts it
/// through the gap certificate), and returns the ξ-weighted argmax.
PqrAction act_pqr(const QuantileTable& table, int s, double delta_t,
                  const DirichletParams& beta, XiScale xi_scale, double vmax, Rng& rng);

/// Distributional TD target [r + γ·θ_j(s_next, a_star)]_j, or N copies of r
/// when the transition ended the episode.
std::vector<double> td_target(const QuantileTable& target_table, double r, int s_next,
                              int a_star, double gamma, bool done);

/// Chooses the bootstrap action a* on the target table for a given next state.
using TargetActionSelector = std::function<int(const QuantileTable&, int)>;

/*!
 * One gradient step over a batch: per transition, a* comes from the selector
 * applied to the (frozen) target table — by default the plain mean argmax,
 * which is the behavior-policy-independent bootstrap all four agents share —
 * then θ(s,a) ← θ(s,a) − lr·∇ of the Huber quantile loss against the TD
 * target. Transitions are applied sequentially in batch order. Returns the
 * mean per-transition loss, each measured just before its own update.
 * Throws std::invalid_argument on an empty batch.
 */
double qr_update_step(QuantileTable& table, const QuantileTable& target_table,
                      std::span<const Transition> batch, double gamma, double lr,
                      double kappa, const TargetActionSelector& selector = nullptr);

/// One behavior decision per environment step.
struct TraceRow {
  std::int64_t t = 0;  // 1-based global step
  int episode = 0;
  int state = 0;
  int action = 0;
  bool is_optimal_action = false;  // action == mean-argmax of exact Q* at state
  double reward = 0.0;
  bool done = false;
  double loss = 0.0;  // 0 when no gradient step happened this step
  std::string criterion_kind;  // "random" during warmup, else the agent kind
  double q_mean_best = 0.0;    // max_a mean θ(s,a) at decision time
  /// Criterion-specific diagnostic: ε for qr_eps_greedy, the applied bonus for
  /// dltv/p_dltv, the realized perturbation gap for pqr, 0 during warmup.
  double bonus_or_gap = 0.0;
};

struct SnapshotRow {
  std::int64_t t = 0;
  std::string sa_label;  // "s<state>_a<action>"
  int theta_index = 0;
  double theta_value = 0.0;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  std::vector<SnapshotRow> snapshots;  // θ(start, action 0/1) every eval interval
  QuantileTable final_table;
};

/*!
 * Full training loop: act → env step → record → replay push → gradient step
 * (after warmup, every update_interval steps once a batch is available) →
 * target sync → snapshot → episode reset on done or at episode_cap steps.
 * The first start_steps decisions are uniform-random. Deterministic given
 * (env, cfg, total_steps, seed). is_optimal_action compares against the exact
 * mean-argmax policy computed once by value iteration.
 */
RunTrace train_run(const TabularMDP& env, const AgentConfig& cfg, std::int64_t total_steps,
                   std::uint64_t seed, std::int64_t eval_interval = 1000,
                   std::int64_t episode_cap = 100);

}  // namespace pdboo
