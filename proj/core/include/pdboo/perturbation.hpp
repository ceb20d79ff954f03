#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pdboo/quantile.hpp"
#include "pdboo/rng.hpp"

namespace pdboo {

/*!
 * Multiplicative reweighting of the N quantile atoms. Valid weights are
 * non-negative and average to 1 (Σξ_i = N within 1e-9), so that reweighted
 * expectations stay expectations.
 */
struct PerturbationWeights {
  std::vector<double> weights;

  int size() const { return static_cast<int>(weights.size()); }
};

/// Decaying bound on the admissible expectation gap at optimization step t.
struct DeltaSchedule {
  enum class Form {
    power_law,          // delta0 * t^-(1+epsilon); summable for epsilon > 0
    constant,           // delta0 at every t; non-summable unless delta0 ~ 0
    sqrt_log_t_over_t,  // delta0 * sqrt(ln t / t), 0 at t = 1; non-summable
  };

  double delta0 = 0.0;
  double epsilon = 1e-3;  // only meaningful for power_law
  Form form = Form::power_law;
};

/// Symmetric Dirichlet concentration shared by all N components.
struct DirichletParams {
  double beta = 0.05;
};

/// How an agent converts the step budget Δ_t into the mixing coefficient:
/// use Δ_t directly, or divide by (N−1)·V_max so the expectation gap is
/// provably within Δ_t.
enum class XiScale { raw_delta, alpha_certified };

/// Δ at step t (t ≥ 1; throws on t = 0).
double delta_at(const DeltaSchedule& schedule, std::int64_t t);

/*!
 * One draw from the symmetric Dirichlet over the N-simplex, via N Gamma(β, 1)
 * variates normalized by their sum. All-zero draws (possible in floating
 * point for tiny β) are retried a bounded number of times, then throw.
 */
std::vector<double> sample_simplex(const DirichletParams& params, int n, Rng& rng);

/// Largest mixing coefficient certified to keep the expectation gap within
/// delta: delta / ((N−1)·vmax). N ≥ 2, vmax > 0.
double alpha_from_delta(double delta, int n, double vmax);

/*!
 * Build weights from a simplex point: ξ'_i = max(1 + α(N·x_i − 1), 0), then
 * ξ_i = N·ξ'_i / Σξ'_j. The clamp and renormalization are no-ops for α ≤ 1.
 * Throws if every ξ'_i clamps to zero (requires invalid simplex input).
 */
PerturbationWeights make_xi(std::span<const double> x, double alpha);

/// |E[Z] − E_ξ[Z]|: how far the reweighting moves the mean.
double perturbation_gap(const QuantileDist& z, const PerturbationWeights& xi);
double perturbation_gap(std::span<const double> locs, std::span<const double> xi);

struct SummabilityReport {
  bool summable = false;
  double partial_sum = 0.0;                // Σ_{t=1..horizon} Δ_t
  std::optional<double> tail_bound;        // analytic bound on Σ_{t>horizon} Δ_t
};

/*!
 * Classify Σ_t Δ_t analytically by schedule form (numeric extrapolation
 * cannot distinguish slow divergence): power_law converges, constant and
 * sqrt_log_t_over_t diverge unless delta0 ≤ tol (an effectively-zero
 * schedule). partial_sum is always the exact finite sum to `horizon`;
 * tail_bound is Δ₀·horizon^−ε/ε for convergent power_law.
 */
SummabilityReport check_summability(const DeltaSchedule& schedule, std::int64_t horizon,
                                    double tol);

}  // namespace pdboo
