#pragma once

#include <span>
#include <vector>

namespace pdboo {

/*!
 * A return distribution represented by N equally weighted atoms; atom i
 * carries quantile level (2i+1)/(2N) (0-based midpoint levels). Locations are
 * kept in storage order: statistics that need sortedness sort internally.
 */
struct QuantileDist {
  std::vector<double> locations;

  QuantileDist() = default;
  explicit QuantileDist(std::vector<double> locs);

  int size() const { return static_cast<int>(locations.size()); }
  static QuantileDist zeros(int n);
};

struct HuberParams {
  double kappa = 1.0;
};

/// (1/N)·Σ θ_i.
double dist_mean(std::span<const double> locs);
double dist_mean(const QuantileDist& z);

/// (1/N)·Σ ξ_i·θ_i — the reweighted expectation. Sizes must match.
double xi_expectation(std::span<const double> locs, std::span<const double> xi);
double xi_expectation(const QuantileDist& z, std::span<const double> xi);

/// Huber penalty: x²/2 for |x| ≤ κ, else κ(|x| − κ/2).
double huber(double x, const HuberParams& p);

/*!
 * Asymmetric Huber quantile loss of predictions against target samples:
 *   Σ_i (1/M) Σ_j |τ̂_i − 1{x_ij<0}|·L_κ(x_ij),  x_ij = target_j − θ_i.
 * The outer sum over atoms is not averaged by default (algorithm-box form);
 * normalize=true divides by N (objective form). Throws on empty targets.
 */
double quantile_huber_loss(std::span<const double> pred,
                           std::span<const double> targets,
                           const HuberParams& p, bool normalize = false);

/*!
 * Subgradient of quantile_huber_loss w.r.t. each θ_i, with dL_κ/dx clamped to
 * [−κ, κ] and the indicator taken as 0 at a residual of exactly 0.
 */
std::vector<double> quantile_huber_grad(std::span<const double> pred,
                                        std::span<const double> targets,
                                        const HuberParams& p,
                                        bool normalize = false);

/*!
 * Targets pre-sorted with prefix sums, enabling the O((N+M)·log M) evaluation
 * used in training loops. quantile_huber_fast computes the same loss and
 * gradient as the plain routines (verified by property tests).
 */
struct SortedTargets {
  std::vector<double> values;     // ascending
  std::vector<double> prefix;     // prefix[k] = Σ values[0..k)
  std::vector<double> prefix_sq;  // prefix of squares

  static SortedTargets build(std::span<const double> targets);
};

/// Loss (algorithm-box normalization) and gradient in one sweep; grad_out must
/// have pred.size() elements.
double quantile_huber_fast(std::span<const double> pred, const SortedTargets& t,
                           const HuberParams& p, std::span<double> grad_out);

/*!
 * Upper-tail spread proxy: (1/(2N))·Σ_{i=N/2..N} (θ_{N/2} − θ_i)² over 1-based
 * indices, endpoints inclusive, locations taken in storage order. N must be
 * even (throws otherwise).
 */
double left_truncated_variance(std::span<const double> locs);
double left_truncated_variance(const QuantileDist& z);

/*!
 * Quantile-coupling W₂ between the atom representation and N(mu, sigma²):
 *   sqrt( (1/N)·Σ_i (sort(θ)_i − Φ⁻¹(τ̂_i; μ, σ))² ).
 * Discretization error is O(σ/N) and left uncorrected.
 */
double wasserstein2_to_gaussian(const QuantileDist& z, double mu, double sigma);

}  // namespace pdboo
