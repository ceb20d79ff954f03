#include "pdboo/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pdboo/stats.hpp"

namespace pdboo {

QuantileDist::QuantileDist(std::vector<double> locs) : locations(std::move(locs)) {
  if (locations.empty())
    throw std::invalid_argument("QuantileDist: needs at least one atom");
}

QuantileDist QuantileDist::zeros(int n) {
  if (n <= 0) throw std::invalid_argument("QuantileDist::zeros: n must be positive");
  QuantileDist z;
  z.locations.assign(static_cast<std::size_t>(n), 0.0);
  return z;
}

double dist_mean(std::span<const double> locs) {
  if (locs.empty()) throw std::invalid_argument("dist_mean: empty distribution");
  double sum = 0.0;
  for (double v : locs) sum += v;
  return sum / static_cast<double>(locs.size());
}

double dist_mean(const QuantileDist& z) { return dist_mean(std::span<const double>(z.locations)); }

double xi_expectation(std::span<const double> locs, std::span<const double> xi) {
  if (locs.empty()) throw std::invalid_argument("xi_expectation: empty distribution");
  if (locs.size() != xi.size())
    throw std::invalid_argument("xi_expectation: weight/atom size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < locs.size(); ++i) sum += xi[i] * locs[i];
  return sum / static_cast<double>(locs.size());
}

double xi_expectation(const QuantileDist& z, std::span<const double> xi) {
  return xi_expectation(std::span<const double>(z.locations), xi);
}

double huber(double x, const HuberParams& p) {
  if (p.kappa <= 0.0) throw std::invalid_argument("huber: kappa must be positive");
  const double a = std::abs(x);
  if (a <= p.kappa) return 0.5 * x * x;
  return p.kappa * (a - 0.5 * p.kappa);
}

double quantile_huber_loss(std::span<const double> pred,
                           std::span<const double> targets, const HuberParams& p,
                           bool normalize) {
  if (pred.empty()) throw std::invalid_argument("quantile_huber_loss: empty prediction");
  if (targets.empty()) throw std::invalid_argument("quantile_huber_loss: empty targets");
  const int n = static_cast<int>(pred.size());
  const double inv_m = 1.0 / static_cast<double>(targets.size());
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double tau = midpoint_level(i, n);
    double acc = 0.0;
    for (double t : targets) {
      const double x = t - pred[static_cast<std::size_t>(i)];
      const double weight = (x < 0.0) ? 1.0 - tau : tau;
      acc += weight * huber(x, p);
    }
    total += acc * inv_m;
  }
  if (normalize) total /= static_cast<double>(n);
  return total;
}

std::vector<double> quantile_huber_grad(std::span<const double> pred,
                                        std::span<const double> targets,
                                        const HuberParams& p, bool normalize) {
  if (pred.empty()) throw std::invalid_argument("quantile_huber_grad: empty prediction");
  if (targets.empty()) throw std::invalid_argument("quantile_huber_grad: empty targets");
  const int n = static_cast<int>(pred.size());
  const double inv_m = 1.0 / static_cast<double>(targets.size());
  std::vector<double> grad(pred.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    const double tau = midpoint_level(i, n);
    double acc = 0.0;
    for (double t : targets) {
      const double x = t - pred[static_cast<std::size_t>(i)];
      const double weight = (x < 0.0) ? 1.0 - tau : tau;
      acc += weight * std::clamp(x, -p.kappa, p.kappa);
    }
    grad[static_cast<std::size_t>(i)] = -acc * inv_m;
    if (normalize) grad[static_cast<std::size_t>(i)] /= static_cast<double>(n);
  }
  return grad;
}

SortedTargets SortedTargets::build(std::span<const double> targets) {
  if (targets.empty()) throw std::invalid_argument("SortedTargets: empty targets");
  SortedTargets st;
  st.values.assign(targets.begin(), targets.end());
  std::sort(st.values.begin(), st.values.end());
  st.prefix.resize(st.values.size() + 1, 0.0);
  st.prefix_sq.resize(st.values.size() + 1, 0.0);
  for (std::size_t k = 0; k < st.values.size(); ++k) {
    st.prefix[k + 1] = st.prefix[k] + st.values[k];
    st.prefix_sq[k + 1] = st.prefix_sq[k] + st.values[k] * st.values[k];
  }
  return st;
}

double quantile_huber_fast(std::span<const double> pred, const SortedTargets& t,
                           const HuberParams& p, std::span<double> grad_out) {
  if (pred.empty()) throw std::invalid_argument("quantile_huber_fast: empty prediction");
  if (t.values.empty()) throw std::invalid_argument("quantile_huber_fast: empty targets");
  if (grad_out.size() != pred.size())
    throw std::invalid_argument("quantile_huber_fast: grad_out size mismatch");
  const int n = static_cast<int>(pred.size());
  const std::size_t m = t.values.size();
  const double inv_m = 1.0 / static_cast<double>(m);
  const double kappa = p.kappa;
  if (kappa <= 0.0) throw std::invalid_argument("quantile_huber_fast: kappa must be positive");

  const auto begin = t.values.begin();
  const auto end = t.values.end();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double tau = midpoint_level(i, n);
    const double theta = pred[static_cast<std::size_t>(i)];
    // Targets split by residual x = target − θ into four bands:
    //   [0, i0): x < −κ (linear, weight 1−τ)   [i0, i1): −κ ≤ x < 0 (quadratic, 1−τ)
    //   [i1, i2): 0 ≤ x ≤ κ (quadratic, τ)     [i2, m): x > κ (linear, τ)
    const std::size_t i0 =
        static_cast<std::size_t>(std::lower_bound(begin, end, theta - kappa) - begin);
    const std::size_t i1 = static_cast<std::size_t>(std::lower_bound(begin, end, theta) - begin);
    const std::size_t i2 =
        static_cast<std::size_t>(std::upper_bound(begin, end, theta + kappa) - begin);

    const double cnt_a = static_cast<double>(i0);
    const double sum_a = t.prefix[i0];
    const double cnt_b = static_cast<double>(i1 - i0);
    const double sum_b = t.prefix[i1] - t.prefix[i0];
    const double sq_b = t.prefix_sq[i1] - t.prefix_sq[i0];
    const double cnt_c = static_cast<double>(i2 - i1);
    const double sum_c = t.prefix[i2] - t.prefix[i1];
    const double sq_c = t.prefix_sq[i2] - t.prefix_sq[i1];
    const double cnt_d = static_cast<double>(m - i2);
    const double sum_d = t.prefix[m] - t.prefix[i2];

    const double wl = 1.0 - tau;  // weight left of θ
    const double loss_a = wl * kappa * (cnt_a * (theta - 0.5 * kappa) - sum_a);
    const double loss_b = wl * 0.5 * (sq_b - 2.0 * theta * sum_b + cnt_b * theta * theta);
    const double loss_c = tau * 0.5 * (sq_c - 2.0 * theta * sum_c + cnt_c * theta * theta);
    const double loss_d = tau * kappa * (sum_d - cnt_d * (theta + 0.5 * kappa));
    total += (loss_a + loss_b + loss_c + loss_d) * inv_m;

    const double grad_a = wl * kappa * cnt_a;
    const double grad_b = wl * (cnt_b * theta - sum_b);
    const double grad_c = -tau * (sum_c - cnt_c * theta);
    const double grad_d = -tau * kappa * cnt_d;
    grad_out[static_cast<std::size_t>(i)] = (grad_a + grad_b + grad_c + grad_d) * inv_m;
  }
  return total;
}

double left_truncated_variance(std::span<const double> locs) {
  const std::size_t n = locs.size();
  if (n == 0 || n % 2 != 0)
    throw std::invalid_argument("left_truncated_variance: atom count must be even and positive");
  const std::size_t mid = n / 2 - 1;  // 1-based index N/2
  const double pivot = locs[mid];
  double acc = 0.0;
  for (std::size_t i = mid; i < n; ++i) {
    const double d = pivot - locs[i];
    acc += d * d;
  }
  return acc / (2.0 * static_cast<double>(n));
}

double left_truncated_variance(const QuantileDist& z) {
  return left_truncated_variance(std::span<const double>(z.locations));
}

double wasserstein2_to_gaussian(const QuantileDist& z, double mu, double sigma) {
  if (z.locations.empty())
    throw std::invalid_argument("wasserstein2_to_gaussian: empty distribution");
  if (sigma <= 0.0)
    throw std::invalid_argument("wasserstein2_to_gaussian: sigma must be positive");
  std::vector<double> sorted = z.locations;
  std::sort(sorted.begin(), sorted.end());
  const int n = static_cast<int>(sorted.size());
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double q = inverse_normal_cdf(midpoint_level(i, n), mu, sigma);
    const double d = sorted[static_cast<std::size_t>(i)] - q;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(n));
}

}  // namespace pdboo
