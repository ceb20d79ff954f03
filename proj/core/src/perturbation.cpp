#include "pdboo/perturbation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pdboo {

double delta_at(const DeltaSchedule& schedule, std::int64_t t) {
  if (t < 1) throw std::invalid_argument("delta_at: t must be >= 1");
  switch (schedule.form) {
    case DeltaSchedule::Form::power_law:
      if (t == 1) return schedule.delta0;  // 1^x = 1; avoid pow noise
      return schedule.delta0 * std::pow(static_cast<double>(t), -(1.0 + schedule.epsilon));
    case DeltaSchedule::Form::constant:
      return schedule.delta0;
    case DeltaSchedule::Form::sqrt_log_t_over_t: {
      if (t == 1) return 0.0;
      const double td = static_cast<double>(t);
      return schedule.delta0 * std::sqrt(std::log(td) / td);
    }
  }
  throw std::logic_error("delta_at: unknown schedule form");
}

std::vector<double> sample_simplex(const DirichletParams& params, int n, Rng& rng) {
  if (n < 2) throw std::invalid_argument("sample_simplex: need at least 2 components");
  if (params.beta <= 0.0) throw std::invalid_argument("sample_simplex: beta must be positive");
  constexpr int kMaxRetries = 64;
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    double sum = 0.0;
    for (auto& v : x) {
      v = rng.gamma(params.beta);
      sum += v;
    }
    if (sum > 0.0) {
      for (auto& v : x) v /= sum;
      return x;
    }
  }
  throw std::runtime_error("sample_simplex: all Gamma draws underflowed to zero repeatedly");
}

double alpha_from_delta(double delta, int n, double vmax) {
  if (n < 2) throw std::invalid_argument("alpha_from_delta: need N >= 2");
  if (vmax <= 0.0) throw std::invalid_argument("alpha_from_delta: vmax must be positive");
  if (delta < 0.0) throw std::invalid_argument("alpha_from_delta: delta must be >= 0");
  return delta / ((static_cast<double>(n) - 1.0) * vmax);
}

PerturbationWeights make_xi(std::span<const double> x, double alpha) {
  if (x.size() < 2) throw std::invalid_argument("make_xi: need at least 2 components");
  if (alpha < 0.0) throw std::invalid_argument("make_xi: alpha must be >= 0");
  const double n = static_cast<double>(x.size());
  PerturbationWeights xi;
  xi.weights.resize(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double raw = 1.0 + alpha * (n * x[i] - 1.0);
    const double clamped = raw > 0.0 ? raw : 0.0;
    xi.weights[i] = clamped;
    sum += clamped;
  }
  if (sum <= 0.0)
    throw std::runtime_error(
        "make_xi: all weights clamped to zero (input does not sum to 1; alpha = " +
        std::to_string(alpha) + ")");
  const double scale = n / sum;
  for (auto& w : xi.weights) w *= scale;
  return xi;
}

double perturbation_gap(const QuantileDist& z, const PerturbationWeights& xi) {
  return std::abs(dist_mean(z) - xi_expectation(z, xi.weights));
}

double perturbation_gap(std::span<const double> locs, std::span<const double> xi) {
  return std::abs(dist_mean(locs) - xi_expectation(locs, xi));
}

SummabilityReport check_summability(const DeltaSchedule& schedule, std::int64_t horizon,
                                    double tol) {
  if (horizon < 1) throw std::invalid_argument("check_summability: horizon must be >= 1");
  if (tol <= 0.0) throw std::invalid_argument("check_summability: tol must be positive");
  SummabilityReport report;
  for (std::int64_t t = 1; t <= horizon; ++t) report.partial_sum += delta_at(schedule, t);

  const bool effectively_zero = schedule.delta0 <= tol;
  switch (schedule.form) {
    case DeltaSchedule::Form::power_law:
      // p-series with exponent 1 + epsilon > 1.
      report.summable = effectively_zero || schedule.epsilon > 0.0;
      if (effectively_zero) {
        report.tail_bound = 0.0;
      } else if (report.summable) {
        report.tail_bound = schedule.delta0 *
                            std::pow(static_cast<double>(horizon), -schedule.epsilon) /
                            schedule.epsilon;
      }
      break;
    case DeltaSchedule::Form::constant:
      report.summable = effectively_zero;
      if (report.summable) report.tail_bound = 0.0;
      break;
    case DeltaSchedule::Form::sqrt_log_t_over_t:
      // sqrt(ln t / t) >= t^(-1/2 - a) eventually for any a > 0; diverges.
      report.summable = effectively_zero;
      if (report.summable) report.tail_bound = 0.0;
      break;
  }
  return report;
}

}  // namespace pdboo
