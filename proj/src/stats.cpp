#include "seedbank/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

#include "seedbank/error.hpp"

namespace seedbank::stats {

TestResult chi_square_two_sample(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                                 double min_expected) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorCode::invalid_parameter, "count vectors must be nonempty and aligned");
  }
  double na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += static_cast<double>(a[i]);
    nb += static_cast<double>(b[i]);
  }
  if (na <= 0.0 || nb <= 0.0) {
    throw Error(ErrorCode::invalid_parameter, "both samples need positive counts");
  }

  // Greedy left-to-right pooling until every cell is large enough; a short
  // remainder is folded into the last accepted cell.
  std::vector<std::pair<double, double>> cells;
  double acc_a = 0.0, acc_b = 0.0;
  const double share_a = na / (na + nb), share_b = nb / (na + nb);
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc_a += static_cast<double>(a[i]);
    acc_b += static_cast<double>(b[i]);
    const double pooled = acc_a + acc_b;
    if (pooled * std::min(share_a, share_b) >= min_expected) {
      cells.emplace_back(acc_a, acc_b);
      acc_a = acc_b = 0.0;
    }
  }
  if (acc_a + acc_b > 0.0) {
    if (cells.empty()) {
      cells.emplace_back(acc_a, acc_b);
    } else {
      cells.back().first += acc_a;
      cells.back().second += acc_b;
    }
  }
  if (cells.size() < 2) {
    return {0.0, 1.0, 0};
  }

  double stat = 0.0;
  for (const auto& [ca, cb] : cells) {
    const double pooled = ca + cb;
    const double ea = pooled * share_a, eb = pooled * share_b;
    stat += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
  }
  const std::size_t dof = cells.size() - 1;
  const boost::math::chi_squared dist(static_cast<double>(dof));
  return {stat, boost::math::cdf(boost::math::complement(dist, stat)), dof};
}

double kolmogorov_p_value(double d, std::size_t n) {
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
  if (lambda < 0.2) {
    return 1.0;
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12 * std::abs(sum)) {
      break;
    }
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult ks_exponential(std::vector<double> samples, double rate) {
  if (samples.empty() || !(rate > 0.0)) {
    throw Error(ErrorCode::invalid_parameter, "KS test needs samples and a positive rate");
  }
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = -std::expm1(-rate * samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
  }
  return {d, kolmogorov_p_value(d, samples.size()), 0};
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw Error(ErrorCode::dimension_mismatch, "distributions must have equal support");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sum += std::abs(p[i] - q[i]);
  }
  return 0.5 * sum;
}

std::vector<double> frequencies(std::span<const std::int64_t> counts) {
  double total = 0.0;
  for (auto c : counts) {
    total += static_cast<double>(c);
  }
  std::vector<double> out(counts.size(), 0.0);
  if (total > 0.0) {
    for (std::size_t i = 0; i < counts.size(); ++i) {
      out[i] = static_cast<double>(counts[i]) / total;
    }
  }
  return out;
}

}  // namespace seedbank::stats
