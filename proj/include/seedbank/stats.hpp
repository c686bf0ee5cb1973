#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace seedbank::stats {

struct TestResult {
  double statistic;
  double p_value;
  std::size_t dof = 0;  // chi-square only
};

/// Two-sample chi-square test of homogeneity on category counts. Categories
/// whose pooled expected count falls below `min_expected` in either sample
/// are merged into their neighbour first.
TestResult chi_square_two_sample(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                                 double min_expected = 5.0);

/// One-sample Kolmogorov–Smirnov test against Exp(rate).
TestResult ks_exponential(std::vector<double> samples, double rate);

/// Asymptotic Kolmogorov survival function with the Stephens correction for
/// sample size n.
double kolmogorov_p_value(double d, std::size_t n);

/// Total-variation distance between two probability vectors of equal length.
double total_variation(std::span<const double> p, std::span<const double> q);

/// Normalizes counts to frequencies.
std::vector<double> frequencies(std::span<const std::int64_t> counts);

}  // namespace seedbank::stats
