#pragma once

#include <functional>
#include <span>
#include <vector>

#include "seedbank/rng.hpp"

namespace seedbank {

struct Atom {
  double rate;  // dormancy (reactivation) rate, > 0
  double mass;  // weight of this rate in the measure, > 0
};

struct GammaShape {
  double shape;
  double scale;
  double mass;
};

struct Moments {
  double mass;          // c
  double first_moment;  // c' = integral of rate against the measure
};

/// Finite dormancy-rate measure on (0, inf): either finitely many atoms or a
/// scaled Gamma(shape, scale) density. Validated at construction and
/// immutable afterwards.
class SeedBankMeasure {
 public:
  enum class Kind { discrete, gamma };

  static SeedBankMeasure discrete(std::vector<Atom> atoms);
  static SeedBankMeasure gamma(double shape, double scale, double mass);

  Kind kind() const noexcept { return kind_; }
  bool is_discrete() const noexcept { return kind_ == Kind::discrete; }

  /// Atoms sorted by increasing rate. Empty for the gamma kind.
  std::span<const Atom> atoms() const noexcept { return atoms_; }
  const GammaShape& gamma_shape() const noexcept { return gamma_; }

  double mass() const noexcept { return moments_.mass; }
  double first_moment() const noexcept { return moments_.first_moment; }

  /// mu((lo, hi]) for 0 <= lo <= hi (hi may be +inf).
  double mass_between(double lo, double hi) const;
  /// Integral of rate over (lo, hi].
  double first_moment_between(double lo, double hi) const;

  /// Integral of f against the measure; for the gamma kind this is adaptive
  /// quadrature over (0, inf).
  double integrate(const std::function<double(double)>& f) const;

 private:
  SeedBankMeasure() = default;

  Kind kind_ = Kind::discrete;
  std::vector<Atom> atoms_;
  GammaShape gamma_{};
  Moments moments_{};
};

Moments moments(const SeedBankMeasure& mu);

/// Dormancy-time CDF K(t) = int (1 - e^{-rate t}) mu(d rate) / c.
double kernel_cdf(const SeedBankMeasure& mu, double t);

/// Contribution of the initial condition to the active frequency,
/// g(t) = x + int y(rate) (1 - e^{-rate t}) / rate mu(d rate).
double initial_offset(const SeedBankMeasure& mu, double x,
                      const std::function<double(double)>& y, double t);

/// Finitely many seed-banks obtained by binning a measure.
struct DiscretizedMeasure {
  std::vector<Atom> atoms;         // increasing rates, zero-mass bins dropped
  double tail_cutoff = 0.0;        // Lambda
  double tail_mass = 0.0;          // mu((Lambda, inf))
  double tail_first_moment = 0.0;  // int_{(Lambda, inf)} rate mu(d rate)

  std::size_t size() const noexcept { return atoms.size(); }
  double mass() const noexcept;
  double first_moment() const noexcept;

  /// The discretized atoms viewed as a discrete measure in their own right.
  SeedBankMeasure as_measure() const;

  /// Wraps an already-discrete measure without re-binning.
  static DiscretizedMeasure from_atoms(std::span<const Atom> atoms);
};

/// Bins mu on the uniform grid rate_i = i * cutoff / bins, i = 1..bins, with
/// left-open right-closed bins and the representative rate at the right
/// endpoint; mass beyond the cutoff is dropped and reported.
DiscretizedMeasure discretize(const SeedBankMeasure& mu, int bins, double cutoff);

/// Draws a rate from mu / c.
double sample_rate(const SeedBankMeasure& mu, Philox& rng);

}  // namespace seedbank
