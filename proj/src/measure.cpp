#include "seedbank/measure.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "seedbank/error.hpp"

namespace seedbank {

namespace {

constexpr double kQuadratureAbsTol = 1e-10;
constexpr unsigned kQuadratureDepth = 20;

// Adaptive Gauss–Kronrod on (lo, hi]; hi may be +inf.
double quadrature(const std::function<double(double)>& f, double lo, double hi) {
  if (!(hi > lo)) {
    return 0.0;
  }
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, lo, hi, kQuadratureDepth, 1e-13, &error);
  if (error > kQuadratureAbsTol) {
    // Split once at the mode region and retry; heavy-shaped densities with
    // shape < 1 have an integrable endpoint singularity at 0.
    if (std::isfinite(hi)) {
      const double mid = 0.5 * (lo + hi);
      return quadrature(f, lo, mid) + quadrature(f, mid, hi);
    }
  }
  return value;
}

double gamma_density(const GammaShape& g, double rate) {
  if (rate <= 0.0) {
    return 0.0;
  }
  const double log_density = (g.shape - 1.0) * std::log(rate) - rate / g.scale -
                             std::lgamma(g.shape) - g.shape * std::log(g.scale);
  return g.mass * std::exp(log_density);
}

}  // namespace

SeedBankMeasure SeedBankMeasure::discrete(std::vector<Atom> atoms) {
  if (atoms.empty()) {
    throw Error(ErrorCode::invalid_measure, "a discrete measure needs at least one atom");
  }
  for (const auto& a : atoms) {
    if (!(a.rate > 0.0) || !std::isfinite(a.rate)) {
      throw Error(ErrorCode::invalid_measure, "atom rate must be positive and finite");
    }
    if (!(a.mass > 0.0) || !std::isfinite(a.mass)) {
      throw Error(ErrorCode::invalid_measure, "atom mass must be positive and finite");
    }
  }
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& l, const Atom& r) { return l.rate < r.rate; });
  for (std::size_t i = 1; i < atoms.size(); ++i) {
    if (atoms[i].rate == atoms[i - 1].rate) {
      throw Error(ErrorCode::invalid_measure, "atom rates must be pairwise distinct");
    }
  }

  SeedBankMeasure mu;
  mu.kind_ = Kind::discrete;
  mu.atoms_ = std::move(atoms);
  for (const auto& a : mu.atoms_) {
    mu.moments_.mass += a.mass;
    mu.moments_.first_moment += a.rate * a.mass;
  }
  return mu;
}

SeedBankMeasure SeedBankMeasure::gamma(double shape, double scale, double mass) {
  if (!(shape > 0.0) || !(scale > 0.0) || !(mass > 0.0) || !std::isfinite(shape) ||
      !std::isfinite(scale) || !std::isfinite(mass)) {
    throw Error(ErrorCode::invalid_measure, "gamma shape, scale and mass must be positive");
  }
  SeedBankMeasure mu;
  mu.kind_ = Kind::gamma;
  mu.gamma_ = {shape, scale, mass};
  mu.moments_ = {mass, mass * shape * scale};
  return mu;
}

double SeedBankMeasure::mass_between(double lo, double hi) const {
  if (!(hi > lo)) {
    return 0.0;
  }
  if (is_discrete()) {
    double sum = 0.0;
    for (const auto& a : atoms_) {
      if (a.rate > lo && a.rate <= hi) {
        sum += a.mass;
      }
    }
    return sum;
  }
  return quadrature([this](double r) { return gamma_density(gamma_, r); }, lo, hi);
}

double SeedBankMeasure::first_moment_between(double lo, double hi) const {
  if (!(hi > lo)) {
    return 0.0;
  }
  if (is_discrete()) {
    double sum = 0.0;
    for (const auto& a : atoms_) {
      if (a.rate > lo && a.rate <= hi) {
        sum += a.rate * a.mass;
      }
    }
    return sum;
  }
  return quadrature([this](double r) { return r * gamma_density(gamma_, r); }, lo, hi);
}

double SeedBankMeasure::integrate(const std::function<double(double)>& f) const {
  if (is_discrete()) {
    double sum = 0.0;
    for (const auto& a : atoms_) {
      sum += f(a.rate) * a.mass;
    }
    return sum;
  }
  return quadrature([&](double r) { return f(r) * gamma_density(gamma_, r); }, 0.0,
                    std::numeric_limits<double>::infinity());
}

Moments moments(const SeedBankMeasure& mu) { return {mu.mass(), mu.first_moment()}; }

double kernel_cdf(const SeedBankMeasure& mu, double t) {
  if (!(t >= 0.0)) {
    throw Error(ErrorCode::invalid_parameter, "kernel_cdf needs t >= 0");
  }
  if (t == 0.0) {
    return 0.0;
  }
  if (std::isinf(t)) {
    return 1.0;
  }
  if (mu.is_discrete()) {
    double sum = 0.0;
    for (const auto& a : mu.atoms()) {
      sum += -std::expm1(-a.rate * t) * a.mass;
    }
    return std::clamp(sum / mu.mass(), 0.0, 1.0);
  }
  // Laplace transform of Gamma(shape, scale): (1 + scale t)^(-shape), a
  // Pareto-type survival function.
  const auto& g = mu.gamma_shape();
  return -std::expm1(-g.shape * std::log1p(g.scale * t));
}

double initial_offset(const SeedBankMeasure& mu, double x,
                      const std::function<double(double)>& y, double t) {
  if (t == 0.0) {
    return x;
  }
  // (1 - e^{-rt}) / r, continuous at r -> 0.
  auto weight = [t](double r) { return r * t < 1e-300 ? t : -std::expm1(-r * t) / r; };
  return x + mu.integrate([&](double r) { return y(r) * weight(r); });
}

double DiscretizedMeasure::mass() const noexcept {
  double sum = 0.0;
  for (const auto& a : atoms) {
    sum += a.mass;
  }
  return sum;
}

double DiscretizedMeasure::first_moment() const noexcept {
  double sum = 0.0;
  for (const auto& a : atoms) {
    sum += a.rate * a.mass;
  }
  return sum;
}

SeedBankMeasure DiscretizedMeasure::as_measure() const { return SeedBankMeasure::discrete(atoms); }

DiscretizedMeasure DiscretizedMeasure::from_atoms(std::span<const Atom> atoms) {
  const auto mu = SeedBankMeasure::discrete({atoms.begin(), atoms.end()});
  DiscretizedMeasure out;
  out.atoms.assign(mu.atoms().begin(), mu.atoms().end());
  out.tail_cutoff = out.atoms.back().rate;
  return out;
}

DiscretizedMeasure discretize(const SeedBankMeasure& mu, int bins, double cutoff) {
  if (bins < 1 || !(cutoff > 0.0) || !std::isfinite(cutoff)) {
    throw Error(ErrorCode::degenerate_grid, "need bins >= 1 and a positive finite cutoff");
  }
  if (!(cutoff / bins > 0.0)) {
    throw Error(ErrorCode::degenerate_grid, "bin width underflows to zero");
  }

  DiscretizedMeasure out;
  out.tail_cutoff = cutoff;
  double lo = 0.0;
  for (int i = 1; i <= bins; ++i) {
    const double hi = i == bins ? cutoff : static_cast<double>(i) * cutoff / bins;
    const double mass = mu.mass_between(lo, hi);
    if (mass > 0.0) {
      out.atoms.push_back({hi, mass});
    }
    lo = hi;
  }
  const double inf = std::numeric_limits<double>::infinity();
  out.tail_mass = mu.mass_between(cutoff, inf);
  out.tail_first_moment = mu.first_moment_between(cutoff, inf);
  return out;
}

double sample_rate(const SeedBankMeasure& mu, Philox& rng) {
  if (mu.is_discrete()) {
    const auto atoms = mu.atoms();
    const double target = rng.uniform() * mu.mass();
    double cumulative = 0.0;
    for (const auto& a : atoms) {
      cumulative += a.mass;
      if (target < cumulative) {
        return a.rate;
      }
    }
    return atoms.back().rate;
  }
  const auto& g = mu.gamma_shape();
  std::gamma_distribution<double> draw(g.shape, g.scale);
  return draw(rng);
}

}  // namespace seedbank
