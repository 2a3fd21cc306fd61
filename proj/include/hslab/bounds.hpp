#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "hslab/geometry.hpp"

namespace hslab {

// All logarithms are natural.

inline double vigoda_c(double lambda, int dim) {
  if (lambda < 0.0) throw std::invalid_argument("vigoda_c: negative fugacity");
  if (dim < 1) throw std::invalid_argument("vigoda_c: dimension must be >= 1");
  const double l2d = lambda * std::pow(2.0, dim);
  return l2d / (2.0 + l2d);
}

// Steps after which the single-center dynamics at lambda = (1-gamma) 2^{1-d}
// is within eps of stationarity in total variation, on volume n.
inline long mixing_time_bound(double n, int dim, double gamma, double eps) {
  if (!(n > 0.0)) throw std::invalid_argument("mixing_time_bound: volume must be positive");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("mixing_time_bound: gamma must lie in (0,1)");
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("mixing_time_bound: eps must lie in (0,1)");
  if (dim < 1) throw std::invalid_argument("mixing_time_bound: dimension must be >= 1");
  const double diameter_log = std::log(std::pow(2.0, dim + 2) * n);
  return static_cast<long>(std::ceil(4.0 * n * (diameter_log + std::log(1.0 / eps)) / gamma));
}

struct FugacityBounds {
  double lower_bound = 0.0;            // 2^{1-d}
  double cluster_expansion_ref = 0.0;  // e^{-1} 2^{-d}, the classical series radius
};

inline FugacityBounds fugacity_bounds(int dim) {
  if (dim < 2) throw std::invalid_argument("fugacity_bounds: dimension must be >= 2");
  FugacityBounds b;
  b.lower_bound = std::pow(2.0, 1 - dim);
  b.cluster_expansion_ref = std::exp(-1.0) * std::pow(2.0, -dim);
  return b;
}

inline double density_bound_easy(double lambda, int dim) {
  if (lambda < 0.0) throw std::invalid_argument("density_bound_easy: negative fugacity");
  if (dim < 1) throw std::invalid_argument("density_bound_easy: dimension must be >= 1");
  return lambda / (1.0 + std::pow(2.0, dim) * lambda);
}

// Principal branch of w e^w = x for x >= 0, Halley iteration from a log seed.
inline double lambert_w(double x) {
  if (x < 0.0) throw std::invalid_argument("lambert_w: negative argument");
  if (x == 0.0) return 0.0;
  double w = x < 2.718281828459045 ? x / (1.0 + x) : std::log(x) - std::log(std::log(x));
  for (int it = 0; it < 100; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double step = f / (ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0));
    w -= step;
    if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(w))) break;
  }
  return w;
}

// inf_z max(lambda e^{-z}, z 2^{-d} e^{-2 lambda 3^{d/2}}): the two branches
// cross exactly once (one decreasing from lambda, one increasing from zero),
// so bisection on their difference finds the infimum.
inline double density_bound_jjp(double lambda, int dim) {
  if (!(lambda > 0.0)) throw std::invalid_argument("density_bound_jjp: fugacity must be positive");
  if (dim < 2) throw std::invalid_argument("density_bound_jjp: dimension must be >= 2");
  const double q = std::pow(2.0, -dim) * std::exp(-2.0 * lambda * std::pow(3.0, 0.5 * dim));
  if (q <= 0.0) return 0.0;  // rising branch underflows; the inf degenerates
  auto diff = [&](double z) { return lambda * std::exp(-z) - q * z; };
  double lo = 0.0, hi = 1.0;
  int it = 0;
  while (diff(hi) > 0.0) {
    hi *= 2.0;
    if (++it > 200) throw std::runtime_error("density_bound_jjp: bracket expansion failed");
  }
  for (it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (diff(mid) > 0.0 ? lo : hi) = mid;
    if (hi - lo <= 1e-12 * std::max(1.0, hi)) break;
  }
  if (it >= 200) throw std::runtime_error("density_bound_jjp: bisection did not converge");
  return lambda * std::exp(-0.5 * (lo + hi));
}

struct ContractionRate {
  double lambda = 0.0;           // (1-gamma) 2^{1-d}
  double drift_bound = 0.0;      // expected distance change per step, at most this
  double per_step_factor = 0.0;  // e^{-gamma/(4n)}
};

inline ContractionRate contraction_rate_bound(double n, int dim, double gamma) {
  if (!(n > 0.0)) throw std::invalid_argument("contraction_rate_bound: volume must be positive");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("contraction_rate_bound: gamma must lie in (0,1)");
  if (dim < 1) throw std::invalid_argument("contraction_rate_bound: dimension must be >= 1");
  ContractionRate r;
  r.lambda = (1.0 - gamma) * std::pow(2.0, 1 - dim);
  r.drift_bound = -gamma * std::pow(2.0, dim) / ((2.0 - gamma) * (1.0 + r.lambda) * n);
  r.per_step_factor = std::exp(-gamma / (4.0 * n));
  return r;
}

struct DisagreementBound {
  double bound = 0.0;    // |B| e^{-s/(4r)}
  double eta_max = 0.0;  // s / (e^2 r 4^{d+1})
  bool eta_ok = true;
};

inline DisagreementBound disagreement_bound(double region_volume, double separation, int dim,
                                            double eta) {
  if (!(separation > 0.0))
    throw std::invalid_argument("disagreement_bound: separation must be positive");
  if (dim < 1) throw std::invalid_argument("disagreement_bound: dimension must be >= 1");
  const double r = sphere_radius(dim);
  DisagreementBound b;
  b.bound = region_volume * std::exp(-separation / (4.0 * r));
  b.eta_max = separation / (std::exp(2.0) * r * std::pow(4.0, dim + 1));
  b.eta_ok = eta <= b.eta_max;
  return b;
}

}  // namespace hslab
