#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hslab/geometry.hpp"
#include "hslab/rng.hpp"

namespace hslab {

// Forbidden region for centers, always clipped to the legal interior of the
// domain. Unions of balls cover fixed external spheres; shell_width forbids a
// band just inside the interior boundary; active_box confines centers to the
// interior of a sub-box (everything outside it is forbidden).
struct BoundaryCondition {
  std::vector<Ball> forbidden_balls;
  std::optional<double> shell_width;
  std::optional<Box> active_box;

  bool is_free() const { return forbidden_balls.empty() && !shell_width && !active_box; }

  bool operator==(const BoundaryCondition& o) const {
    return forbidden_balls == o.forbidden_balls && shell_width == o.shell_width &&
           active_box == o.active_box;
  }

  // Membership of x in the forbidden set, given the domain and sphere radius.
  bool contains(const Point& x, const Box& domain, double radius) const {
    if (!inside_margin(domain, x, radius)) return false;  // forbidden set lives inside the interior
    for (const Ball& b : forbidden_balls)
      if (dist2(x, b.center) < b.radius * b.radius) return true;
    if (shell_width && !inside_margin(domain, x, radius + *shell_width)) return true;
    if (active_box && !inside_margin(*active_box, x, radius)) return true;
    return false;
  }
};

enum class StateClass { omega, omega_star };

inline const char* to_string(StateClass c) {
  return c == StateClass::omega ? "omega" : "omega_star";
}

// A finite set of sphere centers in a box domain with a cell grid for O(1)
// neighbor queries. The grid cell side defaults to 2r so one ring of cells
// answers exclusion queries.
class Configuration {
 public:
  Configuration() = default;

  Configuration(const Box& domain, double radius, double cell_side = 0.0)
      : domain_(domain),
        radius_(radius),
        interior_(box_interior(domain, radius)),
        grid_(domain, cell_side > 0.0 ? cell_side : 2.0 * radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("Configuration: radius must be positive");
  }

  const Box& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }
  double radius() const { return radius_; }
  const std::optional<Box>& interior() const { return interior_; }
  double interior_volume() const { return interior_ ? interior_->volume() : 0.0; }

  int size() const { return static_cast<int>(centers_.size()); }
  const Point& center(int i) const { return centers_[static_cast<std::size_t>(i)]; }
  const std::vector<Point>& centers() const { return centers_; }

  int add(const Point& p) {
    const auto id = static_cast<std::uint32_t>(centers_.size());
    centers_.push_back(p);
    grid_.insert(id, p);
    return static_cast<int>(id);
  }

  void remove_at(int i) {
    const auto id = static_cast<std::uint32_t>(i);
    const auto last = static_cast<std::uint32_t>(centers_.size() - 1);
    grid_.erase(id, centers_[id]);
    if (id != last) {
      grid_.reindex(last, id, centers_[last]);
      centers_[id] = centers_[last];
    }
    centers_.pop_back();
  }

  void clear() {
    while (!centers_.empty()) remove_at(static_cast<int>(centers_.size()) - 1);
  }

  // Visits indices of stored centers at distance < ell from x (strict).
  // Visitor returns false to stop early.
  template <class Visitor>
  bool for_each_within(const Point& x, double ell, Visitor&& visit) const {
    const double ell2 = ell * ell;
    return grid_.visit_near(x, ell, [&](std::uint32_t id) {
      if (dist2(x, centers_[id]) < ell2) return visit(static_cast<int>(id));
      return true;
    });
  }

  bool any_within(const Point& x, double ell) const {
    return !for_each_within(x, ell, [](int) { return false; });
  }

  int count_within(const Point& x, double ell) const {
    int n = 0;
    for_each_within(x, ell, [&](int) {
      ++n;
      return true;
    });
    return n;
  }

  std::vector<int> neighbors_within(const Point& x, double ell) const {
    std::vector<int> out;
    for_each_within(x, ell, [&](int i) {
      out.push_back(i);
      return true;
    });
    return out;
  }

 private:
  Box domain_;
  double radius_ = 0.0;
  std::optional<Box> interior_;
  CellGrid grid_;
  std::vector<Point> centers_;
};

struct ModelParams {
  int dim = 0;
  double lambda = 0.0;
  Box domain;
  BoundaryCondition tau;
  double radius = 0.0;  // unit-volume sphere radius for dim
};

inline ModelParams make_model_params(int dim, double lambda, const Box& domain,
                                     BoundaryCondition tau = {}) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("model params: dimension out of range");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("model params: fugacity must be finite and non-negative");
  if (domain.dim() != dim) throw std::invalid_argument("model params: domain dimension mismatch");
  ModelParams p;
  p.dim = dim;
  p.lambda = lambda;
  p.domain = domain;
  p.tau = std::move(tau);
  p.radius = sphere_radius(dim);
  return p;
}

inline Configuration make_configuration(const ModelParams& p) {
  return Configuration(p.domain, p.radius);
}

// Membership in the blocked region of a configuration: the band between the
// domain boundary and the interior, the forbidden set, and the 2r-balls
// around centers. Defined on all of space (the center balls extend past the
// domain; everything strictly outside the domain is otherwise unblocked).
inline bool in_blocked_region(const Point& x, const Configuration& c,
                              const BoundaryCondition& tau) {
  const double r = c.radius();
  if (c.domain().contains(x) && !inside_margin(c.domain(), x, r)) return true;
  if (tau.contains(x, c.domain(), r)) return true;
  return c.any_within(x, 2.0 * r);
}

// As above but restricted to the domain: x outside the domain is an error.
inline bool is_blocked_point(const Point& x, const Configuration& c,
                             const BoundaryCondition& tau) {
  if (!c.domain().contains(x)) throw std::invalid_argument("is_blocked_point: point outside domain");
  return in_blocked_region(x, c, tau);
}

// Exact test: all centers legal (interior, outside tau) and pairwise >= 2r.
inline bool is_valid_configuration(const Configuration& c, const BoundaryCondition& tau) {
  const double r = c.radius();
  for (int i = 0; i < c.size(); ++i) {
    const Point& p = c.center(i);
    if (!c.interior() || !inside_margin(c.domain(), p, r)) return false;
    if (tau.contains(p, c.domain(), r)) return false;
    bool ok = c.for_each_within(p, 2.0 * r, [&](int j) { return j == i; });
    if (!ok) return false;
  }
  return true;
}

struct StarVerdict {
  bool is_star = true;
  long candidate_triples = 0;
  long samples_per_triple = 0;

  // chance of missing a triple-overlap whose volume fraction of a sphere is >= f
  double false_negative_bound(double f) const {
    return static_cast<double>(candidate_triples) *
           std::exp(static_cast<double>(samples_per_triple) * std::log1p(-f));
  }
};

// Test that no point is covered by three open radius-r balls. Triples at
// pairwise distance >= 2r cannot overlap, so the exact pairwise screen leaves
// only mutually-close triples, which are confirmed by sampling the candidate
// overlap region.
inline StarVerdict is_star_configuration(const Configuration& c, long samples_per_triple,
                                         RngStream& rng) {
  if (samples_per_triple < 1)
    throw std::invalid_argument("is_star_configuration: samples must be >= 1");
  const double r = c.radius();
  StarVerdict v;
  v.samples_per_triple = samples_per_triple;
  for (int i = 0; i < c.size(); ++i) {
    const Point& pi = c.center(i);
    std::vector<int> close;
    c.for_each_within(pi, 2.0 * r, [&](int j) {
      if (j > i) close.push_back(j);
      return true;
    });
    for (std::size_t a = 0; a < close.size(); ++a) {
      for (std::size_t b = a + 1; b < close.size(); ++b) {
        const Point& pj = c.center(close[a]);
        const Point& pk = c.center(close[b]);
        if (dist2(pj, pk) >= 4.0 * r * r) continue;
        ++v.candidate_triples;
        for (long s = 0; s < samples_per_triple; ++s) {
          const Point q = uniform_point_in_ball(pi, r, rng);
          if (dist2(q, pj) < r * r && dist2(q, pk) < r * r) {
            v.is_star = false;
            return v;
          }
        }
      }
    }
  }
  return v;
}

// Poisson(lambda) proposal on the interior with forbidden points thinned out;
// restriction of a Poisson process is again a Poisson process.
inline void sample_poisson_interior(const ModelParams& p, RngStream& rng,
                                    std::vector<Point>& out) {
  out.clear();
  const auto interior = box_interior(p.domain, p.radius);
  if (!interior) return;
  const long k = rng.poisson(p.lambda * interior->volume());
  out.reserve(static_cast<std::size_t>(k));
  for (long i = 0; i < k; ++i) {
    Point q = uniform_point_in_box(*interior, rng);
    if (!p.tau.contains(q, p.domain, p.radius)) out.push_back(q);
  }
}

struct RejectionSample {
  Configuration config;
  long attempts = 0;
};

// Exact sampler: propose a thinned Poisson process on the legal region and
// accept iff all pairwise distances are >= 2r.
inline RejectionSample sample_hard_sphere_rejection(const ModelParams& p, RngStream& rng,
                                                    long max_attempts) {
  if (max_attempts < 1)
    throw std::invalid_argument("sample_hard_sphere_rejection: max_attempts must be >= 1");
  std::vector<Point> pts;
  const double min2 = 4.0 * p.radius * p.radius;
  for (long attempt = 1; attempt <= max_attempts; ++attempt) {
    sample_poisson_interior(p, rng, pts);
    bool ok = true;
    for (std::size_t i = 0; i < pts.size() && ok; ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j)
        if (dist2(pts[i], pts[j]) < min2) {
          ok = false;
          break;
        }
    if (ok) {
      RejectionSample s{make_configuration(p), attempt};
      for (const Point& q : pts) s.config.add(q);
      return s;
    }
  }
  throw std::runtime_error(
      "sample_hard_sphere_rejection: no acceptance in " + std::to_string(max_attempts) +
      " attempts (proposal mean " +
      std::to_string(p.lambda * (box_interior(p.domain, p.radius)
                                     ? box_interior(p.domain, p.radius)->volume()
                                     : 0.0)) +
      " centers); the fugacity-volume product is too large for rejection sampling");
}

struct SmallDomainOracle {
  double partition_function = 0.0;
  double expected_count = 0.0;
  std::vector<double> count_pmf;          // index k = number of spheres
  std::vector<double> one_sphere_bin_mass;  // P(count = 1 and center in bin)
  int bins_per_axis = 1;
};

namespace detail {

// Sufficient geometric conditions that at most `max_spheres` centers at
// pairwise distance >= 2r fit in the interior box. For one sphere the
// diameter must be < 2r. For two: among any three points, two lie within
// half of the longest extent, so (s_max/2)^2 + (remaining diameter)^2 < (2r)^2
// rules out a third.
inline void check_small_domain(const Box& interior, double r, int max_spheres) {
  const double diam = interior.diameter();
  if (max_spheres == 1) {
    if (diam >= 2.0 * r)
      throw std::invalid_argument("oracle: interior diameter " + std::to_string(diam) +
                                  " admits more than 1 sphere (needs < " + std::to_string(2.0 * r) +
                                  ")");
    return;
  }
  double longest = 0.0;
  int axis = 0;
  for (int i = 0; i < interior.dim(); ++i)
    if (interior.side(i) > longest) {
      longest = interior.side(i);
      axis = i;
    }
  double rest2 = 0.0;
  for (int i = 0; i < interior.dim(); ++i)
    if (i != axis) rest2 += interior.side(i) * interior.side(i);
  const double pair_max2 = 0.25 * longest * longest + rest2;
  if (pair_max2 >= 4.0 * r * r)
    throw std::invalid_argument(
        "oracle: interior extents (diameter " + std::to_string(diam) +
        ") admit more than 2 spheres; half the longest side plus the cross diameter reaches " +
        std::to_string(std::sqrt(pair_max2)));
}

}  // namespace detail

// Brute-force reference for domains holding at most one or two spheres:
// tensor-grid midpoint quadrature of the partition function, the expected
// count, and the count distribution (with per-bin mass for the one-sphere term).
inline SmallDomainOracle oracle_small_domain(const ModelParams& p, int max_spheres,
                                             int cells_per_axis, int bins_per_axis = 1) {
  if (max_spheres < 1 || max_spheres > 2)
    throw std::invalid_argument("oracle: max_spheres must be 1 or 2");
  if (cells_per_axis < 1) throw std::invalid_argument("oracle: cells_per_axis must be >= 1");
  const auto interior = box_interior(p.domain, p.radius);
  SmallDomainOracle o;
  o.bins_per_axis = bins_per_axis;
  o.one_sphere_bin_mass.assign(
      static_cast<std::size_t>(std::pow(bins_per_axis, p.dim)), 0.0);
  if (!interior) {
    o.partition_function = 1.0;
    o.count_pmf = {1.0};
    return o;
  }
  detail::check_small_domain(*interior, p.radius, max_spheres);

  const int d = p.dim;
  std::array<long, kMaxDim> nc{};
  double cell_vol = 1.0;
  long total = 1;
  for (int i = 0; i < d; ++i) {
    nc[static_cast<std::size_t>(i)] = cells_per_axis;
    cell_vol *= interior->side(i) / static_cast<double>(cells_per_axis);
    total *= cells_per_axis;
    if (total > (1L << 24)) throw std::invalid_argument("oracle: quadrature grid too large");
  }
  std::vector<Point> mids;  // midpoints of legal cells
  std::vector<int> bins;
  mids.reserve(static_cast<std::size_t>(total));
  std::array<long, kMaxDim> idx{};
  for (long flat = 0; flat < total; ++flat) {
    Point m = zero_point(d);
    int bin = 0;
    for (int i = 0; i < d; ++i) {
      const double t = (static_cast<double>(idx[static_cast<std::size_t>(i)]) + 0.5) /
                       static_cast<double>(cells_per_axis);
      m[i] = interior->low[i] + t * interior->side(i);
      const int bi = std::min(bins_per_axis - 1, static_cast<int>(t * bins_per_axis));
      bin = bin * bins_per_axis + bi;
    }
    if (!p.tau.contains(m, p.domain, p.radius)) {
      mids.push_back(m);
      bins.push_back(bin);
    }
    int axis = 0;
    while (axis < d && ++idx[static_cast<std::size_t>(axis)] == nc[static_cast<std::size_t>(axis)])
      idx[static_cast<std::size_t>(axis++)] = 0;
  }

  const double i1 = cell_vol * static_cast<double>(mids.size());
  double i2 = 0.0;
  if (max_spheres == 2) {
    const double min2 = 4.0 * p.radius * p.radius;
    long pairs = 0;
    for (std::size_t a = 0; a < mids.size(); ++a)
      for (std::size_t b = 0; b < mids.size(); ++b)
        if (a != b && dist2(mids[a], mids[b]) >= min2) ++pairs;
    i2 = cell_vol * cell_vol * static_cast<double>(pairs);
  }

  const double t1 = p.lambda * i1;
  const double t2 = 0.5 * p.lambda * p.lambda * i2;
  o.partition_function = 1.0 + t1 + t2;
  o.expected_count = (t1 + 2.0 * t2) / o.partition_function;
  o.count_pmf = {1.0 / o.partition_function, t1 / o.partition_function};
  if (max_spheres == 2) o.count_pmf.push_back(t2 / o.partition_function);
  for (std::size_t m = 0; m < mids.size(); ++m)
    o.one_sphere_bin_mass[static_cast<std::size_t>(bins[m])] +=
        p.lambda * cell_vol / o.partition_function;
  return o;
}

struct FractionEstimate {
  double fraction = 0.0;
  double std_error = 0.0;
};

// Fraction of the domain where a new center could legally be placed
// (interior, outside tau, farther than 2r from every center).
inline FractionEstimate free_volume_fraction_estimate(const Configuration& c,
                                                      const BoundaryCondition& tau, long samples,
                                                      RngStream& rng) {
  if (samples < 1)
    throw std::invalid_argument("free_volume_fraction_estimate: samples must be >= 1");
  const double r = c.radius();
  long hits = 0;
  for (long i = 0; i < samples; ++i) {
    const Point x = uniform_point_in_box(c.domain(), rng);
    if (inside_margin(c.domain(), x, r) && !tau.contains(x, c.domain(), r) &&
        !c.any_within(x, 2.0 * r))
      ++hits;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(samples))};
}

}  // namespace hslab
