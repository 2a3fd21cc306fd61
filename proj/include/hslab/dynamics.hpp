#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hslab/geometry.hpp"
#include "hslab/model.hpp"
#include "hslab/rng.hpp"

namespace hslab {

inline constexpr long kResampleDefaultBudget = 10000;

struct ChainState {
  Configuration config;
  ModelParams params;
  long step = 0;
  RngStream rng;
  StateClass state_class = StateClass::omega;
};

inline ChainState make_chain_state(const ModelParams& p, RngStream rng,
                                   StateClass cls = StateClass::omega) {
  ChainState s;
  s.config = make_configuration(p);
  s.params = p;
  s.rng = rng;
  s.state_class = cls;
  return s;
}

struct StepOutcome {
  bool active = true;         // update point landed in the active region
  bool attempted_add = false;  // coin chose insertion
  bool accepted_add = false;
  int removed = 0;
  bool changed() const { return accepted_add || removed > 0; }
};

// Box-or-ball sub-region for restricted dynamics.
struct ActiveRegion {
  enum class Kind { box, ball } kind = Kind::box;
  Box box;
  Ball ball;

  static ActiveRegion of(const Box& b) {
    ActiveRegion a;
    a.kind = Kind::box;
    a.box = b;
    return a;
  }
  static ActiveRegion of(const Ball& b) {
    ActiveRegion a;
    a.kind = Kind::ball;
    a.ball = b;
    return a;
  }

  bool contains(const Point& p) const {
    if (kind == Kind::box) return box.contains(p);
    return dist2(p, ball.center) <= ball.radius * ball.radius;
  }

  // membership in the region shrunk by the sphere radius
  bool interior_contains(const Point& p, double r) const {
    if (kind == Kind::box) return inside_margin(box, p, r);
    const double rr = ball.radius - r;
    return rr > 0.0 && dist2(p, ball.center) <= rr * rr;
  }
};

namespace detail {

inline bool addition_is_legal(const Configuration& c, const BoundaryCondition& tau,
                              const Point& x, const ActiveRegion* confine) {
  const double r = c.radius();
  if (!inside_margin(c.domain(), x, r)) return false;
  if (tau.contains(x, c.domain(), r)) return false;
  if (confine && !confine->interior_contains(x, r)) return false;
  return !c.any_within(x, 2.0 * r);
}

// One update applied at point x with the given move coin. Deletions remove
// every center strictly within r of x; with a confinement region only centers
// inside its interior are touched, so the outside configuration never changes.
inline StepOutcome apply_center_update(Configuration& c, const BoundaryCondition& tau,
                                       const Point& x, bool add_move,
                                       const ActiveRegion* confine = nullptr) {
  StepOutcome out;
  const double r = c.radius();
  if (add_move) {
    out.attempted_add = true;
    if (addition_is_legal(c, tau, x, confine)) {
      c.add(x);
      out.accepted_add = true;
    }
  } else {
    std::vector<int> hit;
    c.for_each_within(x, r, [&](int i) {
      if (!confine || confine->interior_contains(c.center(i), r)) hit.push_back(i);
      return true;
    });
    std::sort(hit.begin(), hit.end(), std::greater<int>());
    for (int i : hit) c.remove_at(i);
    out.removed = static_cast<int>(hit.size());
  }
  return out;
}

}  // namespace detail

// Single-center dynamics: uniform update point in the domain; delete the
// centers within r of it with probability 1/(1+lambda), otherwise try to
// insert a center there. The same local rule serves both state classes.
inline StepOutcome single_center_step(ChainState& s) {
  const Point x = uniform_point_in_box(s.params.domain, s.rng);
  const bool add_move = s.rng.uniform01() < s.params.lambda / (1.0 + s.params.lambda);
  StepOutcome out = detail::apply_center_update(s.config, s.params.tau, x, add_move);
  ++s.step;
  return out;
}

// Lazy restricted dynamics: updates outside the active region are skipped and
// the configuration inside is driven with everything outside the region's
// interior forbidden.
inline StepOutcome restricted_lazy_step(ChainState& s, const ActiveRegion& region) {
  const Point x = uniform_point_in_box(s.params.domain, s.rng);
  const bool add_move = s.rng.uniform01() < s.params.lambda / (1.0 + s.params.lambda);
  StepOutcome out;
  if (!region.contains(x)) {
    out.active = false;
    ++s.step;
    return out;
  }
  out = detail::apply_center_update(s.config, s.params.tau, x, add_move, &region);
  ++s.step;
  return out;
}

namespace detail {

struct ResampleRegion {
  Point center;
  double radius = 0.0;  // centers of resampled spheres lie within this ball
};

// Poisson proposal for a region resample, drawn on whichever of the update
// ball and the interior box has smaller volume (both restrict to the same
// thinned process). The draw depends only on the domain geometry, never on a
// chain's centers or tau, so coupled chains can share it.
inline void draw_region_proposal(const Box& interior, const ResampleRegion& reg, int dim,
                                 double lambda, RngStream& rng, std::vector<Point>& out) {
  out.clear();
  const double ball_vol = ball_volume(reg.radius, dim);
  const double box_vol = interior.volume();
  const bool from_ball = ball_vol < box_vol;
  const long k = rng.poisson(lambda * (from_ball ? ball_vol : box_vol));
  out.reserve(static_cast<std::size_t>(k));
  const double rad2 = reg.radius * reg.radius;
  for (long i = 0; i < k; ++i) {
    Point q = from_ball ? uniform_point_in_ball(reg.center, reg.radius, rng)
                        : uniform_point_in_box(interior, rng);
    if (from_ball) {
      if (!interior.contains(q)) continue;
    } else {
      if (dist2(q, reg.center) >= rad2) continue;
    }
    out.push_back(q);
  }
}

// Thins a shared proposal by a chain's tau and accepts iff the hard-core
// constraints hold among the kept points and against the retained centers.
// Consumes no randomness.
inline bool evaluate_region_proposal(const Configuration& retained, const ModelParams& p,
                                     const ResampleRegion& reg,
                                     const std::vector<Point>& proposal,
                                     std::vector<Point>& accepted) {
  accepted.clear();
  const double r = p.radius;
  const double min2 = 4.0 * r * r;
  // a draw with more centers than fit in the update ball cannot be valid
  const long cap =
      std::max<long>(64, static_cast<long>(std::ceil(std::min(
                             ball_volume(reg.radius + r, p.dim), p.domain.volume()))) +
                             1);
  for (const Point& q : proposal) {
    if (p.tau.contains(q, p.domain, r)) continue;
    accepted.push_back(q);
    if (static_cast<long>(accepted.size()) > cap) return false;
  }
  for (std::size_t i = 0; i < accepted.size(); ++i) {
    if (retained.any_within(accepted[i], 2.0 * r)) return false;
    for (std::size_t j = i + 1; j < accepted.size(); ++j)
      if (dist2(accepted[i], accepted[j]) < min2) return false;
  }
  return true;
}

[[noreturn]] inline void resample_budget_error(const char* who, long budget, double lambda,
                                               double region_volume) {
  throw std::runtime_error(std::string(who) + ": resampling rejection budget (" +
                           std::to_string(budget) + " attempts) exhausted; lambda=" +
                           std::to_string(lambda) + ", region volume=" +
                           std::to_string(region_volume));
}

}  // namespace detail

// Heat-bath dynamics with update radius L: pick the update center uniformly
// in the L-parallel set of the interior, drop the spheres lying entirely in
// the update ball (centers within L-r) and resample that region exactly,
// conditioned on the retained centers and tau.
inline StepOutcome heat_bath_step(ChainState& s, double update_radius,
                                  long max_attempts = kResampleDefaultBudget) {
  const ModelParams& p = s.params;
  if (!(update_radius >= p.radius))
    throw std::invalid_argument("heat_bath_step: update radius must be >= sphere radius");
  StepOutcome out;
  const auto& interior = s.config.interior();
  if (!interior) {
    ++s.step;
    return out;
  }
  const Point x = uniform_point_in_parallel_set(*interior, update_radius, s.rng);
  const detail::ResampleRegion reg{x, update_radius - p.radius};

  std::vector<int> doomed = s.config.neighbors_within(x, reg.radius);
  std::sort(doomed.begin(), doomed.end(), std::greater<int>());
  for (int i : doomed) s.config.remove_at(i);
  out.removed = static_cast<int>(doomed.size());

  std::vector<Point> proposal, fresh;
  for (long attempt = 0; attempt < max_attempts; ++attempt) {
    detail::draw_region_proposal(*interior, reg, p.dim, p.lambda, s.rng, proposal);
    if (detail::evaluate_region_proposal(s.config, p, reg, proposal, fresh)) {
      for (const Point& q : fresh) s.config.add(q);
      out.attempted_add = true;
      out.accepted_add = !fresh.empty();
      ++s.step;
      return out;
    }
  }
  detail::resample_budget_error("heat_bath_step", max_attempts, p.lambda,
                                ball_volume(reg.radius, p.dim));
}

struct CoupledState {
  ChainState x, y;
  RngStream shared;
};

inline CoupledState make_coupled(ChainState a, ChainState b, RngStream shared) {
  if (!(a.params.dim == b.params.dim) || !(a.params.lambda == b.params.lambda) ||
      !(a.params.domain == b.params.domain))
    throw std::invalid_argument("make_coupled: chains must share domain, dimension and fugacity");
  return CoupledState{std::move(a), std::move(b), shared};
}

struct CoupledOutcome {
  Point update;
  bool add_move = false;
};

// Identity coupling for the single-center dynamics: both chains receive the
// same update point and the same move coin; each applies its own acceptance
// test. Once the configurations and boundary conditions agree the chains are
// equal forever.
inline CoupledOutcome coupled_single_center_step(CoupledState& cs) {
  const ModelParams& p = cs.x.params;
  const Point w = uniform_point_in_box(p.domain, cs.shared);
  const bool add_move = cs.shared.uniform01() < p.lambda / (1.0 + p.lambda);
  detail::apply_center_update(cs.x.config, cs.x.params.tau, w, add_move);
  detail::apply_center_update(cs.y.config, cs.y.params.tau, w, add_move);
  ++cs.x.step;
  ++cs.y.step;
  return CoupledOutcome{w, add_move};
}

namespace detail {

// centers left after deletion that can constrain the resample region
inline std::vector<Point> relevant_boundary(const Configuration& c, const Point& x,
                                            double reach) {
  std::vector<Point> pts;
  c.for_each_within(x, reach, [&](int i) {
    pts.push_back(c.center(i));
    return true;
  });
  std::sort(pts.begin(), pts.end());
  return pts;
}

}  // namespace detail

// Identity coupling for the heat-bath dynamics: same update ball in both
// chains; if the induced boundary conditions on the ball agree, the same
// resample is used. Otherwise both chains consume one shared proposal stream,
// each accepting by its own constraint, so they disagree only where the
// constraints differ.
inline void coupled_heat_bath_step(CoupledState& cs, double update_radius,
                                   long max_attempts = kResampleDefaultBudget) {
  const ModelParams& p = cs.x.params;
  if (!(update_radius >= p.radius))
    throw std::invalid_argument("coupled_heat_bath_step: update radius must be >= sphere radius");
  const auto& interior = cs.x.config.interior();
  if (!interior) {
    ++cs.x.step;
    ++cs.y.step;
    return;
  }
  const Point x = uniform_point_in_parallel_set(*interior, update_radius, cs.shared);
  const detail::ResampleRegion reg{x, update_radius - p.radius};

  auto delete_in_region = [&](ChainState& s) {
    std::vector<int> doomed = s.config.neighbors_within(x, reg.radius);
    std::sort(doomed.begin(), doomed.end(), std::greater<int>());
    for (int i : doomed) s.config.remove_at(i);
  };
  delete_in_region(cs.x);
  delete_in_region(cs.y);

  const double reach = update_radius + p.radius;  // retained centers that can block the region
  const bool agree = cs.x.params.tau == cs.y.params.tau &&
                     detail::relevant_boundary(cs.x.config, x, reach) ==
                         detail::relevant_boundary(cs.y.config, x, reach);

  std::vector<Point> proposal, candidate, fresh_x, fresh_y;
  bool have_x = false, have_y = false;
  for (long attempt = 0; attempt < max_attempts && !(have_x && have_y); ++attempt) {
    detail::draw_region_proposal(*interior, reg, p.dim, p.lambda, cs.shared, proposal);
    if (agree) {
      if (detail::evaluate_region_proposal(cs.x.config, cs.x.params, reg, proposal, fresh_x)) {
        fresh_y = fresh_x;
        have_x = have_y = true;
      }
    } else {
      if (!have_x &&
          detail::evaluate_region_proposal(cs.x.config, cs.x.params, reg, proposal, candidate)) {
        fresh_x = candidate;
        have_x = true;
      }
      if (!have_y &&
          detail::evaluate_region_proposal(cs.y.config, cs.y.params, reg, proposal, candidate)) {
        fresh_y = candidate;
        have_y = true;
      }
    }
  }
  if (!(have_x && have_y))
    detail::resample_budget_error("coupled_heat_bath_step", max_attempts, p.lambda,
                                  ball_volume(reg.radius, p.dim));
  for (const Point& q : fresh_x) cs.x.config.add(q);
  for (const Point& q : fresh_y) cs.y.config.add(q);
  ++cs.x.step;
  ++cs.y.step;
}

// Applies `kernel` `steps` times, invoking the observer every `stride` steps.
// Trajectories are a deterministic function of the state's stream.
template <class Kernel, class Observer>
void run_chain(ChainState& s, long steps, Kernel&& kernel, Observer&& observe,
               long stride) {
  if (steps < 0) throw std::invalid_argument("run_chain: negative step count");
  if (stride < 1) throw std::invalid_argument("run_chain: stride must be >= 1");
  for (long t = 1; t <= steps; ++t) {
    kernel(s);
    if (t % stride == 0) observe(s);
  }
}

template <class Kernel>
void run_chain(ChainState& s, long steps, Kernel&& kernel) {
  run_chain(s, steps, kernel, [](const ChainState&) {}, steps + 1);
}

}  // namespace hslab
