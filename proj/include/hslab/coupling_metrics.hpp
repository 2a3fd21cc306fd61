#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "hslab/geometry.hpp"
#include "hslab/model.hpp"
#include "hslab/rng.hpp"

namespace hslab {

// Edge weights on the extended state space are 2^d - c * blocked volume with
// c = lambda 2^d / (2 + lambda 2^d); c stays in [0, 1/2] for lambda up to
// 2^{1-d}, which keeps every weight in [2^{d-1}, 2^d].
struct PreMetricParams {
  double lambda = 0.0;
  int dim = 0;
  double c = 0.0;
  long blocked_volume_samples = 4096;
};

inline PreMetricParams make_premetric_params(double lambda, int dim, long samples = 4096) {
  if (lambda < 0.0) throw std::invalid_argument("premetric: negative fugacity");
  if (dim < 1) throw std::invalid_argument("premetric: dimension must be >= 1");
  if (samples < 1) throw std::invalid_argument("premetric: samples must be >= 1");
  PreMetricParams p;
  p.lambda = lambda;
  p.dim = dim;
  const double l2d = lambda * std::pow(2.0, dim);
  p.c = l2d / (2.0 + l2d);
  p.blocked_volume_samples = samples;
  return p;
}

struct BlockedVolumes {
  double occupied = 0.0;  // |B_2r(v) ∩ blocked region|
  double free = 0.0;      // complement inside the ball; the two add to 2^d exactly
  double std_error = 0.0;
};

inline BlockedVolumes blocked_set_volumes(const Configuration& c, const BoundaryCondition& tau,
                                          const Point& v, long samples, RngStream& rng) {
  if (samples < 1) throw std::invalid_argument("blocked_set_volumes: samples must be >= 1");
  const double r = c.radius();
  const auto est = estimate_region_volume(
      [&](const Point& q) { return in_blocked_region(q, c, tau); }, v, 2.0 * r, samples, rng);
  const double ball = std::pow(2.0, c.dim());
  BlockedVolumes out;
  out.occupied = est.value;
  out.free = ball - est.value;
  out.std_error = est.std_error;
  return out;
}

namespace detail {

// Exact screen for membership of X ∪ {v} in the extended state space when X
// is itself pairwise-separated: a new triple overlap needs two existing
// centers within 2r of v that are also within 2r of each other.
inline bool union_star_screen(const Configuration& c, const Point& v) {
  const double r = c.radius();
  std::vector<int> close = c.neighbors_within(v, 2.0 * r);
  for (std::size_t a = 0; a < close.size(); ++a)
    for (std::size_t b = a + 1; b < close.size(); ++b)
      if (dist2(c.center(close[a]), c.center(close[b])) < 4.0 * r * r) return false;
  return true;
}

}  // namespace detail

// Weight of the edge between X and X ∪ {v}; deterministic given the stream.
inline double premetric_edge_weight(const Configuration& x, const BoundaryCondition& tau,
                                    const Point& v, const PreMetricParams& pm, RngStream& rng) {
  if (!x.interior() || !inside_margin(x.domain(), v, x.radius()))
    throw std::invalid_argument("premetric_edge_weight: new center outside the legal interior");
  StarVerdict sv;
  if (!detail::union_star_screen(x, v)) {
    Configuration u = x;
    u.add(v);
    sv = is_star_configuration(u, pm.blocked_volume_samples, rng);
    if (!sv.is_star)
      throw std::invalid_argument("premetric_edge_weight: union leaves the extended state space");
  }
  const auto bv = blocked_set_volumes(x, tau, v, pm.blocked_volume_samples, rng);
  return std::pow(2.0, pm.dim) - pm.c * bv.occupied;
}

// Number of centers in the symmetric difference, matched by exact coordinates.
inline long hamming_distance(const Configuration& a, const Configuration& b) {
  std::vector<Point> sa = a.centers(), sb = b.centers();
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  long shared = 0;
  std::size_t i = 0, j = 0;
  while (i < sa.size() && j < sb.size()) {
    if (sa[i] == sb[j]) {
      ++shared;
      ++i;
      ++j;
    } else if (sa[i] < sb[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return static_cast<long>(sa.size() + sb.size()) - 2 * shared;
}

// Certified upper bound on the path metric between X and Y: through the union
// when it stays in the extended state space, otherwise through the empty
// configuration. Edge weights are Monte Carlo estimates.
inline double star_path_distance_bound(const Configuration& x, const Configuration& y,
                                       const BoundaryCondition& tau, const PreMetricParams& pm,
                                       RngStream& rng) {
  std::vector<Point> only_x, only_y;
  {
    std::vector<Point> sx = x.centers(), sy = y.centers();
    std::sort(sx.begin(), sx.end());
    std::sort(sy.begin(), sy.end());
    std::set_difference(sx.begin(), sx.end(), sy.begin(), sy.end(), std::back_inserter(only_x));
    std::set_difference(sy.begin(), sy.end(), sx.begin(), sx.end(), std::back_inserter(only_y));
  }
  if (only_x.empty() && only_y.empty()) return 0.0;

  Configuration uni = x;
  for (const Point& q : only_y) uni.add(q);
  const bool union_ok = is_star_configuration(uni, pm.blocked_volume_samples, rng).is_star;

  double total = 0.0;
  auto add_path = [&](const Configuration& base, const std::vector<Point>& extras) {
    Configuration cur = base;
    for (const Point& q : extras) {
      const auto bv = blocked_set_volumes(cur, tau, q, pm.blocked_volume_samples, rng);
      total += std::pow(2.0, pm.dim) - pm.c * bv.occupied;
      cur.add(q);
    }
  };
  if (union_ok) {
    add_path(x, only_y);  // X -> X ∪ Y
    add_path(y, only_x);  // Y -> X ∪ Y
  } else {
    // tear each configuration down to the empty set, edge by edge
    auto teardown = [&](const Configuration& from) {
      Configuration cur = from;
      while (cur.size() > 0) {
        const Point q = cur.center(cur.size() - 1);
        cur.remove_at(cur.size() - 1);
        const auto bv = blocked_set_volumes(cur, tau, q, pm.blocked_volume_samples, rng);
        total += std::pow(2.0, pm.dim) - pm.c * bv.occupied;
      }
    };
    teardown(x);
    teardown(y);
  }
  return total;
}

// Centers of spheres entirely contained in the sub-box; the result is a
// configuration on the sub-box.
inline Configuration project_to_subregion(const Configuration& c, const Box& sub) {
  for (int i = 0; i < c.dim(); ++i)
    if (sub.low[i] < c.domain().low[i] || sub.high[i] > c.domain().high[i])
      throw std::invalid_argument("project_to_subregion: sub-box not contained in the domain");
  Configuration out(sub, c.radius());
  for (int i = 0; i < c.size(); ++i)
    if (inside_margin(sub, c.center(i), c.radius())) out.add(c.center(i));
  return out;
}

inline bool projections_equal(const Configuration& a, const Configuration& b, const Box& sub) {
  Configuration pa = project_to_subregion(a, sub);
  Configuration pb = project_to_subregion(b, sub);
  if (pa.size() != pb.size()) return false;
  std::vector<Point> va = pa.centers(), vb = pb.centers();
  std::sort(va.begin(), va.end());
  std::sort(vb.begin(), vb.end());
  return va == vb;
}

// Discrete statistic of the projected configuration: sphere count in the
// sub-box interior plus the bitmask of occupied grid cells.
struct OccupancyKey {
  long count = 0;
  std::uint64_t mask = 0;
  bool operator==(const OccupancyKey& o) const { return count == o.count && mask == o.mask; }
  bool operator<(const OccupancyKey& o) const {
    return count != o.count ? count < o.count : mask < o.mask;
  }
};

struct OccupancyStatistic {
  Box subregion;
  int grid_per_axis = 4;

  OccupancyKey operator()(const Configuration& c) const {
    double cells = std::pow(grid_per_axis, subregion.dim());
    if (cells > 64.0) throw std::invalid_argument("OccupancyStatistic: more than 64 grid cells");
    OccupancyKey key;
    for (int i = 0; i < c.size(); ++i) {
      const Point& p = c.center(i);
      if (!inside_margin(subregion, p, c.radius())) continue;
      ++key.count;
      int cell = 0;
      for (int ax = 0; ax < subregion.dim(); ++ax) {
        const double t = (p[ax] - subregion.low[ax]) / subregion.side(ax);
        const int b = std::min(grid_per_axis - 1,
                               std::max(0, static_cast<int>(t * grid_per_axis)));
        cell = cell * grid_per_axis + b;
      }
      key.mask |= (1ULL << cell);
    }
    return key;
  }
};

struct TvEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long samples_a = 0;
  long samples_b = 0;
};

// Half the L1 distance between the empirical distributions of a discrete
// statistic. A lower bound (in expectation, up to plug-in bias) for the total
// variation between the projected laws, by data processing.
inline TvEstimate tv_lower_bound_from_statistics(const std::vector<OccupancyKey>& a,
                                                 const std::vector<OccupancyKey>& b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("tv_lower_bound_from_statistics: empty sample list");
  std::map<OccupancyKey, std::pair<long, long>> counts;
  for (const auto& k : a) counts[k].first++;
  for (const auto& k : b) counts[k].second++;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double l1 = 0.0, var = 0.0;
  for (const auto& [key, cnt] : counts) {
    const double pa = static_cast<double>(cnt.first) / na;
    const double pb = static_cast<double>(cnt.second) / nb;
    l1 += std::abs(pa - pb);
    var += pa * (1.0 - pa) / na + pb * (1.0 - pb) / nb;
  }
  TvEstimate tv;
  tv.value = 0.5 * l1;
  tv.std_error = 0.5 * std::sqrt(var);
  tv.samples_a = static_cast<long>(a.size());
  tv.samples_b = static_cast<long>(b.size());
  return tv;
}

}  // namespace hslab
