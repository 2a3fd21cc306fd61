#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hslab/rng.hpp"

namespace hslab {

inline constexpr int kMaxDim = 16;

// A point in R^d with inline storage; dim is fixed per experiment.
struct Point {
  std::array<double, kMaxDim> coord{};
  int dim = 0;

  double& operator[](int i) { return coord[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return coord[static_cast<std::size_t>(i)]; }

  bool operator==(const Point& o) const {
    if (dim != o.dim) return false;
    for (int i = 0; i < dim; ++i)
      if (coord[static_cast<std::size_t>(i)] != o.coord[static_cast<std::size_t>(i)]) return false;
    return true;
  }
  bool operator<(const Point& o) const {  // lexicographic, exact coordinates
    for (int i = 0; i < dim && i < o.dim; ++i) {
      if ((*this)[i] < o[i]) return true;
      if ((*this)[i] > o[i]) return false;
    }
    return dim < o.dim;
  }
};

inline Point make_point(std::initializer_list<double> xs) {
  if (xs.size() == 0 || xs.size() > static_cast<std::size_t>(kMaxDim))
    throw std::invalid_argument("make_point: dimension out of range");
  Point p;
  p.dim = static_cast<int>(xs.size());
  int i = 0;
  for (double v : xs) p.coord[static_cast<std::size_t>(i++)] = v;
  return p;
}

inline Point zero_point(int dim) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("zero_point: dimension out of range");
  Point p;
  p.dim = dim;
  return p;
}

inline double dist2(const Point& a, const Point& b) {
  double s = 0.0;
  for (int i = 0; i < a.dim; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double dist(const Point& a, const Point& b) { return std::sqrt(dist2(a, b)); }

// Axis-aligned box with strictly positive side lengths.
struct Box {
  Point low, high;

  int dim() const { return low.dim; }
  double side(int i) const { return high[i] - low[i]; }

  double volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= side(i);
    return v;
  }

  double diameter() const {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) s += side(i) * side(i);
    return std::sqrt(s);
  }

  bool contains(const Point& p) const {
    for (int i = 0; i < dim(); ++i)
      if (p[i] < low[i] || p[i] > high[i]) return false;
    return true;
  }

  // Euclidean distance from p to the (closed) box
  double distance_to(const Point& p) const {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) {
      const double below = low[i] - p[i];
      const double above = p[i] - high[i];
      const double g = std::max({below, above, 0.0});
      s += g * g;
    }
    return std::sqrt(s);
  }

  Point center() const {
    Point c = low;
    for (int i = 0; i < dim(); ++i) c[i] = 0.5 * (low[i] + high[i]);
    return c;
  }

  bool operator==(const Box& o) const { return low == o.low && high == o.high; }
};

inline Box make_box(const Point& low, const Point& high) {
  if (low.dim != high.dim) throw std::invalid_argument("make_box: dimension mismatch");
  for (int i = 0; i < low.dim; ++i)
    if (!(high[i] > low[i])) throw std::invalid_argument("make_box: sides must be positive");
  return Box{low, high};
}

inline Box make_cube(int dim, double side, double origin = 0.0) {
  Point lo = zero_point(dim), hi = zero_point(dim);
  for (int i = 0; i < dim; ++i) {
    lo[i] = origin;
    hi[i] = origin + side;
  }
  return make_box(lo, hi);
}

struct Ball {
  Point center;
  double radius = 0.0;
  bool operator==(const Ball& o) const { return center == o.center && radius == o.radius; }
};

// true iff p lies in the box shrunk by `margin` on every side (closed)
inline bool inside_margin(const Box& b, const Point& p, double margin) {
  for (int i = 0; i < b.dim(); ++i)
    if (p[i] < b.low[i] + margin || p[i] > b.high[i] - margin) return false;
  return true;
}

// Radius of the d-ball of unit volume: r_d = Gamma(d/2+1)^{1/d} / sqrt(pi).
inline double sphere_radius(int d) {
  if (d < 1) throw std::invalid_argument("sphere_radius: dimension must be >= 1");
  const double half = 0.5 * static_cast<double>(d);
  return std::exp(std::lgamma(half + 1.0) / static_cast<double>(d)) /
         std::sqrt(3.14159265358979323846264338327950288);
}

// Volume of the unit-radius k-ball (kappa_0 = 1).
inline double unit_ball_volume(int k) {
  if (k < 0) throw std::invalid_argument("unit_ball_volume: negative dimension");
  if (k == 0) return 1.0;
  const double half = 0.5 * static_cast<double>(k);
  return std::pow(3.14159265358979323846264338327950288, half) / std::tgamma(half + 1.0);
}

// Lebesgue volume of a radius-ell ball in d dimensions, in units where the
// radius-r_d ball has volume one: (ell / r_d)^d.
inline double ball_volume(double ell, int d) {
  if (ell < 0.0) throw std::invalid_argument("ball_volume: negative radius");
  return std::pow(ell / sphere_radius(d), d);
}

// Shrinks every side by `margin` at both ends; empty when any side collapses.
inline std::optional<Box> box_interior(const Box& box, double margin) {
  if (margin < 0.0) throw std::invalid_argument("box_interior: negative margin");
  Box r = box;
  for (int i = 0; i < box.dim(); ++i) {
    r.low[i] = box.low[i] + margin;
    r.high[i] = box.high[i] - margin;
    if (!(r.high[i] > r.low[i])) return std::nullopt;
  }
  return r;
}

// Exact volume of the ell-parallel set of a box (Steiner formula):
// sum_k kappa_k ell^k e_{d-k}(sides), with e_j the elementary symmetric polynomials.
inline double parallel_set_volume(const Box& box, double ell) {
  if (ell < 0.0) throw std::invalid_argument("parallel_set_volume: negative radius");
  const int d = box.dim();
  std::array<double, kMaxDim + 1> e{};  // e[j] = elementary symmetric of degree j
  e[0] = 1.0;
  for (int i = 0; i < d; ++i) {
    const double s = box.side(i);
    for (int j = i + 1; j >= 1; --j) e[static_cast<std::size_t>(j)] += s * e[static_cast<std::size_t>(j - 1)];
  }
  double total = 0.0;
  double ell_k = 1.0;
  for (int k = 0; k <= d; ++k) {
    total += unit_ball_volume(k) * ell_k * e[static_cast<std::size_t>(d - k)];
    ell_k *= ell;
  }
  return total;
}

inline Point uniform_point_in_box(const Box& box, RngStream& rng) {
  Point p = zero_point(box.dim());
  for (int i = 0; i < box.dim(); ++i) p[i] = box.low[i] + box.side(i) * rng.uniform01();
  return p;
}

// Uniform in the open ball of radius `radius` around `center`; Gaussian
// direction plus U^{1/d} radial scaling, so the cost is dimension independent.
inline Point uniform_point_in_ball(const Point& center, double radius, RngStream& rng) {
  const int d = center.dim;
  Point g = zero_point(d);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (int i = 0; i < d; ++i) {
      g[i] = rng.normal();
      norm2 += g[i] * g[i];
    }
  } while (norm2 == 0.0);
  const double scale = radius * std::pow(rng.uniform01(), 1.0 / static_cast<double>(d)) / std::sqrt(norm2);
  Point p = center;
  for (int i = 0; i < d; ++i) p[i] += scale * g[i];
  return p;
}

// Uniform sample from the ell-parallel set of `box`, by rejection from the
// box expanded by ell per side.
inline Point uniform_point_in_parallel_set(const Box& box, double ell, RngStream& rng) {
  if (ell < 0.0) throw std::invalid_argument("uniform_point_in_parallel_set: negative radius");
  if (ell == 0.0) return uniform_point_in_box(box, rng);
  Box outer = box;
  for (int i = 0; i < box.dim(); ++i) {
    outer.low[i] -= ell;
    outer.high[i] += ell;
  }
  for (;;) {
    Point p = uniform_point_in_box(outer, rng);
    if (box.distance_to(p) <= ell) return p;
  }
}

struct VolumeEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long hits = 0;
  long samples = 0;
};

// Hit-or-miss Monte Carlo volume of {x in B_radius(center) : inside(x)}.
template <class Pred>
VolumeEstimate estimate_region_volume(Pred&& inside, const Point& center, double radius,
                                      long samples, RngStream& rng) {
  if (samples < 1) throw std::invalid_argument("estimate_region_volume: samples must be >= 1");
  long hits = 0;
  for (long i = 0; i < samples; ++i)
    if (inside(uniform_point_in_ball(center, radius, rng))) ++hits;
  const double ball = ball_volume(radius, center.dim);
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  VolumeEstimate est;
  est.hits = hits;
  est.samples = samples;
  est.value = ball * p;
  est.std_error = ball * std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
  return est;
}

// Uniform grid over a box bucketing stored center indices; neighbor queries
// visit only the cells intersecting the query ball. Dense cell storage: the
// domains here are small boxes, never sparse universes.
class CellGrid {
 public:
  CellGrid() = default;

  CellGrid(const Box& bounds, double cell_side) : bounds_(bounds), side_(cell_side) {
    if (!(cell_side > 0.0)) throw std::invalid_argument("CellGrid: cell side must be positive");
    std::size_t total = 1;
    for (int i = 0; i < bounds.dim(); ++i) {
      ncells_[static_cast<std::size_t>(i)] =
          std::max(1L, static_cast<long>(std::ceil(bounds.side(i) / cell_side)));
      stride_[static_cast<std::size_t>(i)] = total;
      total *= static_cast<std::size_t>(ncells_[static_cast<std::size_t>(i)]);
      if (total > (1u << 26)) throw std::invalid_argument("CellGrid: too many cells");
    }
    buckets_.assign(total, {});
  }

  double cell_side() const { return side_; }

  void insert(std::uint32_t id, const Point& p) { buckets_[key_of(p)].push_back(id); }

  void erase(std::uint32_t id, const Point& p) {
    auto& b = buckets_[key_of(p)];
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (b[i] == id) {
        b[i] = b.back();
        b.pop_back();
        return;
      }
    }
    throw std::logic_error("CellGrid::erase: id not found in its bucket");
  }

  void reindex(std::uint32_t old_id, std::uint32_t new_id, const Point& p) {
    for (auto& v : buckets_[key_of(p)]) {
      if (v == old_id) {
        v = new_id;
        return;
      }
    }
    throw std::logic_error("CellGrid::reindex: id not found in its bucket");
  }

  // Visits every stored id whose cell intersects [x - ell, x + ell]; the
  // caller filters by exact distance. Visitor returns false to stop early.
  template <class Visitor>
  bool visit_near(const Point& x, double ell, Visitor&& visit) const {
    const int d = bounds_.dim();
    std::array<long, kMaxDim> lo{}, hi{}, cur{};
    for (int i = 0; i < d; ++i) {
      lo[static_cast<std::size_t>(i)] = clamp_index(i, x[i] - ell);
      hi[static_cast<std::size_t>(i)] = clamp_index(i, x[i] + ell);
      cur[static_cast<std::size_t>(i)] = lo[static_cast<std::size_t>(i)];
    }
    for (;;) {
      std::size_t key = 0;
      for (int i = 0; i < d; ++i)
        key += static_cast<std::size_t>(cur[static_cast<std::size_t>(i)]) * stride_[static_cast<std::size_t>(i)];
      for (std::uint32_t id : buckets_[key])
        if (!visit(id)) return false;
      int axis = 0;
      while (axis < d) {
        if (++cur[static_cast<std::size_t>(axis)] <= hi[static_cast<std::size_t>(axis)]) break;
        cur[static_cast<std::size_t>(axis)] = lo[static_cast<std::size_t>(axis)];
        ++axis;
      }
      if (axis == d) return true;
    }
  }

 private:
  long clamp_index(int axis, double x) const {
    const long n = ncells_[static_cast<std::size_t>(axis)];
    const long raw = static_cast<long>(std::floor((x - bounds_.low[axis]) / side_));
    return std::min(n - 1, std::max(0L, raw));
  }

  std::size_t key_of(const Point& p) const {
    std::size_t key = 0;
    for (int i = 0; i < bounds_.dim(); ++i)
      key += static_cast<std::size_t>(clamp_index(i, p[i])) * stride_[static_cast<std::size_t>(i)];
    return key;
  }

  Box bounds_;
  double side_ = 1.0;
  std::array<long, kMaxDim> ncells_{};
  std::array<std::size_t, kMaxDim> stride_{};
  std::vector<std::vector<std::uint32_t>> buckets_;
};

}  // namespace hslab
