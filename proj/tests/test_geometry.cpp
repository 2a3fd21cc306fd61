#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "hslab/geometry.hpp"

using namespace hslab;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("unit-volume sphere radius") {
  CHECK(sphere_radius(1) == Catch::Approx(0.5).margin(1e-12));
  CHECK(sphere_radius(2) == Catch::Approx(1.0 / std::sqrt(kPi)).margin(1e-12));
  CHECK(sphere_radius(2) == Catch::Approx(0.564190).margin(1e-6));
  CHECK(sphere_radius(3) == Catch::Approx(std::cbrt(3.0 / (4.0 * kPi))).margin(1e-12));
  CHECK(sphere_radius(3) == Catch::Approx(0.620350).margin(1e-6));
  CHECK_THROWS_AS(sphere_radius(0), std::invalid_argument);
}

TEST_CASE("ball volumes in unit-sphere units") {
  for (int d = 1; d <= 10; ++d) {
    const double r = sphere_radius(d);
    CHECK(ball_volume(2.0 * r, d) == std::pow(2.0, d));  // exact
    CHECK(ball_volume(r, d) == Catch::Approx(1.0).margin(1e-12));
  }
  CHECK(ball_volume(1.0, 2) == Catch::Approx(kPi).margin(1e-12));
  CHECK_THROWS_AS(ball_volume(-0.1, 2), std::invalid_argument);
}

TEST_CASE("box interior shrink") {
  const Box b = make_cube(2, 2.0);
  const auto inner = box_interior(b, 0.5);
  REQUIRE(inner);
  CHECK(inner->low[0] == 0.5);
  CHECK(inner->high[1] == 1.5);
  CHECK_FALSE(box_interior(make_cube(2, 1.0), 0.6));
  const auto same = box_interior(b, 0.0);
  REQUIRE(same);
  CHECK(*same == b);
  CHECK_THROWS_AS(box_interior(b, -1.0), std::invalid_argument);
}

TEST_CASE("parallel set volume: closed form") {
  const Box sq = make_cube(2, 1.0);
  CHECK(parallel_set_volume(sq, 1.0) == Catch::Approx(1.0 + 4.0 + kPi).margin(1e-12));
  CHECK(parallel_set_volume(sq, 0.0) == Catch::Approx(sq.volume()).margin(1e-15));
  const Box b3 = make_box(make_point({0, 0, 0}), make_point({2, 3, 4}));
  // d=3 Steiner: abc + 2(ab+ac+bc) ell + pi (a+b+c) ell^2 + (4/3) pi ell^3
  const double ell = 0.7;
  const double expected = 24.0 + 2.0 * (6.0 + 8.0 + 12.0) * ell + kPi * 9.0 * ell * ell +
                          4.0 / 3.0 * kPi * ell * ell * ell;
  CHECK(parallel_set_volume(b3, ell) == Catch::Approx(expected).margin(1e-10));
}

TEST_CASE("parallel set growth inequality on random boxes") {
  RngStream rng(2024, 0);
  for (int d : {2, 3}) {
    const double r = sphere_radius(d);
    for (int rep = 0; rep < 100; ++rep) {
      Point lo = zero_point(d), hi = zero_point(d);
      for (int i = 0; i < d; ++i) hi[i] = rng.uniform(0.2, 8.0);
      const Box box = make_box(lo, hi);
      const double L = rng.uniform(r, 10.0 * r);
      CHECK(parallel_set_volume(box, L) <=
            std::pow(L / r, d) * parallel_set_volume(box, r) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("parallel set volume agrees with hit-or-miss estimate") {
  const Box box = make_box(make_point({0.0, 0.0}), make_point({1.5, 2.5}));
  const double ell = 0.8;
  RngStream rng(7, 0);
  const Point c = box.center();
  const double radius = 0.5 * box.diameter() + ell + 0.1;
  const auto est = estimate_region_volume(
      [&](const Point& p) { return box.distance_to(p) <= ell; }, c, radius, 200000, rng);
  const double exact = parallel_set_volume(box, ell);
  CHECK(std::abs(est.value - exact) <= 4.0 * est.std_error);
}

TEST_CASE("uniform sample in parallel set") {
  const Box box = make_box(make_point({0.0, 0.0}), make_point({2.0, 1.0}));
  const double ell = 0.7;
  RngStream rng(11, 0);

  SECTION("radius zero degenerates to the box") {
    for (int i = 0; i < 200; ++i) CHECK(box.contains(uniform_point_in_parallel_set(box, 0.0, rng)));
  }

  SECTION("acceptance fraction equals the volume ratio") {
    Box outer = box;
    for (int i = 0; i < 2; ++i) {
      outer.low[i] -= ell;
      outer.high[i] += ell;
    }
    const long n = 200000;
    long inside = 0;
    for (long i = 0; i < n; ++i)
      if (box.distance_to(uniform_point_in_box(outer, rng)) <= ell) ++inside;
    const double p = static_cast<double>(inside) / n;
    const double expect = parallel_set_volume(box, ell) / outer.volume();
    CHECK(std::abs(p - expect) <= 4.0 * std::sqrt(expect * (1 - expect) / n));
  }

  SECTION("first-coordinate marginal matches the slab profile") {
    // cross-section of the parallel set at coordinate t is itself a lower-
    // dimensional parallel set; integrate it to get the exact marginal CDF
    auto cross = [&](double t) {
      const Box strip = make_box(make_point({box.low[1]}), make_point({box.high[1]}));
      double reach;
      if (t < box.low[0])
        reach = ell * ell - (box.low[0] - t) * (box.low[0] - t);
      else if (t > box.high[0])
        reach = ell * ell - (t - box.high[0]) * (t - box.high[0]);
      else
        reach = ell * ell;
      if (reach < 0.0) return 0.0;
      return parallel_set_volume(strip, std::sqrt(reach));
    };
    const double a = box.low[0] - ell, b = box.high[0] + ell;
    const int grid = 4000;
    std::vector<double> cdf(grid + 1, 0.0);
    for (int i = 1; i <= grid; ++i) {
      const double t0 = a + (b - a) * (i - 1) / grid;
      const double t1 = a + (b - a) * i / grid;
      cdf[i] = cdf[i - 1] + 0.5 * (cross(t0) + cross(t1)) * (t1 - t0);
    }
    for (auto& v : cdf) v /= cdf.back();

    const long n = 100000;
    std::vector<double> xs(n);
    for (long i = 0; i < n; ++i) xs[i] = uniform_point_in_parallel_set(box, ell, rng)[0];
    std::sort(xs.begin(), xs.end());
    double ks = 0.0;
    for (long i = 0; i < n; ++i) {
      const double t = xs[i];
      const double pos = (t - a) / (b - a) * grid;
      const int k = std::min<int>(grid - 1, std::max(0, static_cast<int>(pos)));
      const double frac = pos - k;
      const double F = cdf[k] * (1 - frac) + cdf[k + 1] * frac;
      ks = std::max(ks, std::abs(F - static_cast<double>(i + 1) / n));
    }
    CHECK(ks <= 0.02);
  }
}

TEST_CASE("hit-or-miss volume estimator") {
  const int d = 2;
  const double r = sphere_radius(d);
  const Point c = make_point({0.0, 0.0});
  RngStream rng(3, 0);

  const auto full = estimate_region_volume([](const Point&) { return true; }, c, 2.0 * r, 1000, rng);
  CHECK(full.value == 4.0);
  CHECK(full.std_error == 0.0);

  const auto none =
      estimate_region_volume([](const Point&) { return false; }, c, 2.0 * r, 1000, rng);
  CHECK(none.value == 0.0);
  CHECK(none.std_error == 0.0);

  const auto half = estimate_region_volume([](const Point& p) { return p[0] > 0.0; }, c, 2.0 * r,
                                           100000, rng);
  CHECK(std::abs(half.value - 2.0) <= 3.0 * half.std_error);

  CHECK_THROWS_AS(estimate_region_volume([](const Point&) { return true; }, c, 1.0, 0, rng),
                  std::invalid_argument);
}

TEST_CASE("cell grid neighbor queries match brute force") {
  const int d = 2;
  const Box box = make_cube(d, 6.0);
  const double cell = 1.1;
  RngStream rng(99, 0);

  CellGrid grid(box, cell);
  std::vector<Point> pts;
  for (int i = 0; i < 2000; ++i) {
    pts.push_back(uniform_point_in_box(box, rng));
    grid.insert(static_cast<std::uint32_t>(i), pts.back());
  }

  auto grid_query = [&](const Point& x, double ell) {
    std::set<int> found;
    grid.visit_near(x, ell, [&](std::uint32_t id) {
      if (dist2(x, pts[id]) < ell * ell) found.insert(static_cast<int>(id));
      return true;
    });
    return found;
  };
  auto brute_query = [&](const Point& x, double ell) {
    std::set<int> found;
    for (int i = 0; i < static_cast<int>(pts.size()); ++i)
      if (dist2(x, pts[i]) < ell * ell) found.insert(i);
    return found;
  };

  for (int q = 0; q < 200; ++q) {
    Point x = uniform_point_in_box(box, rng);
    // nudge some query points outside the box
    if (q % 5 == 0) x[0] += 1.5;
    for (double ell : {0.35, cell, 1.9 * cell}) CHECK(grid_query(x, ell) == brute_query(x, ell));
  }

  SECTION("erase and reindex keep buckets consistent") {
    grid.erase(17, pts[17]);
    auto found = grid_query(pts[17], 1e-9);
    CHECK(found.count(17) == 0);
  }
}
