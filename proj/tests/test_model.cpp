#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "hslab/model.hpp"

using namespace hslab;

namespace {

// box whose interior diameter stays below 2r, so at most one sphere fits
Box single_sphere_box(int d, double side_factor = 0.7) {
  const double r = sphere_radius(d);
  const double max_side = 2.0 * r + 2.0 * r / std::sqrt(static_cast<double>(d));
  return make_cube(d, 2.0 * r + side_factor * (max_side - 2.0 * r));
}

}  // namespace

TEST_CASE("blocked point membership") {
  const auto params = make_model_params(2, 0.5, make_cube(2, 8.0));
  const double r = params.radius;
  Configuration c = make_configuration(params);

  CHECK_FALSE(is_blocked_point(make_point({4.0, 4.0}), c, params.tau));
  CHECK(is_blocked_point(make_point({0.5 * r, 4.0}), c, params.tau));  // boundary band
  CHECK_THROWS_AS(is_blocked_point(make_point({-1.0, 4.0}), c, params.tau),
                  std::invalid_argument);

  c.add(make_point({4.0, 4.0}));
  CHECK(is_blocked_point(make_point({4.0 + 1.9 * r, 4.0}), c, params.tau));
  CHECK_FALSE(is_blocked_point(make_point({4.0 + 2.1 * r, 4.0}), c, params.tau));

  BoundaryCondition tau;
  tau.forbidden_balls.push_back(Ball{make_point({6.0, 6.0}), 0.5});
  CHECK(is_blocked_point(make_point({6.1, 6.0}), c, tau));
}

TEST_CASE("configuration validity and the extended class") {
  const auto params = make_model_params(2, 0.5, make_cube(2, 8.0));
  const double r = params.radius;
  RngStream rng(5, 0);

  Configuration empty = make_configuration(params);
  CHECK(is_valid_configuration(empty, params.tau));
  CHECK(is_star_configuration(empty, 1000, rng).is_star);

  Configuration pair = make_configuration(params);
  pair.add(make_point({4.0, 4.0}));
  pair.add(make_point({4.0 + 1.5 * r, 4.0}));
  CHECK_FALSE(is_valid_configuration(pair, params.tau));
  CHECK(is_star_configuration(pair, 2000, rng).is_star);

  Configuration triple = make_configuration(params);
  for (int i = 0; i < 3; ++i) triple.add(make_point({4.0, 4.0}));
  const auto verdict = is_star_configuration(triple, 2000, rng);
  CHECK_FALSE(verdict.is_star);

  BoundaryCondition tau;
  tau.forbidden_balls.push_back(Ball{make_point({4.0, 4.0}), 0.3});
  Configuration inside_tau = make_configuration(params);
  inside_tau.add(make_point({4.0, 4.0}));
  CHECK_FALSE(is_valid_configuration(inside_tau, tau));
  CHECK(is_valid_configuration(inside_tau, params.tau));
}

TEST_CASE("rejection sampler") {
  SECTION("zero fugacity gives the empty configuration") {
    const auto params = make_model_params(2, 0.0, make_cube(2, 5.0));
    RngStream rng(1, 0);
    for (int i = 0; i < 50; ++i) {
      const auto s = sample_hard_sphere_rejection(params, rng, 10);
      CHECK(s.config.size() == 0);
      CHECK(s.attempts == 1);
    }
  }

  SECTION("single-sphere box count law matches the closed form") {
    const Box box = single_sphere_box(2);
    const auto params = make_model_params(2, 1.0, box);
    const double area = box_interior(box, params.radius)->volume();
    const double p1 = params.lambda * area / (1.0 + params.lambda * area);
    RngStream rng(42, 0);
    const long n = 100000;
    long ones = 0;
    for (long i = 0; i < n; ++i) {
      const auto s = sample_hard_sphere_rejection(params, rng, 100000);
      REQUIRE(s.config.size() <= 1);
      ones += s.config.size();
    }
    const double phat = static_cast<double>(ones) / n;
    CHECK(std::abs(phat - p1) <= 3.0 * std::sqrt(p1 * (1.0 - p1) / n));
  }

  SECTION("acceptance rate is recorded and positive at moderate density") {
    const auto params = make_model_params(2, 0.25, make_cube(2, 10.0));
    RngStream rng(7, 0);
    const auto s = sample_hard_sphere_rejection(params, rng, 2000000);
    CHECK(s.attempts >= 1);
    CHECK(1.0 / static_cast<double>(s.attempts) > 0.0);
  }

  SECTION("budget exhaustion is loud") {
    const auto params = make_model_params(2, 50.0, make_cube(2, 10.0));
    RngStream rng(7, 0);
    CHECK_THROWS_AS(sample_hard_sphere_rejection(params, rng, 3), std::runtime_error);
  }
}

TEST_CASE("small-domain oracle") {
  SECTION("single-sphere closed form") {
    const Box box = single_sphere_box(2);
    const auto params = make_model_params(2, 1.5, box);
    const double area = box_interior(box, params.radius)->volume();
    const auto o = oracle_small_domain(params, 1, 200);
    CHECK(o.partition_function == Catch::Approx(1.0 + params.lambda * area).epsilon(1e-9));
    CHECK(o.expected_count ==
          Catch::Approx(params.lambda * area / (1.0 + params.lambda * area)).epsilon(1e-9));
    CHECK(o.count_pmf.size() == 2);
    CHECK(o.count_pmf[0] + o.count_pmf[1] == Catch::Approx(1.0).margin(1e-12));
  }

  SECTION("zero fugacity") {
    const auto params = make_model_params(2, 0.0, single_sphere_box(2));
    const auto o = oracle_small_domain(params, 1, 50);
    CHECK(o.partition_function == 1.0);
    CHECK(o.expected_count == 0.0);
  }

  SECTION("two-sphere quadrature converges under refinement") {
    const double r = sphere_radius(2);
    const Box box = make_box(make_point({0.0, 0.0}), make_point({4.6 * r, 2.5 * r}));
    const auto params = make_model_params(2, 0.8, box);
    const double e25 = oracle_small_domain(params, 2, 25).expected_count;
    const double e50 = oracle_small_domain(params, 2, 50).expected_count;
    const double e100 = oracle_small_domain(params, 2, 100).expected_count;
    CHECK(std::abs(e100 - e50) < 1e-3);
    CHECK(std::abs(e100 - e50) <= std::abs(e50 - e25) + 1e-6);
  }

  SECTION("enlarging the forbidden set never increases the normalizer") {
    const Box box = single_sphere_box(2);
    const Point c = box.center();
    for (double rad : {0.1, 0.2, 0.3}) {
      BoundaryCondition small_tau, big_tau;
      small_tau.forbidden_balls.push_back(Ball{c, rad});
      big_tau.forbidden_balls.push_back(Ball{c, rad + 0.1});
      const auto zs = oracle_small_domain(make_model_params(2, 1.0, box, small_tau), 1, 150)
                          .partition_function;
      const auto zb = oracle_small_domain(make_model_params(2, 1.0, box, big_tau), 1, 150)
                          .partition_function;
      CHECK(zb <= zs + 1e-12);
    }
  }

  SECTION("domains that fit too many spheres are rejected with the extent") {
    const auto params = make_model_params(2, 1.0, make_cube(2, 10.0));
    CHECK_THROWS_WITH(oracle_small_domain(params, 1, 50),
                      Catch::Matchers::ContainsSubstring("diameter"));
    CHECK_THROWS_AS(oracle_small_domain(params, 2, 50), std::invalid_argument);
    CHECK_THROWS_AS(oracle_small_domain(params, 3, 50), std::invalid_argument);
  }
}

TEST_CASE("valid configurations are star configurations") {
  const auto params = make_model_params(2, 0.3, make_cube(2, 7.0));
  RngStream rng(13, 0);
  for (int i = 0; i < 20; ++i) {
    const auto s = sample_hard_sphere_rejection(params, rng, 1000000);
    REQUIRE(is_valid_configuration(s.config, params.tau));
    CHECK(is_star_configuration(s.config, 500, rng).is_star);
  }
}

TEST_CASE("free volume fraction estimate") {
  const auto params = make_model_params(2, 0.5, make_cube(2, 6.0));
  RngStream rng(21, 0);

  SECTION("empty configuration frees the whole interior") {
    Configuration c = make_configuration(params);
    const auto est = free_volume_fraction_estimate(c, params.tau, 200000, rng);
    const double expect = c.interior_volume() / c.domain().volume();
    CHECK(std::abs(est.fraction - expect) <= 3.0 * est.std_error);
  }

  SECTION("a saturating artificial packing leaves nothing free") {
    Configuration c = make_configuration(params);
    for (double x = 0.3; x < 6.0; x += 0.9)
      for (double y = 0.3; y < 6.0; y += 0.9) c.add(make_point({x, y}));
    const auto est = free_volume_fraction_estimate(c, params.tau, 20000, rng);
    CHECK(est.fraction == 0.0);
    CHECK(est.std_error == 0.0);
  }

  CHECK_THROWS_AS(
      free_volume_fraction_estimate(make_configuration(params), params.tau, 0, rng),
      std::invalid_argument);
}
