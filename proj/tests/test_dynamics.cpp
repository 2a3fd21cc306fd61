#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "hslab/coupling_metrics.hpp"
#include "hslab/dynamics.hpp"
#include "hslab/model.hpp"

using namespace hslab;

namespace {

bool configs_equal(const Configuration& a, const Configuration& b) {
  if (a.size() != b.size()) return false;
  std::vector<Point> va = a.centers(), vb = b.centers();
  std::sort(va.begin(), va.end());
  std::sort(vb.begin(), vb.end());
  return va == vb;
}

}  // namespace

TEST_CASE("single-center dynamics at zero fugacity empties the box") {
  const auto params = make_model_params(2, 0.0, make_cube(2, 3.0));
  ChainState s = make_chain_state(params, RngStream(1, 0));
  s.config.add(make_point({1.5, 1.5}));
  s.config.add(make_point({1.5 + 2.1 * params.radius, 1.5}));
  bool emptied = false;
  for (int t = 0; t < 500; ++t) {
    const auto out = single_center_step(s);
    CHECK_FALSE(out.attempted_add);
    if (s.config.size() == 0) emptied = true;
  }
  CHECK(emptied);
  CHECK(s.config.size() == 0);
  CHECK(s.step == 500);
}

TEST_CASE("same seed gives bit-identical trajectories") {
  const auto params = make_model_params(2, 0.4, make_cube(2, 5.0));
  ChainState a = make_chain_state(params, RngStream(77, 3));
  ChainState b = make_chain_state(params, RngStream(77, 3));
  for (int t = 0; t < 2000; ++t) {
    single_center_step(a);
    single_center_step(b);
    REQUIRE(a.config.size() == b.config.size());
  }
  CHECK(configs_equal(a.config, b.config));
}

TEST_CASE("run_chain contract") {
  const auto params = make_model_params(2, 0.4, make_cube(2, 5.0));
  ChainState s = make_chain_state(params, RngStream(5, 0));
  run_chain(s, 0, [](ChainState& c) { single_center_step(c); });
  CHECK(s.step == 0);

  std::vector<int> counts;
  run_chain(
      s, 1000, [](ChainState& c) { single_center_step(c); },
      [&](const ChainState& c) { counts.push_back(c.config.size()); }, 10);
  CHECK(counts.size() == 100);
  CHECK(s.step == 1000);
}

TEST_CASE("a start outside the plain state space falls back into it") {
  const auto box = make_cube(2, 2.0);
  BoundaryCondition tau;
  tau.forbidden_balls.push_back(Ball{make_point({1.0, 1.0}), 0.3});
  const auto params = make_model_params(2, 0.25, box, tau);
  const double r = params.radius;

  ChainState s = make_chain_state(params, RngStream(3, 1), StateClass::omega_star);
  s.config.add(make_point({1.0, 1.0}));                // violates tau
  s.config.add(make_point({1.0 + 1.5 * r, 1.0}));      // overlapping pair
  REQUIRE_FALSE(is_valid_configuration(s.config, tau));

  const long horizon = default_burn_in(box.volume(), params.lambda);
  long entered_at = -1;
  for (long t = 0; t < horizon; ++t) {
    single_center_step(s);
    if (entered_at < 0 && is_valid_configuration(s.config, tau)) entered_at = t;
  }
  REQUIRE(entered_at >= 0);
  // the plain state space is absorbing under the shared local rule
  for (int t = 0; t < 200; ++t) {
    single_center_step(s);
    CHECK(is_valid_configuration(s.config, tau));
  }
}

TEST_CASE("extended-class preservation over a long run") {
  const auto params = make_model_params(2, 0.4, make_cube(2, 4.0));
  const double r = params.radius;
  ChainState s = make_chain_state(params, RngStream(9, 0), StateClass::omega_star);
  s.config.add(make_point({2.0, 2.0}));
  s.config.add(make_point({2.0 + 1.5 * r, 2.0}));
  RngStream check_rng(9, 1);
  for (int block = 0; block < 10; ++block) {
    run_chain(s, 100000, [](ChainState& c) { single_center_step(c); });
    CHECK(is_star_configuration(s.config, 20000, check_rng).is_star);
  }
}

TEST_CASE("identity coupling keeps equal chains equal") {
  const auto params = make_model_params(2, 0.3, make_cube(2, 5.0));
  ChainState a = make_chain_state(params, RngStream(11, 0));
  run_chain(a, 500, [](ChainState& c) { single_center_step(c); });
  ChainState b = a;
  CoupledState cs = make_coupled(std::move(a), std::move(b), RngStream(11, 7));
  for (int t = 0; t < 2000; ++t) {
    coupled_single_center_step(cs);
    REQUIRE(configs_equal(cs.x.config, cs.y.config));
  }
}

TEST_CASE("identity coupling event frequencies across an edge") {
  const auto params = make_model_params(2, 0.25, make_cube(2, 5.0));
  const double r = params.radius;
  const double n = params.domain.volume();
  const long trials = 60000;

  long removed_extra = 0;
  long distance_kept = 0;
  long both_same = 0;
  for (long t = 0; t < trials; ++t) {
    ChainState a = make_chain_state(params, RngStream(100, static_cast<std::uint64_t>(t)));
    run_chain(a, 60, [](ChainState& c) { single_center_step(c); });
    const Point v = make_point({2.5, 2.5});
    if (a.config.any_within(v, 2.0 * r)) continue;  // keep v addable for a clean edge
    ChainState b = a;
    b.config.add(v);
    RngStream shared = a.rng;
    CoupledState cs = make_coupled(std::move(a), std::move(b), shared);
    const auto out = coupled_single_center_step(cs);
    const long h = hamming_distance(cs.x.config, cs.y.config);
    if (!out.add_move && dist(out.update, v) < r) {
      ++removed_extra;
      CHECK(configs_equal(cs.x.config, cs.y.config));  // deleting the extra center coalesces
    }
    if (out.add_move && dist(out.update, v) >= 2.0 * r) {
      // insertion far from the disagreement is accepted or rejected identically
      ++distance_kept;
      CHECK(h == 1);
    }
    if (configs_equal(cs.x.config, cs.y.config)) ++both_same;
  }
  const double freq = static_cast<double>(removed_extra) / trials;
  const double expect = 1.0 / (n * (1.0 + params.lambda));
  CHECK(std::abs(freq - expect) <= 3.0 * std::sqrt(expect * (1.0 - expect) / trials) + 1e-4);
  CHECK(distance_kept > 0);
  CHECK(both_same >= removed_extra);
}

TEST_CASE("heat-bath dynamics") {
  const double r2 = sphere_radius(2);

  SECTION("zero fugacity resamples regions empty") {
    const auto params = make_model_params(2, 0.0, make_cube(2, 3.0));
    ChainState s = make_chain_state(params, RngStream(4, 0));
    s.config.add(make_point({1.5, 1.5}));
    int prev = s.config.size();
    for (int t = 0; t < 300; ++t) {
      heat_bath_step(s, 2.5 * r2);
      CHECK(s.config.size() <= prev);
      prev = s.config.size();
    }
    CHECK(s.config.size() == 0);
  }

  SECTION("update radius below the sphere radius is rejected") {
    const auto params = make_model_params(2, 0.5, make_cube(2, 3.0));
    ChainState s = make_chain_state(params, RngStream(4, 0));
    CHECK_THROWS_AS(heat_bath_step(s, 0.5 * r2), std::invalid_argument);
  }

  SECTION("stationary mean count matches the oracle on a one-sphere box") {
    const Box box = make_cube(2, 2.0 * r2 + 0.5 * r2);
    const auto params = make_model_params(2, 1.0, box);
    const auto oracle = oracle_small_domain(params, 1, 200);
    const int replicas = 24;
    std::vector<double> means(replicas);
    for (int rep = 0; rep < replicas; ++rep) {
      ChainState s = make_chain_state(params, RngStream(500, static_cast<std::uint64_t>(rep)));
      run_chain(s, 200, [&](ChainState& c) { heat_bath_step(c, 2.0 * r2); });
      double sum = 0;
      const long steps = 4000;
      for (long t = 0; t < steps; ++t) {
        heat_bath_step(s, 2.0 * r2);
        sum += s.config.size();
      }
      means[static_cast<std::size_t>(rep)] = sum / static_cast<double>(steps);
    }
    double m = 0, v = 0;
    for (double x : means) m += x;
    m /= replicas;
    for (double x : means) v += (x - m) * (x - m);
    const double se = std::sqrt(v / (replicas - 1) / replicas);
    CHECK(std::abs(m - oracle.expected_count) <= 3.0 * se);
  }

  SECTION("resampling budget exhaustion is loud") {
    const auto params = make_model_params(2, 200.0, make_cube(2, 4.0));
    ChainState s = make_chain_state(params, RngStream(4, 2));
    CHECK_THROWS_AS(heat_bath_step(s, 3.0 * r2, 1), std::runtime_error);
  }
}

TEST_CASE("one giant heat-bath update approximates a fresh exact sample") {
  const double r2 = sphere_radius(2);
  const Box box = make_cube(2, 2.0 * r2 + 0.5 * r2);
  const auto params = make_model_params(2, 1.0, box);
  const double update_radius = 200.0 * r2;

  const long n = 100000;
  long chain_ones = 0, exact_ones = 0;
  RngStream exact_rng(600, 0);
  for (long i = 0; i < n; ++i) {
    exact_ones += sample_hard_sphere_rejection(params, exact_rng, 100000).config.size();
  }
  for (long i = 0; i < n; ++i) {
    ChainState s = make_chain_state(params, RngStream(601, static_cast<std::uint64_t>(i)));
    heat_bath_step(s, update_radius);
    chain_ones += s.config.size();
  }
  const double tv = std::abs(static_cast<double>(chain_ones) - static_cast<double>(exact_ones)) /
                    static_cast<double>(n);
  CHECK(tv <= 0.01);
}

TEST_CASE("coupled heat-bath steps") {
  const double r2 = sphere_radius(2);
  const auto params = make_model_params(2, 0.3, make_cube(2, 8.0));
  const double update_radius = 2.5 * r2;

  SECTION("agreeing chains stay equal") {
    ChainState a = make_chain_state(params, RngStream(21, 0));
    run_chain(a, 300, [](ChainState& c) { single_center_step(c); });
    ChainState b = a;
    CoupledState cs = make_coupled(std::move(a), std::move(b), RngStream(21, 5));
    for (int t = 0; t < 300; ++t) {
      coupled_heat_bath_step(cs, update_radius);
      REQUIRE(configs_equal(cs.x.config, cs.y.config));
    }
  }

  SECTION("an extra center swallowed by the update ball coalesces the chains") {
    // extra center far from everything else; run until some update ball covers it
    ChainState a = make_chain_state(params, RngStream(22, 0));
    const Point u = make_point({4.0, 4.0});
    ChainState b = a;
    b.config.add(u);
    CoupledState cs = make_coupled(std::move(a), std::move(b), RngStream(22, 5));
    long coalesced_at = -1;
    for (int t = 0; t < 3000 && coalesced_at < 0; ++t) {
      coupled_heat_bath_step(cs, update_radius);
      if (hamming_distance(cs.x.config, cs.y.config) == 0) coalesced_at = t;
    }
    REQUIRE(coalesced_at >= 0);
    for (int t = 0; t < 100; ++t) {
      coupled_heat_bath_step(cs, update_radius);
      REQUIRE(configs_equal(cs.x.config, cs.y.config));
    }
  }
}

TEST_CASE("restricted lazy dynamics") {
  const auto params = make_model_params(2, 0.4, make_cube(2, 6.0));
  const double r = params.radius;

  SECTION("with the whole domain active it reproduces the plain kernel") {
    ChainState a = make_chain_state(params, RngStream(31, 0));
    ChainState b = make_chain_state(params, RngStream(31, 0));
    const ActiveRegion whole = ActiveRegion::of(params.domain);
    for (int t = 0; t < 3000; ++t) {
      single_center_step(a);
      restricted_lazy_step(b, whole);
    }
    CHECK(configs_equal(a.config, b.config));
  }

  SECTION("activity rate equals the region fraction and the outside is frozen") {
    const Box region = make_box(make_point({0.0, 0.0}), make_point({2.0, 2.0}));
    const ActiveRegion active = ActiveRegion::of(region);
    ChainState s = make_chain_state(params, RngStream(32, 0));
    const Point frozen = make_point({4.5, 4.5});
    s.config.add(frozen);

    long active_steps = 0;
    const long total = 40000;
    for (long t = 0; t < total; ++t) {
      if (restricted_lazy_step(s, active).active) ++active_steps;
      for (int i = 0; i < s.config.size(); ++i)
        if (!inside_margin(region, s.config.center(i), r)) REQUIRE(s.config.center(i) == frozen);
    }
    const double rate = static_cast<double>(active_steps) / total;
    const double expect = region.volume() / params.domain.volume();
    CHECK(std::abs(rate - expect) <= 3.0 * std::sqrt(expect * (1 - expect) / total));
    CHECK(s.config.any_within(frozen, 1e-9));
  }

  SECTION("a ball region confines additions to its interior") {
    const ActiveRegion active = ActiveRegion::of(Ball{make_point({3.0, 3.0}), 2.0});
    ChainState s = make_chain_state(params, RngStream(33, 0));
    for (int t = 0; t < 20000; ++t) restricted_lazy_step(s, active);
    for (int i = 0; i < s.config.size(); ++i)
      CHECK(dist(s.config.center(i), make_point({3.0, 3.0})) <= 2.0 - r + 1e-12);
  }
}
