#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "sflow/error.hpp"
#include "sflow/experiment.hpp"
#include "sflow/scenery.hpp"
#include "sflow/splicing.hpp"
#include "sflow/statistics.hpp"

using namespace sflow;

namespace {

const double ln2 = std::numbers::ln2;

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an sflow::Error");
  return ErrorKind::InvalidArgument;
}

EmpiricalDistribution of(std::vector<Snapshot> s, std::vector<double> w) {
  EmpiricalDistribution e;
  e.snapshots = std::move(s);
  e.weights = std::move(w);
  return e;
}

ConicalOptions options(double eps, int m = 0) {
  ConicalOptions o;
  o.k = 1;
  o.alpha = 0.5;
  o.eps = {eps};
  o.m = m;
  o.t_start = ln2;
  return o;
}

}  // namespace

TEST_CASE("flow times form a uniform grid") {
  auto t = flow_times(ln2, 24 * ln2, ln2 / 4);
  REQUIRE(t.size() == 97);
  CHECK(t.front() == ln2);
  CHECK(t.back() == doctest::Approx(25 * ln2));
  CHECK(flow_times(0, 0, 0.1).size() == 1);
}

TEST_CASE("empirical_td: Lebesgue, weights, failing times") {
  auto leb = build_lebesgue(2, 0);
  auto e = empirical_td(leb, Point{0.2, 0.1}, 3.0, 0.5, 6, 0.5);
  REQUIRE(e.size() == 7);
  auto ref = lebesgue_snapshot(2, 6);
  double w = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    CHECK(max_cell_difference(e.snapshots[i], ref) < 1e-9);
    w += e.weights[i];
  }
  CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e.provenance.source == "flow");
  CHECK_NOTHROW(e.check());

  try {
    // The axis leaves the view once e^-t < 0.3, first at t = 1.25.
    empirical_td(build_plane(2, 1, Subspace::coordinate(2, {0}), 0), Point{0, 0.3}, 2.0, 0.25, 6, 0.5);
    FAIL("expected a scenery failure");
  } catch (const SceneryFailure& f) {
    CHECK(f.kind() == ErrorKind::OutsideSupport);
    CHECK(f.time() == 1.25);
  }
  CHECK(kind_of([&] { empirical_td(leb, Point{0.5, 0.1}, 2.0, 0.25, 6, 0.0); }) == ErrorKind::OutOfDomain);
  CHECK(kind_of([] { of({}, {}).check(); }) == ErrorKind::EmptyDistribution);
}

TEST_CASE("distribution distance: identity, symmetry, Lebesgue against plane") {
  auto L = lebesgue_snapshot(2, 8), H = plane_snapshot(Subspace::coordinate(2, {0}), 8);
  CHECK(distribution_distance(L, L) == 0.0);
  CHECK(distribution_distance(L, H) > 0.2);
  CHECK(distribution_distance(L, H) == distribution_distance(H, L));
  // Projection onto the y axis: semicircle law against a point mass at 0.
  CHECK(distribution_distance(L, H) >= 4 / (3 * std::numbers::pi) - 0.02);

  std::mt19937_64 rng(1);
  std::vector<Snapshot> pool;
  for (int c = 0; c < 6; ++c) {
    auto mu = DyadicMeasure::generated(2, RandomWeightsRule{WeightLaw::Dirichlet, 0.6}, rng(), 2, "t");
    pool.push_back(magnify(mu, 0.3 * c, 6));
  }
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = 0; j < pool.size(); ++j) {
      double a = distribution_distance(pool[i], pool[j]);
      CHECK(a == distribution_distance(pool[j], pool[i]));
      CHECK(a >= 0);
      if (i == j) CHECK(a == 0);
    }
  auto e1 = of({pool[0], pool[1], pool[2]}, {0.2, 0.3, 0.5});
  auto e2 = of({pool[3], pool[4]}, {0.5, 0.5});
  CHECK(distribution_distance(e1, e1) == 0);
  CHECK(distribution_distance(e1, e2) == distribution_distance(e2, e1));
  CHECK(distribution_distance(e1, e2) > 0);
  CHECK_THROWS_AS(distribution_distance(L, lebesgue_snapshot(3, 3)), Error);
}

TEST_CASE("conical statistic: Lebesgue and plane") {
  // Every Lebesgue view has min cone mass 1/3 > eps; every plane view has none.
  auto leb = build_lebesgue(2, 0);
  auto r = conical_statistic(leb, Point{0.1, -0.3}, 4 * ln2, options(0.1, 6));
  CHECK(r.fraction[0] == 1.0);
  CHECK(std::abs(r.min_over_t - 1.0 / 3) < 5e-3);
  auto plane = build_plane(2, 1, Subspace::coordinate(2, {0}), 0);
  for (double eps : {0.01, 0.1}) {
    auto p = conical_statistic(plane, Point{0.2, 0}, 4 * ln2, options(eps, 6));
    CHECK(p.fraction[0] == 0.0);
  }
}

TEST_CASE("spliced sceneries: two regimes, clustering, statistic") {
  ExperimentConfig cfg;
  auto mu = experiment_measure(cfg);
  auto pts = sample_interior_points(mu, 3, 0.5, cfg.depth, 5);
  auto L = lebesgue_snapshot(2, 8), H = plane_snapshot(Subspace::coordinate(2, {0}), 8);
  auto sched = schedule_for_theta(0.5, cfg.depth + 8, cfg.growth);
  for (const auto& x : pts) {
    auto e = empirical_td(mu, x, cfg.T, cfg.dt, 8, cfg.t_start);
    auto c = two_medoids(e);
    CHECK(std::abs(c.weight[0] - 0.5) <= 0.07);
    CHECK(c.weight[0] + c.weight[1] == doctest::Approx(1.0));

    // Views whose whole window of 8 levels sits four levels inside one block.
    for (std::size_t i = 0; i < e.size(); ++i) {
      int n = static_cast<int>(std::lround(e.snapshots[i].time() / ln2 * 4));
      if (n % 4) continue;
      n /= 4;
      Regime r = sched.regime_at(n);
      bool deep = true;
      for (int l = n - 4; l < n + 12 && deep; ++l) deep = l >= 0 && sched.regime_at(l) == r;
      if (!deep) continue;
      CHECK(distribution_distance(e.snapshots[i], r == Regime::L ? L : H) < 0.05);
    }

    auto stat = conical_statistic(e, options(0.1));
    CHECK(std::abs(stat.fraction[0] - 0.5) <= 0.07);
  }
}

TEST_CASE("conical statistic tracks the schedule frequency") {
  ExperimentConfig cfg;
  auto mu = experiment_measure(cfg);
  auto sched = schedule_for_theta(0.5, cfg.depth + 8, cfg.growth);
  auto x = sample_interior_points(mu, 1, 0.5, cfg.depth, 9)[0];
  auto r = conical_statistic(mu, x, cfg.T, options(0.1));
  // A view at level n is Lebesgue-like when its first levels are L.
  int l_views = 0;
  for (double t : r.times) l_views += sched.regime_at(static_cast<int>(std::floor(t / ln2 + 1e-9))) == Regime::L;
  CHECK(std::abs(r.fraction[0] - static_cast<double>(l_views) / r.times.size()) <= 0.05);
}

TEST_CASE("halving dt barely moves the statistic") {
  ExperimentConfig cfg;
  auto mu = experiment_measure(cfg);
  auto pts = sample_interior_points(mu, 2, 0.5, cfg.depth, 13);
  for (const auto& x : pts) {
    auto coarse = conical_statistic(mu, x, cfg.T, options(0.1));
    auto o = options(0.1);
    o.dt = cfg.dt / 2;
    auto fine = conical_statistic(mu, x, cfg.T, o);
    CHECK(std::abs(coarse.fraction[0] - fine.fraction[0]) < 0.02);
  }
}

TEST_CASE("Birkhoff-style convergence for a self-similar cascade") {
  auto mu = DyadicMeasure::generated(2, FixedWeightsRule{{0.4, 0.3, 0.2, 0.1}}, 1, 4, "fixed");
  auto pts = sample_interior_points(mu, 3, 0.5, 40, 3);
  for (const auto& x : pts) {
    auto o = options(0.1, 6);
    o.eps = {0.02, 0.1};
    auto a = conical_statistic(mu, x, 16 * ln2, o);
    auto b = conical_statistic(mu, x, 32 * ln2, o);
    for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(a.fraction[i] - b.fraction[i]) < 0.05);
  }
}

TEST_CASE("local dimension: Lebesgue, plane, errors") {
  auto leb = build_lebesgue(2, 0);
  auto est = local_dimension(leb, Point{0.1, 0.2}, std::ldexp(1.0, -14), 0.25);
  CHECK(std::abs(est.slope - 2.0) <= 0.02);
  CHECK(est.radii.size() == est.masses.size());
  auto plane = build_plane(2, 1, Subspace::coordinate(2, {0}), 0);
  CHECK(std::abs(local_dimension(plane, Point{-0.3, 0}, std::ldexp(1.0, -14), 0.25).slope - 1.0) <= 0.02);
  CHECK(kind_of([&] { local_dimension(plane, Point{0.1, 0.5}, 1e-3, 0.25); }) == ErrorKind::OutsideSupport);
  CHECK(kind_of([&] { local_dimension(leb, Point{0, 0}, 0.5, 0.25); }) == ErrorKind::InvalidArgument);
  auto agg = local_dimension_aggregate(plane, 10, std::ldexp(1.0, -12), 0.25, 30, 4);
  CHECK(agg.estimates.size() == 10);
  CHECK(std::abs(agg.mean - 1.0) <= 0.02);
  CHECK(agg.percentile5 <= agg.mean + 1e-12);
}

TEST_CASE("dimension of a distribution") {
  auto L = lebesgue_snapshot(2, 8), H = plane_snapshot(Subspace::coordinate(2, {0}), 8);
  CHECK(std::abs(dimension_of_distribution(of({L, L, L}, {0.2, 0.3, 0.5})) - 2.0) < 0.05);
  CHECK(std::abs(dimension_of_distribution(of({H}, {1.0})) - 1.0) < 0.05);
  auto oracle = [&](const Snapshot& s) { return same_cells(s, L) ? 2.0 : 1.0; };
  CHECK(dimension_of_distribution(of({L, H}, {0.5, 0.5}), oracle) == 1.5);
  CHECK(dimension_of_distribution(of({H}, {1.0}), [](const Snapshot&) { return 1.25; }) == 1.25);
  // Two clusters: the weight mix of the cluster dimensions.
  auto mix = of({L, H, L, H, H}, {0.1, 0.2, 0.3, 0.15, 0.25});
  CHECK(dimension_of_distribution(mix, oracle) == doctest::Approx(0.4 * 2 + 0.6 * 1).epsilon(1e-15));
  CHECK(kind_of([&] { dimension_of_distribution(of({}, {}), oracle); }) == ErrorKind::EmptyDistribution);
}

TEST_CASE("intensity measure") {
  auto e = empirical_cp(build_lebesgue(2, 3), Point{0.37, -0.81}, 5, 4);
  CHECK(intensity_measure(e, {}) == doctest::Approx(1.0).epsilon(1e-12));
  for (int c = 0; c < 16; ++c)
    CHECK(std::abs(intensity_measure(e, {c >> 2, c & 3}) - 1.0 / 16) < 1e-3);
  CHECK(intensity_measure(e, {1, 2, 3, 0}) == doctest::Approx(std::ldexp(1.0, -8)));
  CHECK(kind_of([&] { intensity_measure(e, {0, 0, 0, 0, 0}); }) == ErrorKind::DepthOverflow);
}

TEST_CASE("helpers") {
  double res = -1;
  CHECK(least_squares_slope({0, 1, 2, 3}, {1, 3, 5, 7}, &res) == doctest::Approx(2.0));
  CHECK(res == doctest::Approx(0.0));
  CHECK(percentile({5, 1, 3, 2, 4}, 0.0) == 1);
  CHECK(percentile({5, 1, 3, 2, 4}, 100) == 5);
  CHECK(percentile({5, 1, 3, 2, 4}, 50) == 3);
  CHECK(default_snapshot_depth(2) == 8);
  CHECK(default_snapshot_depth(3) == 5);
  auto L = lebesgue_snapshot(2, 8);
  CHECK(box_counting_dimension(L) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(box_counting_dimension(plane_snapshot(Subspace::coordinate(2, {0}), 8)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(box_counting_dimension(lebesgue_snapshot(3, 5)) == doctest::Approx(3.0).epsilon(1e-12));
}
