#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "doctest.h"
#include "sflow/cones.hpp"
#include "sflow/error.hpp"
#include "sflow/experiment.hpp"
#include "sflow/rectifiability.hpp"
#include "sflow/scenery.hpp"
#include "sflow/statistics.hpp"

using namespace sflow;

namespace {

const double pi = std::numbers::pi;

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an sflow::Error");
  return ErrorKind::InvalidArgument;
}

PointCloud grid_cloud(int n, double step) {
  PointCloud E;
  E.d = 2;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) E.points.push_back(Point{i * step, j * step});
  return E;
}

// Brute force over lines at angles i pi / n: is any line's cone at x free of other points?
bool any_vacant_line(const PointCloud& E, const Point& x, double alpha, double r, int n) {
  for (int i = 0; i < n; ++i) {
    auto V = Subspace::line(pi * i / n);
    bool empty = true;
    for (const auto& y : E.points) {
      Point v = y - x;
      if (v == Point(2) || std::hypot(v.x[0], v.x[1]) > r) continue;
      if (V.in_cone(v, alpha)) {
        empty = false;
        break;
      }
    }
    if (empty) return true;
  }
  return false;
}

// True when no point of E other than x lies in X(x, r, V, alpha).
bool vacant(const PointCloud& E, const Point& x, const Subspace& V, double alpha, double r) {
  for (const auto& y : E.points) {
    Point v = y - x;
    if (v == Point(E.d)) continue;
    double n2 = 0;
    for (int i = 0; i < E.d; ++i) n2 += v.x[i] * v.x[i];
    if (std::sqrt(n2) <= r && V.in_cone(v, alpha)) return false;
  }
  return true;
}

Snapshot restricted(const Snapshot& s, auto keep) {
  std::vector<double> raw(s.cells());
  const auto& g = s.grid();
  for (std::size_t i = 0; i < s.cells(); ++i) raw[i] = keep(g.center(i)) ? s.mass(i) : 0.0;
  return Snapshot(s.dim(), s.depth(), Domain::Ball, raw, 0.0, Point(s.dim()));
}

}  // namespace

TEST_CASE("point cloud basics and CSV input") {
  auto E = grid_cloud(5, 0.5);
  CHECK(E.mean_nearest_neighbor() == doctest::Approx(0.5));
  CHECK(E.scale_floor() == doctest::Approx(1.5));
  E.r_min = 0.2;
  CHECK(E.scale_floor() == 0.2);

  auto path = std::filesystem::temp_directory_path() / "sflow_cloud_test.csv";
  {
    std::ofstream out(path);
    out << "x,y\n# comment\n0,0\n1,0.5\n-2,3\n";
  }
  auto C = read_point_cloud_csv(path.string());
  CHECK(C.d == 2);
  REQUIRE(C.points.size() == 3);
  CHECK(C.points[1] == Point{1, 0.5});
  {
    std::ofstream out(path);
    out << "x,y\n0,0\n1,2,3\n";
  }
  CHECK_THROWS_AS(read_point_cloud_csv(path.string()), Error);
  std::filesystem::remove(path);
  CHECK(kind_of([] { read_point_cloud_csv("/nonexistent/cloud.csv"); }) == ErrorKind::IoError);
}

TEST_CASE("cone vacancy: collinear cloud admits the perpendicular direction") {
  PointCloud E;
  E.d = 2;
  for (int i = 0; i < 100; ++i) E.points.push_back(Point{-1 + 0.02 * i, 0});
  int found = 0;
  for (double alpha : {0.1, 0.5, 0.9, 0.999}) {
    for (std::size_t i = 0; i < E.points.size(); ++i) {
      auto V = cone_vacancy(E, i, 1, alpha, 0.2);
      REQUIRE(V);
      found += vacant(E, E.points[i], *V, alpha, 0.2);
      CHECK(principal_angle(*V, Subspace::coordinate(2, {1})) < 1e-9);
    }
  }
  CHECK(found == 400);
}

TEST_CASE("cone vacancy: a dense grid has none, as brute force confirms") {
  auto E = grid_cloud(33, 1.0 / 32);
  double r = 10.0 / 32, alpha = 0.9;
  int vacancies = 0, interior = 0;
  for (std::size_t i = 0; i < E.points.size(); ++i) {
    const Point& x = E.points[i];
    if (x.x[0] < r || x.x[0] > 1 - r || x.x[1] < r || x.x[1] > 1 - r) continue;
    ++interior;
    bool ours = cone_vacancy(E, i, 1, alpha, r).has_value();
    CHECK(ours == any_vacant_line(E, x, alpha, r, 720));
    vacancies += ours;
  }
  CHECK(interior == 13 * 13);
  CHECK(vacancies == 0);
}

TEST_CASE("cone vacancy: isolated points and scale floor") {
  PointCloud E;
  E.d = 2;
  E.points = {Point{0, 0}, Point{1, 0}, Point{0, 1}, Point{1, 1}};
  E.r_min = 0.1;
  auto V = cone_vacancy(E, 0, 1, 0.99, 0.5);
  CHECK(V.has_value());
  CHECK(cone_vacancy(E, Point{0, 0}, 1, 0.99, 0.5).has_value());
  E.r_min.reset();
  CHECK(kind_of([&] { cone_vacancy(E, 0, 1, 0.5, 0.5); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { cone_vacancy(E, Point{0.5, 0.5}, 1, 0.5, 5.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("cone vacancy in three dimensions") {
  PointCloud plane, solid;
  plane.d = solid.d = 3;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      plane.points.push_back(Point{i * 0.1, j * 0.1, 0});
      for (int l = 0; l < 11; ++l) solid.points.push_back(Point{i * 0.1, j * 0.1, l * 0.1});
    }
  // A planar cloud is 2-rectifiable: V is the normal line.
  std::size_t centre = 5 * 11 + 5;
  auto V = cone_vacancy(plane, centre, 2, 0.5, 0.35);
  REQUIRE(V);
  CHECK(V->dim() == 1);
  CHECK(vacant(plane, plane.points[centre], *V, 0.5, 0.35));
  CHECK(principal_angle(*V, Subspace::coordinate(3, {2})) < 0.6);
  CHECK_FALSE(cone_vacancy(plane, centre, 1, 0.5, 0.35).has_value());
  CHECK_FALSE(cone_vacancy(solid, (5 * 11 + 5) * 11 + 5, 2, 0.9, 0.35).has_value());
  PointCloud line = plane;
  line.points.clear();
  for (int i = 0; i < 30; ++i) line.points.push_back(Point{0.1 * i, 0.05 * i, 0.02 * i});
  auto W = cone_vacancy(line, 10, 1, 0.7, 0.5);
  REQUIRE(W);
  CHECK(W->dim() == 2);
  CHECK(vacant(line, line.points[10], *W, 0.7, 0.5));
}

TEST_CASE("support vacancy: plane, Lebesgue, radial segment") {
  auto H = plane_snapshot(Subspace::coordinate(2, {0}), 8);
  auto V = support_vacancy(H, 1, 0.5);
  REQUIRE(V);
  CHECK(principal_angle(*V, Subspace::coordinate(2, {1})) < 1e-6);
  CHECK_FALSE(support_vacancy(lebesgue_snapshot(2, 8), 1, 0.5).has_value());
  CHECK_FALSE(support_vacancy(lebesgue_snapshot(2, 8), 1, 0.05).has_value());

  double th = 0.3;
  auto seg = restricted(plane_snapshot(Subspace::line(th), 8),
                        [&](const Point& p) { return p.x[0] * std::cos(th) + p.x[1] * std::sin(th) > 0; });
  auto S = support_vacancy(seg, 1, 0.5);
  REQUIRE(S);
  CHECK(principal_angle(*S, Subspace::line(th + pi / 2)) < 0.05);

  auto H3 = plane_snapshot(Subspace::coordinate(3, {0, 1}), 5);
  auto V3 = support_vacancy(H3, 2, 0.5);
  REQUIRE(V3);
  CHECK(cone_mass(H3, *V3, 0.5) <= std::ldexp(1.0, -5 + 2));
  CHECK_FALSE(support_vacancy(lebesgue_snapshot(3, 4), 1, 0.5).has_value());
}

TEST_CASE("support vacancy agrees with cone masses, flows, and dimension") {
  ExperimentConfig cfg;
  auto mu = experiment_measure(cfg);
  auto x = sample_interior_points(mu, 1, 0.5, cfg.depth, 21)[0];
  auto e = empirical_td(mu, x, cfg.T, cfg.dt, 9, cfg.t_start);
  int passing = 0;
  const double tol = std::ldexp(1.0, -8 + 2);
  for (const auto& s9 : e.snapshots) {
    auto s = s9.coarsen(8);
    auto V = support_vacancy(s, 1, 0.5);
    if (V) {
      ++passing;
      CHECK(min_cone_mass(s, 1, 0.5).value <= tol);
      CHECK(cone_mass(s, *V, 0.5) <= tol);
      CHECK(box_counting_dimension(s) <= 1.1);
    }
    // One dyadic step of the flow keeps the same V vacant up to boundary cells.
    auto V9 = support_vacancy(s9, 1, 0.5);
    if (!V9) continue;
    auto next = magnify(s9, std::numbers::ln2, 8);
    CHECK(support_vacancy(next, 1, 0.5).has_value());
    CHECK(cone_mass(next, *V9, 0.5) <= tol);
  }
  CHECK(passing > 10);
}

TEST_CASE("property: vacancy survives narrowing the cone (100 cases)") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 0.95), ang(0, pi);
  ExperimentConfig cfg;
  auto mu = experiment_measure(cfg);
  auto x = sample_interior_points(mu, 1, 0.5, cfg.depth, 4)[0];
  auto e = empirical_td(mu, x, cfg.T, cfg.dt, 7, cfg.t_start);
  int vac = 0;
  for (int c = 0; c < 100; ++c) {
    Snapshot s;
    switch (c % 3) {
      case 0: s = plane_snapshot(Subspace::line(ang(rng)), 7); break;
      case 1: s = e.snapshots[rng() % e.size()]; break;
      default: {
        double th = ang(rng);
        s = restricted(plane_snapshot(Subspace::line(th), 7), [&](const Point& p) {
          return std::abs(p.x[0] * std::cos(th) + p.x[1] * std::sin(th) - 0.3) < 0.4;
        });
      }
    }
    double a = u(rng), b = u(rng) * a;
    if (support_vacancy(s, 1, a)) {
      ++vac;
      CHECK(support_vacancy(s, 1, b).has_value());
    }
  }
  CHECK(vac > 20);

  PointCloud E;
  E.d = 2;
  for (int i = 0; i < 200; ++i) {
    double t = -1 + 0.01 * i;
    E.points.push_back(Point{t, 0.3 * std::sin(3 * t)});
  }
  for (int c = 0; c < 100; ++c) {
    std::size_t i = rng() % E.points.size();
    double a = u(rng), b = u(rng) * a;
    if (cone_vacancy(E, i, 1, a, 0.1)) CHECK(cone_vacancy(E, i, 1, b, 0.1).has_value());
  }
}

TEST_CASE("uncovered angle") {
  CHECK(uncovered_angle({}) == pi / 2);
  // An open arc of half-width pi/2 leaves exactly its endpoint uncovered.
  auto edge = uncovered_angle({{0.0, pi / 2}});
  REQUIRE(edge);
  CHECK(*edge == doctest::Approx(pi / 2));
  CHECK_FALSE(uncovered_angle({{0.0, pi / 2 + 1e-9}}).has_value());
  auto phi = uncovered_angle({{0.0, 0.5}});
  REQUIRE(phi);
  CHECK(*phi == doctest::Approx(pi / 2));
  CHECK_FALSE(uncovered_angle({{0.0, 0.8}, {1.5, 0.8}, {3.0, 0.8}}).has_value());
  // Gaps (0.5, 0.7) and (1.3, pi - 0.1): the wider one wins.
  auto gap = uncovered_angle({{0.2, 0.3}, {1.0, 0.3}});
  REQUIRE(gap);
  CHECK(*gap == doctest::Approx((1.3 + pi - 0.1) / 2));
  // An arc wrapping past pi covers the start of the period.
  auto wrap = uncovered_angle({{3.0, 0.4}, {1.0, 0.2}});
  REQUIRE(wrap);
  CHECK(*wrap == doctest::Approx((1.2 + 3.0 - 0.4) / 2));
  auto narrow = uncovered_angle({{0.5, 0.5}, {1.7, 0.7}, {2.9, 0.5}});
  REQUIRE(narrow);
  CHECK(*narrow == doctest::Approx(1.0));
}
