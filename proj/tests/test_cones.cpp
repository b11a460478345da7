#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "sflow/cones.hpp"
#include "sflow/error.hpp"
#include "sflow/scenery.hpp"

using namespace sflow;

namespace {

const double pi = std::numbers::pi;

Snapshot mixture(const Snapshot& a, const Snapshot& b) {
  std::vector<double> raw(a.cells());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = 0.5 * a.mass(i) + 0.5 * b.mass(i);
  return Snapshot(a.dim(), a.depth(), Domain::Ball, raw, 0.0, Point(a.dim()));
}

Snapshot random_snapshot(std::mt19937_64& rng, int d, int m) {
  auto mu = DyadicMeasure::generated(d, RandomWeightsRule{WeightLaw::Dirichlet, 0.8}, rng(), 2, "test");
  return magnify(mu, 0.4, m);
}

// Monte Carlo cone fraction with the canonical V, sampled by rejection from the cube.
double mc_fraction(int d, int k, double alpha, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  long in_ball = 0, in_cone = 0;
  std::vector<double> p(d);
  while (in_ball < n) {
    double r2 = 0;
    for (auto& c : p) {
      c = u(rng);
      r2 += c * c;
    }
    if (r2 >= 1 || r2 == 0) continue;
    ++in_ball;
    double off = 0;  // distance to span of the last d - k axes
    for (int i = 0; i < k; ++i) off += p[i] * p[i];
    if (off < alpha * alpha * r2) ++in_cone;
  }
  return static_cast<double>(in_cone) / n;
}

}  // namespace

TEST_CASE("cone mass: plane snapshot has no mass in the cone around its complement") {
  const int m = 8;
  auto H = plane_snapshot(Subspace::coordinate(2, {0}), m);
  auto V = Subspace::coordinate(2, {1});
  for (double a : {0.05, 0.3, 0.5, 0.9}) CHECK(cone_mass(H, V, a) <= 2 * std::ldexp(1.0, 1 - m));
  auto H3 = plane_snapshot(Subspace::coordinate(3, {0, 1}), 5);
  CHECK(cone_mass(H3, Subspace::coordinate(3, {2}), 0.5) <= 2 * std::ldexp(1.0, 1 - 5));
}

TEST_CASE("cone mass: Lebesgue snapshot gives the critical value") {
  auto L = lebesgue_snapshot(2, 8);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ang(0, pi);
  for (double a : {0.1, 0.5, 0.8}) {
    double eps = epsilon_critical(2, 1, a).value;
    for (int c = 0; c < 5; ++c) CHECK(std::abs(cone_mass(L, Subspace::line(ang(rng)), a) - eps) < 5e-3);
  }
  CHECK(std::abs(cone_mass(L, Subspace::line(0.7), 1.0) - 1.0) < 5e-3);
  auto L3 = lebesgue_snapshot(3, 5);
  CHECK(std::abs(cone_mass(L3, Subspace::coordinate(3, {1, 2}), 0.5) - 0.5) < 5e-3);
  CHECK(std::abs(cone_mass(L3, Subspace::coordinate(3, {2}), 0.6) - 0.2) < 5e-3);
}

TEST_CASE("cone mass rejects subspaces of the wrong ambient dimension") {
  auto L = lebesgue_snapshot(2, 4);
  CHECK_THROWS_AS(cone_mass(L, Subspace::coordinate(3, {0}), 0.5), Error);
}

TEST_CASE("min cone mass: Lebesgue, plane, mixture") {
  const int m = 8;
  double alpha = 0.5, eps = epsilon_critical(2, 1, alpha).value;
  auto L = lebesgue_snapshot(2, m);
  CHECK(std::abs(min_cone_mass(L, 1, alpha).value - eps) < 5e-3);

  auto H = plane_snapshot(Subspace::coordinate(2, {0}), m);
  auto hit = min_cone_mass(H, 1, alpha);
  CHECK(hit.value < 2 * std::ldexp(1.0, 1 - m));
  CHECK(principal_angle(hit.V, Subspace::coordinate(2, {1})) < 0.02);

  auto mix = mixture(L, H);
  auto got = min_cone_mass(mix, 1, alpha);
  double oracle = 1;
  for (int i = 0; i < 3600; ++i) oracle = std::min(oracle, cone_mass(mix, Subspace::line(pi * i / 3600), alpha));
  CHECK(std::abs(got.value - eps / 2) < 1e-2);
  CHECK(got.value <= oracle + 1e-9);
  CHECK(principal_angle(got.V, Subspace::coordinate(2, {1})) < 0.02);
}

TEST_CASE("min cone mass in d = 3 and above") {
  auto H = plane_snapshot(Subspace::coordinate(3, {0, 1}), 5);
  auto r = min_cone_mass(H, 2, 0.5);
  CHECK(r.value < 0.05);
  CHECK(principal_angle(r.V, Subspace::coordinate(3, {2})) < 0.1);
  auto L = lebesgue_snapshot(3, 5);
  CHECK(std::abs(min_cone_mass(L, 1, 0.5).value - 0.5) < 1e-2);
  auto L4 = lebesgue_snapshot(4, 3);
  auto r4 = min_cone_mass(L4, 2, 0.7, {64, 10, 3, std::nullopt});
  CHECK(r4.V.dim() == 2);
  CHECK(r4.value <= cone_mass(L4, Subspace::coordinate(4, {2, 3}), 0.7) + 1e-12);
}

TEST_CASE("min cone mass is below every net direction and deterministic") {
  std::mt19937_64 rng(2);
  for (int c = 0; c < 5; ++c) {
    auto nu = random_snapshot(rng, 2, 7);
    ConeEvaluator eval(nu, 0.4);
    auto r = min_cone_mass(eval, 1);
    for (int i = 0; i < 256; ++i) CHECK(r.value <= eval.mass_at_angle(pi * i / 256));
    CHECK(r.value == doctest::Approx(cone_mass(nu, r.V, 0.4)).epsilon(1e-9));
    CHECK(min_cone_mass(eval, 1).value == r.value);
  }
  auto nu3 = random_snapshot(rng, 3, 4);
  auto a = min_cone_mass(nu3, 1, 0.5), b = min_cone_mass(nu3, 1, 0.5);
  CHECK(a.value == b.value);
  for (const auto& dir : hemisphere_net(64)) {
    Eigen::MatrixXd n(3, 1);
    n.col(0) = dir;
    CHECK(a.value <= cone_mass(nu3, Subspace::span_of(n).complement(), 0.5) + 1e-12);
  }
}

TEST_CASE("warm start never makes the minimum worse") {
  std::mt19937_64 rng(3);
  auto nu = random_snapshot(rng, 2, 7);
  auto cold = min_cone_mass(nu, 1, 0.3);
  SearchParams warm;
  warm.warm_start = cold.V;
  CHECK(min_cone_mass(nu, 1, 0.3, warm).value <= cold.value);
}

TEST_CASE("property: cone mass is nondecreasing in the opening (200 cases)") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.01, 1.0), ang(0, pi);
  std::vector<Snapshot> pool;
  for (int c = 0; c < 5; ++c) pool.push_back(random_snapshot(rng, 2, 6));
  for (int c = 0; c < 3; ++c) pool.push_back(random_snapshot(rng, 3, 4));
  for (int c = 0; c < 200; ++c) {
    const auto& nu = pool[c % pool.size()];
    double a1 = u(rng), a2 = u(rng);
    if (a1 > a2) std::swap(a1, a2);
    Subspace V = nu.dim() == 2 ? Subspace::line(ang(rng))
                               : Subspace::span_of(Eigen::MatrixXd::Random(3, 2));
    CHECK(cone_mass(nu, V, a1) <= cone_mass(nu, V, a2) + 1e-12);
  }
}

TEST_CASE("evaluator agrees with the one-shot cone mass") {
  std::mt19937_64 rng(5);
  auto nu = random_snapshot(rng, 2, 6);
  ConeEvaluator eval(nu, 0.6);
  for (double th : {0.0, 0.4, 1.3, 2.9}) {
    CHECK(eval.mass_at_angle(th) == doctest::Approx(cone_mass(nu, Subspace::line(th), 0.6)).epsilon(1e-12));
    CHECK(eval.mass(Subspace::line(th)) == doctest::Approx(eval.mass_at_angle(th)).epsilon(1e-12));
  }
}

TEST_CASE("critical threshold: closed forms and Monte Carlo oracle") {
  CHECK(epsilon_critical(2, 1, 1.0).value == 1.0);
  for (double a : {0.1, 0.5, 0.9}) {
    double oracle = 2 / pi * std::asin(a);
    CHECK(std::abs(epsilon_critical(2, 1, a).value - oracle) < 1e-9);
  }
  CHECK(std::abs(epsilon_critical(2, 1, 0.5).value - mc_fraction(2, 1, 0.5, 1000000, 1)) < 2e-3);
  for (double a : {0.2, 0.6}) {
    CHECK(std::abs(epsilon_critical(3, 1, a).value - a) < 1e-9);
    CHECK(std::abs(epsilon_critical(3, 2, a).value - (1 - std::sqrt(1 - a * a))) < 1e-9);
  }
  for (auto [d, k] : {std::pair{4, 1}, {4, 2}, {5, 3}}) {
    double q = epsilon_critical(d, k, 0.5).value;
    CHECK(std::abs(q - mc_fraction(d, k, 0.5, 200000, 2)) < 5e-3);
    auto mc = epsilon_critical(d, k, 0.5, EpsMethod::MonteCarlo, 200000, 3);
    CHECK(mc.method == EpsMethod::MonteCarlo);
    CHECK(std::abs(mc.value - q) < 4 * mc.error + 1e-4);
  }
  double prev = 1.1;
  for (double a : {1.0, 0.5, 0.1, 0.01, 1e-4}) {
    double v = epsilon_critical(3, 1, a).value;
    CHECK(v < prev);
    prev = v;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("critical threshold does not depend on the choice of V") {
  std::mt19937_64 rng(6);
  double q = epsilon_critical(3, 1, 0.5).value;
  for (int c = 0; c < 20; ++c) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd f(3, 2);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j) f(i, j) = g(rng);
    auto r = epsilon_monte_carlo(Subspace::span_of(f), 0.5, 100000, rng());
    CHECK(std::abs(r.value - q) <= 2 * 3 * r.error);
  }
}

TEST_CASE("cone membership is strict and excludes the vertex") {
  auto V = Subspace::coordinate(2, {1});
  CHECK_FALSE(V.in_cone(Point{3, 4}, 0.6));
  CHECK(V.in_cone(Point{3, 4}, 0.6 + 1e-12));
  CHECK_FALSE(V.in_cone(Point{0, 0}, 1.0));
  auto V3 = Subspace::coordinate(3, {2});
  CHECK_FALSE(V3.in_cone(Point{0.6, 0, 0.8}, 0.6));
  CHECK(V3.in_cone(Point{0.6, 0, 0.8}, 0.61));
  CHECK_FALSE(V3.in_cone(Point{1, 0, 0}, 1.0));
}
