#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "sflow/dyadic_measure.hpp"
#include "sflow/error.hpp"
#include "sflow/measure_file.hpp"
#include "sflow/splicing.hpp"

using namespace sflow;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an sflow::Error");
  return ErrorKind::InvalidArgument;
}

// Length of the segment {t u : t in R} ∩ box, by parametric clipping.
double line_length_in_box(double ux, double uy, const Box& b) {
  double t0 = -1e300, t1 = 1e300;
  double u[2] = {ux, uy};
  for (int i = 0; i < 2; ++i) {
    if (u[i] == 0) {
      if (b.lo[i] > 0 || b.hi[i] < 0) return 0;
      continue;
    }
    double a = b.lo[i] / u[i], c = b.hi[i] / u[i];
    t0 = std::max(t0, std::min(a, c));
    t1 = std::min(t1, std::max(a, c));
  }
  return std::max(0.0, t1 - t0);
}

std::vector<DyadicMeasure> assorted_measures() {
  std::vector<DyadicMeasure> out;
  out.push_back(build_lebesgue(2, 3));
  out.push_back(build_plane(2, 1, Subspace::line(0.3), 3));
  out.push_back(build_plane(3, 2, Subspace::coordinate(3, {0, 1}), 2));
  out.push_back(build_cascade(RandomWeightsRule{WeightLaw::Dirichlet, 0.7}, 2, 3, 11));
  out.push_back(build_cascade(RandomWeightsRule{WeightLaw::LogNormal, 0.5}, 3, 2, 12));
  out.push_back(build_cascade(SubsetRule{{0, 3}}, 2, 3, 1));
  out.push_back(build_spliced(2, 1, Subspace::coordinate(2, {0}), schedule_for_theta(0.5, 40, 4), 6, 5));
  return out;
}

}  // namespace

TEST_CASE("dyadic cells: path and point are mutually inverse") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int d = 1; d <= 3; ++d)
    for (int c = 0; c < 200; ++c) {
      Point p(d);
      for (int i = 0; i < d; ++i) p.x[i] = u(rng);
      auto path = path_of_point(p, 12);
      Box b = cell_box(d, path);
      CHECK(contains(b, p));
      CHECK(b.volume() == doctest::Approx(std::ldexp(1.0, d * (1 - 12))));
      CHECK(path_of_point(b.center(), 12) == path);
      for (int idx : path) CHECK(idx < (1 << d));
    }
}

TEST_CASE("lebesgue builder") {
  auto mu = build_lebesgue(2, 3);
  auto leaves = mu.leaves();
  CHECK(leaves.size() == 64);
  for (const auto& l : leaves) CHECK(l.mass == 1.0 / 64);
  auto one = build_lebesgue(1, 1).leaves();
  REQUIRE(one.size() == 2);
  CHECK(one[0].mass == 0.5);
  CHECK(one[1].mass == 0.5);
  CHECK(mu.total_mass() == 1.0);
  CHECK(mu.cell_mass(std::vector<int>(9, 2)) == doctest::Approx(std::ldexp(1.0, -18)));
}

TEST_CASE("plane builder: shared faces go to the lower cells") {
  auto mu = build_plane(2, 1, Subspace::coordinate(2, {0}), 1);
  CHECK(mu.cell_mass({0}) == 0.5);
  CHECK(mu.cell_mass({1}) == 0.5);
  CHECK(mu.cell_mass({2}) == 0.0);
  CHECK(mu.cell_mass({3}) == 0.0);
  auto deep = build_plane(2, 1, Subspace::coordinate(2, {0}), 5);
  for (const auto& l : deep.leaves()) {
    Box b = cell_box(2, l.path);
    CHECK(b.lo[1] <= 0.0);
    CHECK(b.hi[1] >= 0.0);
  }
  auto p3 = build_plane(3, 2, Subspace::coordinate(3, {0, 1}), 1);
  for (int c = 0; c < 8; ++c) CHECK(p3.cell_mass({c}) == (c < 4 ? 0.25 : 0.0));
}

TEST_CASE("plane builder: cell mass is the normalized length of the line in the cell") {
  double th = 0.3;
  auto mu = build_plane(2, 1, Subspace::line(th), 4);
  double total = line_length_in_box(std::cos(th), std::sin(th), cube(2, -1, 1));
  double sum = 0;
  for (int i = 0; i < 256; ++i) {
    std::vector<int> path = {i >> 6 & 3, i >> 4 & 3, i >> 2 & 3, i & 3};
    double oracle = line_length_in_box(std::cos(th), std::sin(th), cell_box(2, path)) / total;
    CHECK(mu.cell_mass(path) == doctest::Approx(oracle).epsilon(1e-9));
    sum += mu.cell_mass(path);
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("plane builder rejects frames that are not orthonormal") {
  Eigen::MatrixXd f(2, 1);
  f << 0.6, 0.7;
  CHECK(kind_of([&] { build_plane(2, 1, Subspace::from_frame(f), 2); }) == ErrorKind::InvalidSubspace);
}

TEST_CASE("cascade builder: subset rule, determinism, invalid rules") {
  auto mu = build_cascade(SubsetRule{{0, 3}}, 2, 5, 1);
  for (const auto& l : mu.leaves()) {
    CHECK(l.mass == std::ldexp(1.0, -5));
    for (int c : l.path) CHECK((c == 0 || c == 3));
  }
  CHECK(mu.leaves().size() == 32);
  CHECK(mu.cell_mass({1, 0}) == 0.0);
  auto a = build_cascade(RandomWeightsRule{WeightLaw::Dirichlet, 1.0}, 2, 4, 42).leaves();
  auto b = build_cascade(RandomWeightsRule{WeightLaw::Dirichlet, 1.0}, 2, 4, 42).leaves();
  auto c = build_cascade(RandomWeightsRule{WeightLaw::Dirichlet, 1.0}, 2, 4, 43).leaves();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].mass == b[i].mass);
  bool differs = false;
  for (std::size_t i = 0; i < std::min(a.size(), c.size()); ++i) differs |= a[i].mass != c[i].mass;
  CHECK(differs);
  CHECK(kind_of([] { build_cascade(FixedWeightsRule{{0.5, 0.6, -0.1, 0.0}}, 2, 2, 1); }) == ErrorKind::InvalidRule);
  CHECK(kind_of([] { build_cascade(FixedWeightsRule{{0.5, 0.5, 0.5, 0.0}}, 2, 2, 1); }) == ErrorKind::InvalidRule);
  CHECK(kind_of([] { build_cascade(SubsetRule{{4}}, 2, 2, 1); }) == ErrorKind::InvalidRule);
}

TEST_CASE("mass conservation on 1000 random cells across builders") {
  auto all = assorted_measures();
  std::mt19937_64 rng(7);
  std::vector<Cursor> kids;
  int checked = 0;
  for (int c = 0; c < 1000; ++c) {
    const auto& mu = all[c % all.size()];
    std::uniform_int_distribution<int> child(0, mu.fanout() - 1), depth(0, 9);
    std::vector<int> path;
    int n = depth(rng);
    for (int i = 0; i < n; ++i) path.push_back(child(rng));
    auto cur = mu.locate(path);
    if (!cur || !(cur->mass > 0)) continue;
    REQUIRE(mu.children(*cur, kids));
    double s = 0;
    for (const auto& k : kids) s += k.mass;
    CHECK(std::abs(s - cur->mass) <= 1e-12 * cur->mass);
    ++checked;
  }
  CHECK(checked > 100);
  for (const auto& mu : all) CHECK(mu.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("refinement never changes materialized masses and queries do not mutate") {
  auto mu = build_cascade(RandomWeightsRule{WeightLaw::LogNormal, 0.8}, 2, 2, 3);
  std::vector<int> deep = {1, 2, 3, 0, 1, 2};
  double before = mu.cell_mass(deep);
  auto leaves = mu.leaves();
  std::size_t nodes = mu.nodes().size();
  mu.cell_mass({3, 3, 3, 3, 3, 3, 3});
  CHECK(mu.nodes().size() == nodes);
  mu.refine(6);
  CHECK(mu.cell_mass(deep) == before);
  for (const auto& l : leaves) CHECK(mu.cell_mass(l.path) == l.mass);
}

TEST_CASE("sampling: lebesgue mean, plane support, determinism, failures") {
  auto leb = build_lebesgue(1, 0);
  std::mt19937_64 rng(5);
  double s = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) s += sample_point_with(leb, 30, rng).x[0];
  double se = 1.0 / std::sqrt(3.0) / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(s / n) < 3 * se);
  auto plane = build_plane(2, 1, Subspace::coordinate(2, {0}), 0);
  for (int i = 0; i < 200; ++i) CHECK(std::abs(sample_point_with(plane, 20, rng).x[1]) <= std::ldexp(1.0, -19));
  auto mu = build_cascade(RandomWeightsRule{WeightLaw::Dirichlet, 1.0}, 2, 3, 9);
  CHECK(sample_point(mu, 12, 77) == sample_point(mu, 12, 77));
  auto zero = DyadicMeasure::from_leaves(2, {{{0}, 0.0}}, "test");
  CHECK(kind_of([&] { sample_point(zero, 3, 1); }) == ErrorKind::DegenerateMeasure);
  auto explicit_leaf = DyadicMeasure::from_leaves(2, {{{0}, 1.0}}, "test");
  CHECK(kind_of([&] { sample_point(explicit_leaf, 3, 1); }) == ErrorKind::ResolutionExhausted);
}

TEST_CASE("sampling consistency: chi-square against depth-3 cell masses") {
  auto mu = build_cascade(RandomWeightsRule{WeightLaw::Dirichlet, 2.0}, 2, 3, 21);
  std::vector<double> p = mu.dense(3);
  std::vector<double> count(p.size(), 0);
  std::mt19937_64 rng(8);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    auto path = path_of_point(sample_point_with(mu, 3, rng), 3);
    count[(path[0] << 4) | (path[1] << 2) | path[2]] += 1;
  }
  double chi = 0;
  int dof = -1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0)) {
      CHECK(count[i] == 0);
      continue;
    }
    double e = n * p[i];
    chi += (count[i] - e) * (count[i] - e) / e;
    ++dof;
  }
  boost::math::chi_squared dist(dof);
  double pvalue = 1 - boost::math::cdf(dist, chi);
  CHECK(pvalue > 1e-3);
}

TEST_CASE("ball mass") {
  const double pi = std::numbers::pi;
  auto leb = build_lebesgue(2, 10);
  // Oracle: midpoint quadrature of the disk indicator over [-1,1]^2.
  int n = 2000, in = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double x = -1 + (i + 0.5) * 2.0 / n, y = -1 + (j + 0.5) * 2.0 / n;
      if (x * x + y * y < 0.25) ++in;
    }
  double oracle = in / static_cast<double>(n) / n;
  CHECK(std::abs(oracle - pi / 16) < 1e-4);
  CHECK(std::abs(ball_mass(leb, Point{0, 0}, 0.5) - oracle) < 2e-3);
  CHECK(ball_mass(leb, Point{0.2, -0.1}, 0.0) == 0.0);
  auto plane = build_plane(2, 1, Subspace::coordinate(2, {0}), 0);
  // Oracle: the captured segment (-0.5, 0.5) against total length 2.
  double seg = 0;
  for (int i = 0; i < 100000; ++i) {
    double x = -1 + (i + 0.5) * 2.0 / 100000;
    if (std::abs(x) < 0.5) seg += 2.0 / 100000;
  }
  CHECK(std::abs(ball_mass(plane, Point{0, 0}, 0.5) - seg / 2.0) < 2e-3);
}

TEST_CASE("ball mass is stable under deeper resolution") {
  auto mu = build_cascade(RandomWeightsRule{WeightLaw::Dirichlet, 1.0}, 2, 2, 4);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.5, 0.5), ur(0.05, 0.5);
  for (int c = 0; c < 20; ++c) {
    Point x{u(rng), u(rng)};
    double r = ur(rng);
    double a = ball_mass(mu, x, r, {8, 64});
    double b = ball_mass(mu, x, r, {10, 64});
    CHECK(std::abs(a - b) <= 4 * std::ldexp(1.0, -8));
  }
}

TEST_CASE("persistence round trip and corruption") {
  for (const auto& mu : assorted_measures()) {
    auto back = restore_string(persist_string(mu));
    auto a = mu.leaves(), b = back.leaves();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].path == b[i].path);
      CHECK(a[i].mass == b[i].mass);
    }
    CHECK(back.kind() == mu.kind());
    std::vector<int> deep(9, 1);
    if (mu.rule()) CHECK(back.cell_mass(deep) == mu.cell_mass(deep));
  }
  CHECK(measure_to_json(build_lebesgue(2, 3))["leaves"].size() <= 64);

  auto doc = measure_to_json(build_lebesgue(2, 1));
  auto scaled = doc;
  for (auto& l : scaled["leaves"]) l["mass"] = l["mass"].get<double>() * 0.9;
  scaled["checksum"] = measure_checksum(scaled);
  CHECK(kind_of([&] { measure_from_json(scaled); }) == ErrorKind::CorruptFile);
  auto tampered = doc;
  tampered["leaves"][0]["mass"] = 0.26;
  CHECK(kind_of([&] { measure_from_json(tampered); }) == ErrorKind::CorruptFile);
  auto version = doc;
  version["version"] = 2;
  version["checksum"] = measure_checksum(version);
  CHECK(kind_of([&] { measure_from_json(version); }) == ErrorKind::CorruptFile);
  CHECK(kind_of([] { restore_string("{not json"); }) == ErrorKind::CorruptFile);
}
