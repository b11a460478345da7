#include "sflow/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <random>

#include "sflow/error.hpp"
#include "sflow/scenery.hpp"

namespace sflow {

void EmpiricalDistribution::check() const {
  if (snapshots.empty()) throw Error(ErrorKind::EmptyDistribution, "distribution has no entries");
  if (weights.size() != snapshots.size())
    throw Error(ErrorKind::InvalidArgument, "weights and snapshots differ in length");
  double s = 0;
  for (double w : weights) {
    if (!(w >= 0)) throw Error(ErrorKind::InvalidArgument, "negative weight");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-9) throw Error(ErrorKind::InvalidArgument, "weights do not sum to 1");
}

std::vector<double> flow_times(double t_start, double T, double dt) {
  if (!(dt > 0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  if (!(T >= 0) || !(t_start >= 0)) throw Error(ErrorKind::InvalidArgument, "times must be nonnegative");
  long long n = static_cast<long long>(std::floor(T / dt + 1e-9));
  std::vector<double> t;
  t.reserve(static_cast<std::size_t>(n + 1));
  for (long long i = 0; i <= n; ++i) t.push_back(t_start + static_cast<double>(i) * dt);
  return t;
}

namespace {

Snapshot scenery_or_throw(const DyadicMeasure& mu, const Point& x, double t, int m) {
  try {
    return scenery_at(mu, x, t, m);
  } catch (const SceneryFailure&) {
    throw;
  } catch (const Error& e) {
    throw SceneryFailure(e.kind(), t, std::string(e.what()) + " (sample time " + std::to_string(t) + ")");
  }
}

std::vector<double> equal_weights(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

}  // namespace

int default_snapshot_depth(int d) {
  if (d <= 1) return 12;
  if (d == 2) return 8;
  if (d == 3) return 5;
  return 3;
}

EmpiricalDistribution empirical_td(const DyadicMeasure& mu, const Point& x, double T, double dt,
                                   int m, double t_start) {
  EmpiricalDistribution e;
  for (double t : flow_times(t_start, T, dt)) e.snapshots.push_back(scenery_or_throw(mu, x, t, m));
  e.weights = equal_weights(e.snapshots.size());
  e.provenance = {"flow", x, t_start, T, dt, 0};
  return e;
}

EmpiricalDistribution empirical_cp(const DyadicMeasure& mu, const Point& x, int N, int m) {
  if (N < 1) throw Error(ErrorKind::InvalidArgument, "N must be >= 1");
  EmpiricalDistribution e;
  MeasurePoint cur{mu, x};
  for (int k = 0; k < N; ++k) {
    std::vector<double> raw = deposit(cur.mu, Point(mu.dim()), 1.0, m, m);
    e.snapshots.emplace_back(mu.dim(), m, Domain::Cube, std::move(raw), static_cast<double>(k), cur.x);
    if (k + 1 == N) break;
    try {
      cur = cp_magnify(cur);
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::UndefinedMagnification) throw;
      throw TruncatedOrbit(static_cast<std::size_t>(k + 1),
                           "orbit stops after " + std::to_string(k + 1) + " steps: " + err.what());
    }
  }
  e.weights = equal_weights(e.snapshots.size());
  e.provenance = {"cp", x, 0, 0, 0, N};
  return e;
}

SlicedProfile sliced_profile(const Snapshot& s) {
  constexpr int kBins = 2048;
  int d = s.dim();
  std::vector<std::array<double, kMaxDim>> dirs;
  for (int i = 0; i < d; ++i) {
    std::array<double, kMaxDim> u{};
    u[i] = 1;
    dirs.push_back(u);
  }
  double r2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      for (double sg : {1.0, -1.0}) {
        std::array<double, kMaxDim> u{};
        u[i] = r2;
        u[j] = sg * r2;
        dirs.push_back(u);
      }
  double R = std::sqrt(static_cast<double>(d));
  SlicedProfile p;
  p.d = d;
  p.bin_width = 2 * R / kBins;
  const GridGeometry& g = s.grid();
  double half = 0.5 * g.side;
  for (const auto& u : dirs) {
    std::vector<double> hist(kBins, 0.0);
    for (std::size_t idx = 0; idx < s.cells(); ++idx) {
      double m = s.mass(idx);
      if (!(m > 0)) continue;
      double proj = 0;
      for (int i = 0; i < d; ++i) proj += u[i] * (g.lo[idx * d + i] + half);
      int b = static_cast<int>(std::floor((proj + R) / p.bin_width));
      hist[std::clamp(b, 0, kBins - 1)] += m;
    }
    for (int b = 1; b < kBins; ++b) hist[b] += hist[b - 1];
    p.cdf.push_back(std::move(hist));
  }
  return p;
}

double sliced_distance(const SlicedProfile& a, const SlicedProfile& b) {
  if (a.d != b.d) throw Error(ErrorKind::DimensionMismatch, "profiles differ in dimension");
  double best = 0;
  for (std::size_t k = 0; k < a.cdf.size(); ++k) {
    double s = 0;
    for (std::size_t i = 0; i < a.cdf[k].size(); ++i) s += std::abs(a.cdf[k][i] - b.cdf[k][i]);
    best = std::max(best, s * a.bin_width);
  }
  return best;
}

double distribution_distance(const Snapshot& a, const Snapshot& b) {
  if (a.dim() != b.dim()) throw Error(ErrorKind::DimensionMismatch, "snapshots differ in dimension");
  return sliced_distance(sliced_profile(a), sliced_profile(b));
}

namespace {

const SlicedProfile& lebesgue_profile(int d, int m) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, SlicedProfile> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find({d, m});
  if (it == cache.end()) it = cache.emplace(std::make_pair(d, m), sliced_profile(lebesgue_snapshot(d, m))).first;
  return it->second;
}

}  // namespace

double distribution_distance(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
  a.check();
  b.check();
  if (a.snapshots[0].dim() != b.snapshots[0].dim())
    throw Error(ErrorKind::DimensionMismatch, "distributions differ in dimension");
  struct Key {
    double v;
    int side;
    double w;
  };
  std::vector<Key> keys;
  for (int side = 0; side < 2; ++side) {
    const auto& e = side == 0 ? a : b;
    for (std::size_t i = 0; i < e.size(); ++i) {
      const Snapshot& s = e.snapshots[i];
      double v = sliced_distance(sliced_profile(s), lebesgue_profile(s.dim(), s.depth()));
      keys.push_back({v, side, e.weights[i]});
    }
  }
  std::sort(keys.begin(), keys.end(), [](const Key& p, const Key& q) {
    if (p.v != q.v) return p.v < q.v;
    if (p.side != q.side) return p.side < q.side;
    return p.w < q.w;
  });
  double fa = 0, fb = 0, dist = 0;
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    (keys[i].side == 0 ? fa : fb) += keys[i].w;
    dist += std::abs(fa - fb) * (keys[i + 1].v - keys[i].v);
  }
  return dist;
}

ConicalResult conical_statistic(const EmpiricalDistribution& e, const ConicalOptions& opt) {
  e.check();
  ConicalResult r;
  r.eps = opt.eps;
  SearchParams search = opt.search;
  std::vector<double> above(opt.eps.size(), 0.0);
  double sum = 0, minv = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < e.size(); ++i) {
    ConeEvaluator ev(e.snapshots[i], opt.alpha);
    ConeMin cm = min_cone_mass(ev, opt.k, search);
    search.warm_start = cm.V;
    r.times.push_back(e.snapshots[i].time());
    r.min_per_time.push_back(cm.value);
    for (std::size_t j = 0; j < opt.eps.size(); ++j)
      if (cm.value > opt.eps[j]) above[j] += e.weights[i];
    sum += e.weights[i] * cm.value;
    minv = std::min(minv, cm.value);
  }
  r.fraction = above;
  r.mean_over_t = sum;
  r.min_over_t = minv;
  return r;
}

ConicalResult conical_statistic(const DyadicMeasure& mu, const Point& x, double T,
                                const ConicalOptions& opt) {
  if (!(opt.alpha > 0 && opt.alpha <= 1)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0,1]");
  double dt = opt.dt > 0 ? opt.dt : std::log(2.0) / 4;
  int m = opt.m > 0 ? opt.m : default_snapshot_depth(mu.dim());
  std::vector<double> times = flow_times(opt.t_start, T, dt);
  ConicalResult r;
  r.eps = opt.eps;
  SearchParams search = opt.search;
  std::vector<std::size_t> above(opt.eps.size(), 0);
  double sum = 0, minv = std::numeric_limits<double>::infinity();
  for (double t : times) {
    Snapshot s = scenery_or_throw(mu, x, t, m);
    ConeEvaluator ev(s, opt.alpha);
    ConeMin cm = min_cone_mass(ev, opt.k, search);
    search.warm_start = cm.V;
    r.times.push_back(t);
    r.min_per_time.push_back(cm.value);
    for (std::size_t j = 0; j < opt.eps.size(); ++j)
      if (cm.value > opt.eps[j]) ++above[j];
    sum += cm.value;
    minv = std::min(minv, cm.value);
  }
  double n = static_cast<double>(times.size());
  for (std::size_t c : above) r.fraction.push_back(static_cast<double>(c) / n);
  r.mean_over_t = sum / n;
  r.min_over_t = minv;
  return r;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y,
                           double* residual) {
  std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw Error(ErrorKind::InvalidArgument, "need at least two points");
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0)) throw Error(ErrorKind::InvalidArgument, "degenerate abscissae");
  double slope = sxy / sxx;
  if (residual) {
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double e = y[i] - (my + slope * (x[i] - mx));
      rss += e * e;
    }
    *residual = std::sqrt(rss / n);
  }
  return slope;
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) throw Error(ErrorKind::EmptyDistribution, "percentile of empty sample");
  std::sort(v.begin(), v.end());
  double pos = p / 100.0 * static_cast<double>(v.size() - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  double f = pos - static_cast<double>(lo);
  return v[lo] + f * (v[hi] - v[lo]);
}

DimensionEstimate local_dimension(const DyadicMeasure& mu, const Point& x, double r_min,
                                  double r_max, BallMassOptions ball) {
  if (!(r_min > 0 && r_min < r_max)) throw Error(ErrorKind::InvalidArgument, "need 0 < r_min < r_max");
  if (x.dim != mu.dim()) throw Error(ErrorKind::DimensionMismatch, "point dimension differs from measure");
  for (int i = 0; i < x.dim; ++i)
    if (x.x[i] - r_max < -1.0 || x.x[i] + r_max > 1.0)
      throw Error(ErrorKind::OutOfDomain, "B(x, r_max) leaves the cube at x=" + x.to_string());
  DimensionEstimate est;
  est.r_min = r_min;
  est.r_max = r_max;
  for (int j = 0;; ++j) {
    double r = std::ldexp(r_max, -j);
    if (r < r_min * (1 - 1e-12)) break;
    est.radii.push_back(r);
  }
  if (est.radii.size() < 2) throw Error(ErrorKind::InvalidArgument, "range holds fewer than two dyadic radii");
  std::vector<double> lx, ly;
  for (double r : est.radii) {
    double m = ball_mass(mu, x, r, ball);
    if (!(m > 0)) throw Error(ErrorKind::OutsideSupport, "zero ball mass at r=" + std::to_string(r));
    est.masses.push_back(m);
    lx.push_back(std::log(r));
    ly.push_back(std::log(m));
  }
  est.raw_slope = least_squares_slope(lx, ly, &est.residual);
  std::size_t n = lx.size(), half = std::max<std::size_t>(2, (n + 1) / 2);
  std::vector<double> fx(lx.end() - half, lx.end()), fy(ly.end() - half, ly.end());
  est.finest_half_slope = least_squares_slope(fx, fy);
  est.slope = std::clamp(est.raw_slope, 0.0, static_cast<double>(mu.dim()));
  return est;
}

DimensionAggregate local_dimension_aggregate(const DyadicMeasure& mu, int points, double r_min,
                                             double r_max, int sample_depth, std::uint64_t seed,
                                             BallMassOptions ball) {
  if (points < 1) throw Error(ErrorKind::InvalidArgument, "need at least one point");
  DimensionAggregate agg;
  std::mt19937_64 rng(seed);
  long long attempts = 0;
  while (static_cast<int>(agg.points.size()) < points) {
    if (++attempts > 1000LL * points)
      throw Error(ErrorKind::OutOfDomain, "too few sampled points keep B(x, r_max) inside the cube");
    Point x = sample_point_with(mu, sample_depth, rng);
    bool inside = true;
    for (int i = 0; i < x.dim; ++i)
      if (x.x[i] - r_max < -1.0 || x.x[i] + r_max > 1.0) inside = false;
    if (!inside) {
      ++agg.rejected;
      continue;
    }
    agg.points.push_back(x);
    agg.estimates.push_back(local_dimension(mu, x, r_min, r_max, ball));
  }
  std::vector<double> slopes;
  for (const auto& e : agg.estimates) slopes.push_back(e.slope);
  agg.mean = std::accumulate(slopes.begin(), slopes.end(), 0.0) / static_cast<double>(slopes.size());
  agg.percentile5 = percentile(slopes, 5.0);
  return agg;
}

double box_counting_dimension(const Snapshot& s, double mass_floor, int min_depth) {
  int d = s.dim(), m = s.depth();
  if (mass_floor < 0) mass_floor = std::ldexp(1e-3, -d * m);
  // Count inside the central cube [-h, h]^d, which lies in the unit ball, so that
  // the ball's boundary does not bend the slope; fall back to the whole grid when
  // that cube carries no mass.
  int c = std::max(1, static_cast<int>(std::ceil(std::log2(std::sqrt(static_cast<double>(d))))));
  double h = std::ldexp(1.0, -c);
  int first = std::max(min_depth, c + 1);
  if (m - first < 1) throw Error(ErrorKind::InvalidArgument, "snapshot too shallow for box counting");
  const GridGeometry& g = s.grid();
  std::vector<unsigned char> central(s.cells(), 1);
  double inside = 0;
  for (std::size_t i = 0; i < s.cells(); ++i) {
    Point p = g.center(i);
    for (int a = 0; a < d; ++a) central[i] &= std::abs(p.x[a]) < h;
    if (central[i]) inside += s.mass(i);
  }
  if (!(inside > mass_floor)) {
    first = min_depth;
    std::fill(central.begin(), central.end(), 1);
  }
  std::vector<double> lx, ly;
  for (int j = first; j <= m; ++j) {
    int shift = d * (m - j);
    std::vector<double> block(std::size_t{1} << (d * j), 0.0);
    for (std::size_t i = 0; i < s.cells(); ++i)
      if (central[i]) block[i >> shift] += s.mass(i);
    double count = 0;
    for (double v : block)
      if (v > mass_floor) count += 1;
    if (count == 0) throw Error(ErrorKind::DegenerateMeasure, "no cell above the mass floor");
    lx.push_back(j * std::log(2.0));
    ly.push_back(std::log(count));
  }
  return least_squares_slope(lx, ly);
}

double dimension_of_distribution(const EmpiricalDistribution& e, const SnapshotDimension& dim) {
  if (e.snapshots.empty()) throw Error(ErrorKind::EmptyDistribution, "distribution has no entries");
  e.check();
  double s = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    double v = dim ? dim(e.snapshots[i]) : box_counting_dimension(e.snapshots[i]);
    s += e.weights[i] * v;
  }
  return s;
}

double intensity_measure(const EmpiricalDistribution& e, const std::vector<int>& cell) {
  e.check();
  double s = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const Snapshot& snap = e.snapshots[i];
    int d = snap.dim(), m = snap.depth();
    int n = static_cast<int>(cell.size());
    if (n > m) throw Error(ErrorKind::DepthOverflow, "cell deeper than snapshot resolution");
    std::size_t idx = 0;
    for (int c : cell) {
      if (c < 0 || c >= (1 << d)) throw Error(ErrorKind::InvalidArgument, "child index out of range");
      idx = (idx << d) | static_cast<std::size_t>(c);
    }
    int shift = d * (m - n);
    std::size_t first = idx << shift, count = std::size_t{1} << shift;
    double v = 0;
    for (std::size_t j = first; j < first + count; ++j) v += snap.mass(j);
    s += e.weights[i] * v;
  }
  return s;
}

Clustering two_medoids(const EmpiricalDistribution& e) {
  e.check();
  std::size_t n = e.size();
  Clustering c;
  c.label.assign(n, 0);
  if (n == 1) {
    c.weight[0] = e.weights[0];
    return c;
  }
  std::vector<SlicedProfile> prof;
  for (const auto& s : e.snapshots) prof.push_back(sliced_profile(s));
  std::vector<double> D(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) D[i * n + j] = D[j * n + i] = sliced_distance(prof[i], prof[j]);
  std::size_t a = 0, b = 1;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (D[i * n + j] > D[a * n + b]) {
        a = i;
        b = j;
      }
  for (int iter = 0; iter < 100; ++iter) {
    for (std::size_t i = 0; i < n; ++i) c.label[i] = D[i * n + b] < D[i * n + a] ? 1 : 0;
    std::size_t med[2] = {a, b};
    for (int k = 0; k < 2; ++k) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        if (c.label[i] != k) continue;
        double cost = 0;
        for (std::size_t j = 0; j < n; ++j)
          if (c.label[j] == k) cost += e.weights[j] * D[i * n + j];
        if (cost < best) {
          best = cost;
          med[k] = i;
        }
      }
    }
    if (med[0] == a && med[1] == b) break;
    a = med[0];
    b = med[1];
  }
  c.medoid[0] = static_cast<int>(a);
  c.medoid[1] = static_cast<int>(b);
  for (std::size_t i = 0; i < n; ++i) c.weight[c.label[i]] += e.weights[i];
  return c;
}

}  // namespace sflow
