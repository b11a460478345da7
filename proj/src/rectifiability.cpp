#include "sflow/rectifiability.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "sflow/cones.hpp"
#include "sflow/error.hpp"

namespace sflow {

namespace {

constexpr double kPi = std::numbers::pi;

void check_params(int d, int k, double alpha) {
  if (k < 1 || k > d - 1) throw Error(ErrorKind::InvalidArgument, "k must satisfy 1 <= k <= d-1");
  if (!(alpha > 0 && alpha <= 1)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0,1]");
}

// A set of test vectors with per-vector slack: v counts as inside the cone
// around V when dist(v, V) < alpha |v| - slack.
struct Probe {
  std::array<double, kMaxDim> v;
  double norm;
  double slack;
};

struct Score {
  std::size_t count = 0;
  double penalty = 0;
  bool operator<(const Score& o) const {
    return count != o.count ? count < o.count : penalty < o.penalty;
  }
};

Score score(const std::vector<Probe>& probes, const Subspace& V, double alpha) {
  Score s;
  for (const auto& p : probes) {
    double excess = alpha * p.norm - p.slack - std::sqrt(std::max(0.0, V.dist_sq(p.v.data())));
    if (excess > 0) {
      ++s.count;
      s.penalty += excess / p.norm;
    }
  }
  return s;
}

Eigen::MatrixXd gaussian_frame(int d, int m, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd g(d, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < d; ++i) g(i, j) = z(rng);
  return g;
}

std::optional<Subspace> planar_search(const std::vector<Probe>& probes, double alpha) {
  std::vector<std::pair<double, double>> arcs;
  arcs.reserve(probes.size());
  for (const auto& p : probes) {
    double a = alpha - p.slack / p.norm;
    if (!(a > 0)) continue;
    arcs.emplace_back(std::atan2(p.v[1], p.v[0]), a >= 1 ? kPi / 2 : std::asin(a));
  }
  auto phi = uncovered_angle(std::move(arcs));
  if (!phi) return std::nullopt;
  return Subspace::line(*phi);
}

std::optional<Subspace> net_search(const std::vector<Probe>& probes, int d, int k, double alpha,
                                   const VacancyParams& params) {
  int m = d - k;
  std::vector<Subspace> candidates;
  std::mt19937_64 rng(params.seed);
  if (d == 3) {
    int n = params.net_size > 0 ? params.net_size : 1024;
    for (const auto& dir : hemisphere_net(n)) {
      Eigen::MatrixXd v(3, 1);
      v.col(0) = dir;
      Subspace line = Subspace::span_of(v);
      candidates.push_back(k == 2 ? line : line.complement());
    }
  } else {
    int n = params.net_size > 0 ? params.net_size : 512;
    for (int i = 0; i < n; ++i) candidates.push_back(Subspace::span_of(gaussian_frame(d, m, rng)));
  }
  Subspace best = candidates.front();
  Score best_score = score(probes, best, alpha);
  for (const auto& V : candidates) {
    Score s = score(probes, V, alpha);
    if (s.count == 0) return V;
    if (s < best_score) {
      best_score = s;
      best = V;
    }
  }
  double step = 0.25;
  for (int it = 0; it < params.refine_steps; ++it) {
    Eigen::MatrixXd g = gaussian_frame(d, m, rng);
    for (double sgn : {1.0, -1.0}) {
      Subspace V = Subspace::span_of(best.frame() + sgn * step * g);
      Score s = score(probes, V, alpha);
      if (s.count == 0) return V;
      if (s < best_score) {
        best_score = s;
        best = V;
      }
    }
    step *= 0.85;
  }
  return std::nullopt;
}

std::vector<std::array<double, kMaxDim>> subcell_offsets(int d) {
  std::vector<std::array<double, kMaxDim>> offs;
  if (d == 2 || d == 3) {
    int per = d == 2 ? 8 : 4;
    for (int s = 0; s < 64; ++s) {
      std::array<double, kMaxDim> o{};
      int q = s;
      for (int i = 0; i < d; ++i) {
        o[i] = (q % per + 0.5) / per;
        q /= per;
      }
      offs.push_back(o);
    }
  } else {
    for (int s = 1; s <= 64; ++s) {
      std::array<double, kMaxDim> o{};
      halton(static_cast<std::uint64_t>(s), d, o.data());
      offs.push_back(o);
    }
  }
  return offs;
}

}  // namespace

std::optional<double> uncovered_angle(std::vector<std::pair<double, double>> arcs) {
  if (arcs.empty()) return kPi / 2;
  struct Arc {
    double lo, hi;
  };
  std::vector<Arc> folded;
  folded.reserve(arcs.size());
  for (auto [c, w] : arcs) {
    if (w > kPi / 2) return std::nullopt;
    double lo = std::fmod(c - w, kPi);
    if (lo < 0) lo += kPi;
    if (lo >= kPi) lo = 0;
    folded.push_back({lo, lo + 2 * w});
  }
  std::sort(folded.begin(), folded.end(),
            [](const Arc& a, const Arc& b) { return a.lo != b.lo ? a.lo < b.lo : a.hi < b.hi; });
  // Gaps of the union over one period [L0, L0 + pi]; arcs are open, so a gap may be
  // a single point.
  double start = folded.front().lo;
  std::vector<std::pair<double, double>> gaps;
  double reach = start;
  for (const auto& a : folded) {
    if (a.lo >= reach && reach > start) gaps.push_back({reach, a.lo});
    reach = std::max(reach, a.hi);
  }
  if (reach <= start + kPi) gaps.push_back({reach, start + kPi});
  // Whatever reaches past L0 + pi wraps around onto the start of the period.
  double wrapped = reach - kPi;
  std::optional<std::pair<double, double>> best;
  for (auto [g0, g1] : gaps) {
    g0 = std::max(g0, wrapped);
    if (g0 > g1) continue;
    if (!best || g1 - g0 > best->second - best->first) best = std::pair{g0, g1};
  }
  if (!best) return std::nullopt;
  double phi = std::fmod(0.5 * (best->first + best->second), kPi);
  return phi < 0 ? phi + kPi : phi;
}

double PointCloud::mean_nearest_neighbor() const {
  if (points.size() < 2) throw Error(ErrorKind::InvalidArgument, "nearest-neighbor distance needs two points");
  double sum = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (i == j) continue;
      double s = 0;
      for (int c = 0; c < d; ++c) {
        double t = points[i].x[c] - points[j].x[c];
        s += t * t;
      }
      best = std::min(best, s);
    }
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(points.size());
}

double PointCloud::scale_floor() const { return r_min ? *r_min : 3.0 * mean_nearest_neighbor(); }

void PointCloud::check() const {
  if (d < 1 || d > kMaxDim) throw Error(ErrorKind::InvalidArgument, "unsupported dimension");
  for (const auto& p : points)
    if (p.dim != d) throw Error(ErrorKind::DimensionMismatch, "point dimension differs from cloud");
  if (r_min && !(*r_min > 0)) throw Error(ErrorKind::InvalidArgument, "r_min must be positive");
}

PointCloud read_point_cloud_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  PointCloud E;
  E.d = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (E.points.empty()) continue;  // header row
      throw Error(ErrorKind::InvalidArgument, "non-numeric row in " + path);
    }
    if (E.d == 0) E.d = static_cast<int>(v.size());
    if (static_cast<int>(v.size()) != E.d) throw Error(ErrorKind::DimensionMismatch, "ragged rows in " + path);
    E.points.push_back(Point::from_vector(v));
  }
  if (E.points.empty()) throw Error(ErrorKind::InvalidArgument, "no points in " + path);
  E.check();
  return E;
}

std::optional<Subspace> cone_vacancy(const PointCloud& E, std::size_t index, int k, double alpha,
                                     double r, const VacancyParams& params) {
  E.check();
  check_params(E.d, k, alpha);
  if (index >= E.points.size()) throw Error(ErrorKind::InvalidArgument, "point index out of range");
  if (E.points.size() > 1 && r < E.scale_floor())
    throw Error(ErrorKind::InvalidArgument, "r is below the sampling scale floor");
  const Point& x = E.points[index];
  std::vector<Probe> probes;
  for (std::size_t j = 0; j < E.points.size(); ++j) {
    if (j == index) continue;
    Probe p{};
    double s = 0;
    for (int i = 0; i < E.d; ++i) {
      p.v[i] = E.points[j].x[i] - x.x[i];
      s += p.v[i] * p.v[i];
    }
    p.norm = std::sqrt(s);
    if (p.norm == 0 || p.norm > r) continue;
    probes.push_back(p);
  }
  if (E.d == 2) return planar_search(probes, alpha);
  return net_search(probes, E.d, k, alpha, params);
}

std::optional<Subspace> cone_vacancy(const PointCloud& E, const Point& x, int k, double alpha,
                                     double r, const VacancyParams& params) {
  for (std::size_t i = 0; i < E.points.size(); ++i) {
    bool same = E.points[i].dim == x.dim;
    for (int c = 0; same && c < x.dim; ++c) same = E.points[i].x[c] == x.x[c];
    if (same) return cone_vacancy(E, i, k, alpha, r, params);
  }
  throw Error(ErrorKind::InvalidArgument, "x is not a point of E");
}

std::optional<Subspace> support_vacancy(const Snapshot& nu, int k, double alpha, double mass_floor,
                                        const VacancyParams& params) {
  int d = nu.dim();
  check_params(d, k, alpha);
  if (mass_floor < 0) mass_floor = std::ldexp(1e-3, -d * nu.depth());
  const GridGeometry& g = nu.grid();
  double slack = 0.5 * g.side * std::sqrt(static_cast<double>(d));
  auto offs = subcell_offsets(d);
  auto collect = [&](std::size_t first, std::size_t last) {
    std::vector<Probe> probes;
    for (std::size_t idx = 0; idx < nu.cells(); ++idx) {
      if (!(nu.mass(idx) > mass_floor)) continue;
      const double* lo = &g.lo[idx * d];
      for (std::size_t q = first; q < last; ++q) {
        Probe p{};
        double s = 0;
        for (int i = 0; i < d; ++i) {
          p.v[i] = lo[i] + offs[q][i] * g.side;
          s += p.v[i] * p.v[i];
        }
        p.norm = std::sqrt(s);
        p.slack = slack;
        if (p.norm == 0 || p.norm > 1 || !(alpha * p.norm > slack)) continue;
        probes.push_back(p);
      }
    }
    return probes;
  };
  if (d == 2) {
    // Arcs of a subset of the test points covering the circle already settle it.
    std::size_t mid = offs.size() / 2;
    if (!planar_search(collect(mid, mid + 1), alpha)) return std::nullopt;
    return planar_search(collect(0, offs.size()), alpha);
  }
  auto probes = collect(0, offs.size());
  return net_search(probes, d, k, alpha, params);
}

}  // namespace sflow
