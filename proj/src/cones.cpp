#include "sflow/cones.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>

#include "sflow/error.hpp"

namespace sflow {

namespace {

constexpr double kPi = std::numbers::pi;

// Angular layout of the depth-m grid in the plane. Each cell is an interval of
// folded angle (mod pi), stored twice (shifted by pi) so that any arc of length
// at most pi starting in [0, pi) is a contiguous range.
struct PlanarGeometry {
  struct Copy {
    int cell;
    double a, b;
    double sign;  // direction of the folded ray in actual coordinates
  };
  struct Bucket {
    double wmax;
    std::vector<double> a_sorted;
    std::vector<int> ids;
  };
  std::vector<Copy> copies;
  std::vector<int> by_b;
  std::vector<double> b_sorted;
  std::vector<Bucket> buckets;
};

const PlanarGeometry& planar_geometry(int m) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<PlanarGeometry>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[m];
  if (slot) return *slot;
  auto pg = std::make_unique<PlanarGeometry>();
  const GridGeometry& g = grid_geometry(2, m);
  std::size_t n = g.cells();
  pg->copies.reserve(2 * n);
  for (std::size_t idx = 0; idx < n; ++idx) {
    double x0 = g.lo[2 * idx], y0 = g.lo[2 * idx + 1];
    double x1 = x0 + g.side, y1 = y0 + g.side;
    double phi0 = std::atan2(0.5 * (y0 + y1), 0.5 * (x0 + x1));
    double dmin = 0, dmax = 0;
    bool first = true;
    for (double cx : {x0, x1})
      for (double cy : {y0, y1}) {
        if (cx == 0.0 && cy == 0.0) continue;
        double dphi = std::remainder(std::atan2(cy, cx) - phi0, 2 * kPi);
        if (first) {
          dmin = dmax = dphi;
          first = false;
        } else {
          dmin = std::min(dmin, dphi);
          dmax = std::max(dmax, dphi);
        }
      }
    double a0 = phi0 + dmin, w = dmax - dmin;
    double kappa = std::floor(a0 / kPi);
    double a = a0 - kappa * kPi;
    if (a >= kPi) {
      a -= kPi;
      kappa += 1;
    }
    if (a < 0) a = 0;
    double sign = std::fmod(std::abs(kappa), 2.0) == 0.0 ? 1.0 : -1.0;
    pg->copies.push_back({static_cast<int>(idx), a, a + w, sign});
    pg->copies.push_back({static_cast<int>(idx), a + kPi, a + kPi + w, -sign});
  }
  std::size_t nc = pg->copies.size();
  pg->by_b.resize(nc);
  for (std::size_t i = 0; i < nc; ++i) pg->by_b[i] = static_cast<int>(i);
  std::sort(pg->by_b.begin(), pg->by_b.end(), [&](int p, int q) {
    const auto& cp = pg->copies[p];
    const auto& cq = pg->copies[q];
    return cp.b != cq.b ? cp.b < cq.b : p < q;
  });
  pg->b_sorted.resize(nc);
  for (std::size_t i = 0; i < nc; ++i) pg->b_sorted[i] = pg->copies[pg->by_b[i]].b;
  constexpr int kBuckets = 14;
  pg->buckets.resize(kBuckets);
  for (int j = 0; j < kBuckets; ++j) pg->buckets[j].wmax = 0;
  std::vector<std::vector<int>> members(kBuckets);
  for (std::size_t i = 0; i < nc; ++i) {
    double w = pg->copies[i].b - pg->copies[i].a;
    int j = 0;
    while (j < kBuckets - 1 && w <= kPi * std::ldexp(1.0, -(j + 1))) ++j;
    members[j].push_back(static_cast<int>(i));
    pg->buckets[j].wmax = std::max(pg->buckets[j].wmax, w);
  }
  for (int j = 0; j < kBuckets; ++j) {
    auto& ids = members[j];
    std::sort(ids.begin(), ids.end(), [&](int p, int q) {
      const auto& cp = pg->copies[p];
      const auto& cq = pg->copies[q];
      return cp.a != cq.a ? cp.a < cq.a : p < q;
    });
    pg->buckets[j].ids = ids;
    pg->buckets[j].a_sorted.resize(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) pg->buckets[j].a_sorted[i] = pg->copies[ids[i]].a;
  }
  slot = std::move(pg);
  return *slot;
}

// Interval of v.y over a box, squared.
inline void square_bounds(double c, double r, double& lo, double& hi) {
  double a = c - r, b = c + r;
  if (a <= 0 && b >= 0) lo = 0;
  else lo = std::min(a * a, b * b);
  hi = std::max(a * a, b * b);
}

double sampled_cone_mass(const Snapshot& nu, const Subspace& V, double alpha) {
  int d = nu.dim();
  const GridGeometry& g = grid_geometry(d, nu.depth());
  Subspace P = V.complement();
  const auto& fv = V.frame();
  const auto& fp = P.frame();
  int mv = V.dim(), mp = P.dim();
  double a2 = alpha * alpha, b2 = 1.0 - alpha * alpha;
  double half = 0.5 * g.side;
  // Subcell sample offsets in [0,1)^d.
  std::vector<std::array<double, kMaxDim>> offs;
  if (d == 2 || d == 3) {
    int per = d == 2 ? 8 : 4;
    int total = d == 2 ? 64 : 64;
    for (int s = 0; s < total; ++s) {
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
  double total = 0;
  for (std::size_t idx = 0; idx < nu.cells(); ++idx) {
    double m = nu.mass(idx);
    if (!(m > 0)) continue;
    const double* lo = &g.lo[idx * d];
    double vmin = 0, vmax = 0, pmin = 0, pmax = 0;
    for (int j = 0; j < mv; ++j) {
      double c = 0, r = 0;
      for (int i = 0; i < d; ++i) {
        c += fv(i, j) * (lo[i] + half);
        r += std::abs(fv(i, j)) * half;
      }
      double l, h;
      square_bounds(c, r, l, h);
      vmin += l;
      vmax += h;
    }
    for (int j = 0; j < mp; ++j) {
      double c = 0, r = 0;
      for (int i = 0; i < d; ++i) {
        c += fp(i, j) * (lo[i] + half);
        r += std::abs(fp(i, j)) * half;
      }
      double l, h;
      square_bounds(c, r, l, h);
      pmin += l;
      pmax += h;
    }
    double fmin = a2 * vmin - b2 * pmax;
    double fmax = a2 * vmax - b2 * pmin;
    if (fmin > 0) {
      total += m;
      continue;
    }
    if (fmax <= 0) continue;
    int inside = 0;
    double y[kMaxDim];
    for (const auto& o : offs) {
      for (int i = 0; i < d; ++i) y[i] = lo[i] + o[i] * g.side;
      double pv = V.proj_sq(y), pp = P.proj_sq(y);
      if (a2 * pv - b2 * pp > 0) ++inside;
    }
    total += m * inside / static_cast<double>(offs.size());
  }
  return total;
}

void check_opening(double alpha) {
  if (!(alpha > 0 && alpha <= 1)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0,1]");
}

}  // namespace

struct ConeEvaluator::Planar {
  const PlanarGeometry* geo;
  const Snapshot* nu;
  std::vector<double> prefix;
  double total;

  double before(double gamma) const {
    std::size_t k = static_cast<std::size_t>(
        std::upper_bound(geo->b_sorted.begin(), geo->b_sorted.end(), gamma) - geo->b_sorted.begin());
    double s = prefix[k];
    const GridGeometry& g = nu->grid();
    double cg = std::cos(gamma), sg = std::sin(gamma);
    double area = g.side * g.side;
    for (const auto& bucket : geo->buckets) {
      if (bucket.ids.empty()) continue;
      auto first = std::lower_bound(bucket.a_sorted.begin(), bucket.a_sorted.end(), gamma - bucket.wmax);
      auto last = std::lower_bound(first, bucket.a_sorted.end(), gamma);
      for (auto it = first; it != last; ++it) {
        const auto& cp = geo->copies[bucket.ids[it - bucket.a_sorted.begin()]];
        if (!(cp.b > gamma)) continue;
        double m = nu->mass(static_cast<std::size_t>(cp.cell));
        if (!(m > 0)) continue;
        double ux = cp.sign * cg, uy = cp.sign * sg;
        double x0 = g.lo[2 * cp.cell], y0 = g.lo[2 * cp.cell + 1];
        double part = rect_halfplane_area(x0, x0 + g.side, y0, y0 + g.side, -uy, ux, 0.0);
        s += m * part / area;
      }
    }
    return s;
  }
};

ConeEvaluator::ConeEvaluator(const Snapshot& nu, double alpha) : nu_(&nu), alpha_(alpha) {
  check_opening(alpha);
  if (nu.dim() == 2) {
    planar_ = std::make_unique<Planar>();
    planar_->geo = &planar_geometry(nu.depth());
    planar_->nu = &nu;
    const auto& geo = *planar_->geo;
    planar_->prefix.resize(geo.by_b.size() + 1);
    planar_->prefix[0] = 0;
    for (std::size_t i = 0; i < geo.by_b.size(); ++i)
      planar_->prefix[i + 1] =
          planar_->prefix[i] + nu.mass(static_cast<std::size_t>(geo.copies[geo.by_b[i]].cell));
    planar_->total = nu.total_mass();
  }
}

ConeEvaluator::~ConeEvaluator() = default;

double ConeEvaluator::mass_at_angle(double theta) const {
  if (!planar_) throw Error(ErrorKind::InvalidSubspace, "angle parametrization needs d = 2");
  if (alpha_ >= 1.0) return planar_->total;
  double beta = std::asin(alpha_);
  double u = std::fmod(theta - beta, kPi);
  if (u < 0) u += kPi;
  double v = u + 2 * beta;
  return std::max(0.0, planar_->before(v) - planar_->before(u));
}

double ConeEvaluator::mass(const Subspace& V) const {
  if (V.ambient() != nu_->dim())
    throw Error(ErrorKind::InvalidSubspace, "subspace ambient dimension differs from snapshot");
  if (V.dim() >= V.ambient()) throw Error(ErrorKind::InvalidSubspace, "V must be a proper subspace");
  if (planar_) {
    const auto& f = V.frame();
    return mass_at_angle(std::atan2(f(1, 0), f(0, 0)));
  }
  if (alpha_ >= 1.0) {
    // Only V-perp is excluded, a null set for the uniform-within-cell model.
    return nu_->total_mass();
  }
  return sampled_cone_mass(*nu_, V, alpha_);
}

double cone_mass(const Snapshot& nu, const Subspace& V, double alpha) {
  ConeEvaluator e(nu, alpha);
  return e.mass(V);
}

std::vector<Eigen::Vector3d> hemisphere_net(int n) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(n);
  double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    double z = 1.0 - (i + 0.5) / n;  // z in (0,1)
    double r = std::sqrt(std::max(0.0, 1 - z * z));
    double phi = golden * i;
    out.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return out;
}

namespace {

Subspace subspace_from_direction(const Eigen::Vector3d& n, int k) {
  Eigen::MatrixXd v(3, 1);
  v.col(0) = n.normalized();
  Subspace line = Subspace::span_of(v);
  return k == 2 ? line : line.complement();
}

Eigen::MatrixXd random_frame(int d, int m, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd g(d, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < d; ++i) g(i, j) = z(rng);
  return g;
}

}  // namespace

ConeMin min_cone_mass(const Snapshot& nu, int k, double alpha, const SearchParams& search) {
  ConeEvaluator e(nu, alpha);
  return min_cone_mass(e, k, search);
}

ConeMin min_cone_mass(const ConeEvaluator& eval, int k, const SearchParams& search) {
  int d = eval.dim();
  if (k < 1 || k > d - 1) throw Error(ErrorKind::InvalidArgument, "k must satisfy 1 <= k <= d-1");
  int m = d - k;
  if (search.warm_start && (search.warm_start->ambient() != d || search.warm_start->dim() != m))
    throw Error(ErrorKind::InvalidSubspace, "warm start has the wrong shape");
  ConeMin best;
  best.value = std::numeric_limits<double>::infinity();
  int probes = 0;
  auto consider = [&](const Subspace& V, double value) {
    ++probes;
    if (value < best.value) {
      best.value = value;
      best.V = V;
    }
  };

  if (d == 2) {
    int n = search.net_size > 0 ? search.net_size : 256;
    double best_theta = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      double th = kPi * i / n;
      double v = eval.mass_at_angle(th);
      ++probes;
      if (v < best_val) {
        best_val = v;
        best_theta = th;
      }
    }
    if (search.warm_start) {
      const auto& f = search.warm_start->frame();
      double th = std::atan2(f(1, 0), f(0, 0));
      double v = eval.mass_at_angle(th);
      ++probes;
      if (v < best_val) {
        best_val = v;
        best_theta = th;
      }
    }
    double step = kPi / n;
    for (int s = 0; s < search.refine_steps; ++s) {
      double cand[2] = {best_theta - step, best_theta + step};
      double local_best = best_val, local_theta = best_theta;
      for (double th : cand) {
        double v = eval.mass_at_angle(th);
        ++probes;
        if (v < local_best) {
          local_best = v;
          local_theta = th;
        }
      }
      best_val = local_best;
      best_theta = local_theta;
      step *= 0.5;
    }
    best_theta = std::fmod(best_theta, kPi);
    if (best_theta < 0) best_theta += kPi;
    best.V = Subspace::line(best_theta);
    best.value = best_val;
    best.probes = probes;
    return best;
  }

  if (d == 3) {
    int n = search.net_size > 0 ? search.net_size : 1024;
    auto net = hemisphere_net(n);
    Eigen::Vector3d best_dir = net[0];
    for (const auto& dir : net) {
      Subspace V = subspace_from_direction(dir, k);
      double v = eval.mass(V);
      double before = best.value;
      consider(V, v);
      if (best.value < before) best_dir = dir;
    }
    if (search.warm_start) {
      const auto& f = search.warm_start->frame();
      Eigen::Vector3d dir = k == 2 ? Eigen::Vector3d(f.col(0))
                                   : Eigen::Vector3d(search.warm_start->complement().frame().col(0));
      double before = best.value;
      consider(*search.warm_start, eval.mass(*search.warm_start));
      if (best.value < before) best_dir = dir;
    }
    double step = std::sqrt(2 * kPi / n);
    for (int s = 0; s < search.refine_steps; ++s) {
      Eigen::Vector3d helper = std::abs(best_dir.x()) < 0.9 ? Eigen::Vector3d::UnitX()
                                                             : Eigen::Vector3d::UnitY();
      Eigen::Vector3d t1 = best_dir.cross(helper).normalized();
      Eigen::Vector3d t2 = best_dir.cross(t1).normalized();
      Eigen::Vector3d moves[4] = {t1, -t1, t2, -t2};
      Eigen::Vector3d next = best_dir;
      for (const auto& mv : moves) {
        Eigen::Vector3d cand = (std::cos(step) * best_dir + std::sin(step) * mv).normalized();
        Subspace V = subspace_from_direction(cand, k);
        double before = best.value;
        consider(V, eval.mass(V));
        if (best.value < before) next = cand;
      }
      best_dir = next;
      step *= 0.5;
    }
    best.probes = probes;
    return best;
  }

  int n = search.net_size > 0 ? search.net_size : 512;
  std::mt19937_64 rng(search.seed);
  for (int i = 0; i < n; ++i) {
    Subspace V = Subspace::span_of(random_frame(d, m, rng));
    consider(V, eval.mass(V));
  }
  if (search.warm_start) consider(*search.warm_start, eval.mass(*search.warm_start));
  double step = 0.5;
  for (int s = 0; s < search.refine_steps; ++s) {
    Eigen::MatrixXd g = random_frame(d, m, rng);
    Subspace centre = best.V;
    for (double sgn : {1.0, -1.0}) {
      Subspace V = Subspace::span_of(centre.frame() + sgn * step * g);
      consider(V, eval.mass(V));
    }
    step *= 0.5;
  }
  best.probes = probes;
  return best;
}

std::string to_string(EpsMethod m) {
  return m == EpsMethod::Quadrature ? "quadrature" : "monte-carlo";
}

namespace {

constexpr std::array<double, 16> kNodes = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
    -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
    0.0950125098376374,  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,  0.9894009349916499};
constexpr std::array<double, 16> kWeights = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
    0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

// Integral over [0, upper] of sin^(k-1) cos^(d-k-1), composite Gauss-Legendre.
double angular_integral(int d, int k, double upper, int panels) {
  double h = upper / panels, s = 0;
  for (int p = 0; p < panels; ++p) {
    double a = p * h;
    for (std::size_t q = 0; q < kNodes.size(); ++q) {
      double phi = a + 0.5 * h * (kNodes[q] + 1);
      s += kWeights[q] * std::pow(std::sin(phi), k - 1) * std::pow(std::cos(phi), d - k - 1);
    }
  }
  return 0.5 * h * s;
}

double quadrature_fraction(int d, int k, double alpha, int panels) {
  return angular_integral(d, k, std::asin(alpha), panels) /
         angular_integral(d, k, std::asin(1.0), panels);
}

}  // namespace

EpsilonResult epsilon_monte_carlo(const Subspace& V, double alpha, std::uint64_t samples,
                                  std::uint64_t seed) {
  check_opening(alpha);
  if (samples == 0) throw Error(ErrorKind::InvalidArgument, "need at least one sample");
  int d = V.ambient();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uint64_t hit = 0;
  Point y(d);
  for (std::uint64_t s = 0; s < samples; ++s) {
    for (int i = 0; i < d; ++i) y.x[i] = z(rng);
    if (V.in_cone(y, alpha)) ++hit;
  }
  EpsilonResult r;
  r.method = EpsMethod::MonteCarlo;
  r.samples = samples;
  r.value = static_cast<double>(hit) / static_cast<double>(samples);
  r.error = std::sqrt(r.value * (1 - r.value) / static_cast<double>(samples));
  return r;
}

EpsilonResult epsilon_critical(int d, int k, double alpha, EpsMethod method, std::uint64_t samples,
                               std::uint64_t seed) {
  if (d < 2 || d > kMaxDim) throw Error(ErrorKind::InvalidArgument, "d must lie in 2..8");
  if (k < 1 || k > d - 1) throw Error(ErrorKind::InvalidArgument, "k must satisfy 1 <= k <= d-1");
  check_opening(alpha);
  if (method == EpsMethod::Quadrature) {
    EpsilonResult r;
    r.method = method;
    r.value = quadrature_fraction(d, k, alpha, 64);
    r.error = std::abs(r.value - quadrature_fraction(d, k, alpha, 32));
    return r;
  }
  std::vector<int> axes;
  for (int i = k; i < d; ++i) axes.push_back(i);
  return epsilon_monte_carlo(Subspace::coordinate(d, axes), alpha, samples, seed);
}

}  // namespace sflow
