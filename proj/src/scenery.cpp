#include "sflow/scenery.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sflow/error.hpp"

namespace sflow {

namespace {

bool dyadic_time(double t, long long& n) {
  double q = t / std::numbers::ln2;
  double r = std::round(q);
  if (std::abs(q - r) <= 1e-9) {
    n = static_cast<long long>(r);
    return true;
  }
  return false;
}

// Index range of output cells [lo, hi] meeting the open interval (a, b), by exact
// comparison against the grid lines -1 + j h.
void cell_range(double a, double b, int cells, double h, int& lo, int& hi) {
  int j = static_cast<int>(std::clamp(std::floor((a + 1.0) / h), 0.0, cells - 1.0));
  while (j > 0 && a < -1.0 + j * h) --j;
  while (j < cells - 1 && a >= -1.0 + (j + 1) * h) ++j;
  lo = j;
  int k = static_cast<int>(std::clamp(std::ceil((b + 1.0) / h) - 1.0, 0.0, cells - 1.0));
  while (k < cells - 1 && b > -1.0 + (k + 1) * h) ++k;
  while (k > 0 && b <= -1.0 + k * h) --k;
  hi = k;
}

}  // namespace

double flow_scale(double t) {
  if (!(t >= 0)) throw Error(ErrorKind::InvalidArgument, "flow time must be nonnegative");
  long long n;
  if (dyadic_time(t, n)) return std::ldexp(1.0, static_cast<int>(-n));
  return std::exp(-t);
}

int flow_levels(double t) {
  if (!(t >= 0)) throw Error(ErrorKind::InvalidArgument, "flow time must be nonnegative");
  long long n;
  if (dyadic_time(t, n)) return static_cast<int>(n);
  return static_cast<int>(std::ceil(t / std::numbers::ln2));
}

std::vector<double> deposit(const DyadicMeasure& mu, const Point& x, double s, int m,
                            int resolution) {
  int d = mu.dim();
  if (x.dim != d) throw Error(ErrorKind::DimensionMismatch, "point dimension differs from measure");
  const GridGeometry& g = grid_geometry(d, m);
  int per_axis = 1 << m;
  double h = g.side;
  std::vector<double> out(g.cells(), 0.0);
  double inv = 1.0 / s;
  bool exact_inverse = std::ldexp(1.0, std::ilogb(s)) == s;

  traverse(mu, [&](const Cursor& c) {
    if (!(c.mass > 0)) return false;
    double ua[kMaxDim], ub[kMaxDim];
    int jlo[kMaxDim], jhi[kMaxDim];
    bool single = true;
    for (int i = 0; i < d; ++i) {
      double a = c.lo[i] - x.x[i], b = c.lo[i] + c.side - x.x[i];
      ua[i] = exact_inverse ? a * inv : a / s;
      ub[i] = exact_inverse ? b * inv : b / s;
      if (ub[i] <= -1.0 || ua[i] >= 1.0) return false;
      cell_range(ua[i], ub[i], per_axis, h, jlo[i], jhi[i]);
      if (jlo[i] != jhi[i] || ua[i] < -1.0 || ub[i] > 1.0) single = false;
    }
    if (single) {
      std::size_t idx = 0;
      for (int lev = 0; lev < m; ++lev) {
        std::size_t child = 0;
        for (int i = 0; i < d; ++i) child |= static_cast<std::size_t>((jlo[i] >> (m - 1 - lev)) & 1) << i;
        idx = (idx << d) | child;
      }
      out[idx] += c.mass;
      return false;
    }
    bool refinable = mu.can_refine(c);
    if (c.depth < resolution && refinable) return true;
    if (!refinable && (ub[0] - ua[0]) > h * (1 + 1e-12))
      throw Error(ErrorKind::ResolutionExhausted,
                  "explicit leaf at depth " + std::to_string(c.depth) +
                      " is coarser than the output grid");
    // Split by overlap volume, axis by axis.
    double frac[kMaxDim][64];
    int count[kMaxDim];
    for (int i = 0; i < d; ++i) {
      count[i] = jhi[i] - jlo[i] + 1;
      if (count[i] > 64)
        throw Error(ErrorKind::ResolutionExhausted, "source cell spans too many output cells");
      double w = ub[i] - ua[i];
      for (int j = jlo[i]; j <= jhi[i]; ++j) {
        double lo = std::max(ua[i], -1.0 + j * h);
        double hi = std::min(ub[i], -1.0 + (j + 1) * h);
        frac[i][j - jlo[i]] = std::max(0.0, hi - lo) / w;
      }
    }
    int off[kMaxDim] = {};
    while (true) {
      double f = c.mass;
      for (int i = 0; i < d; ++i) f *= frac[i][off[i]];
      if (f > 0) {
        std::size_t idx = 0;
        for (int lev = 0; lev < m; ++lev) {
          std::size_t child = 0;
          for (int i = 0; i < d; ++i)
            child |= static_cast<std::size_t>(((jlo[i] + off[i]) >> (m - 1 - lev)) & 1) << i;
          idx = (idx << d) | child;
        }
        out[idx] += f;
      }
      int i = 0;
      while (i < d && ++off[i] == count[i]) off[i++] = 0;
      if (i == d) break;
    }
    return false;
  });
  return out;
}

Snapshot render(const DyadicMeasure& mu, const Point& x, double t, int m, Domain domain) {
  double s = flow_scale(t);
  int resolution = m + flow_levels(t);
  if (resolution > kMaxRenderDepth)
    throw Error(ErrorKind::ResolutionExhausted,
                "zoom needs depth " + std::to_string(resolution) + " (limit " +
                    std::to_string(kMaxRenderDepth) + ")");
  std::vector<double> raw = deposit(mu, x, s, m, resolution);
  if (domain == Domain::Ball) {
    const GridGeometry& g = grid_geometry(mu.dim(), m);
    for (std::size_t i = 0; i < raw.size(); ++i)
      if (!g.ball[i]) raw[i] = 0.0;
  }
  double total = 0;
  for (double v : raw) total += v;
  if (!(total > 0))
    throw Error(ErrorKind::OutsideSupport,
                "no mass within scale e^-t of " + x.to_string() + " at t=" + std::to_string(t));
  return Snapshot(mu.dim(), m, domain, std::move(raw), t, x);
}

Snapshot scenery_at(const DyadicMeasure& mu, const Point& x, double t, int m) {
  if (x.dim != mu.dim()) throw Error(ErrorKind::DimensionMismatch, "point dimension differs from measure");
  double s = flow_scale(t);
  for (int i = 0; i < x.dim; ++i)
    if (x.x[i] - s < -1.0 || x.x[i] + s > 1.0)
      throw Error(ErrorKind::OutOfDomain, "B(x, e^-t) leaves the cube for x=" + x.to_string() +
                                              ", t=" + std::to_string(t));
  return render(mu, x, t, m, Domain::Ball);
}

Snapshot magnify(const DyadicMeasure& mu, double t, int m) {
  return render(mu, Point(mu.dim()), t, m, Domain::Ball);
}

Snapshot magnify(const Snapshot& nu, double t, int m) {
  DyadicMeasure src = nu.to_measure();
  Snapshot out = render(src, Point(nu.dim()), t, m, Domain::Ball);
  return Snapshot(out.dim(), out.depth(), Domain::Ball, out.raw(), nu.time() + t, nu.center());
}

DyadicMeasure translate(const DyadicMeasure& mu, const Point& x, int depth) {
  if (x.dim != mu.dim()) throw Error(ErrorKind::DimensionMismatch, "point dimension differs from measure");
  if (depth < 0) depth = mu.materialized_depth();
  std::vector<double> raw = deposit(mu, x, 1.0, depth, depth);
  return DyadicMeasure::from_dense(mu.dim(), depth, raw, "translated");
}

MeasurePoint cp_magnify(const MeasurePoint& mp) {
  const DyadicMeasure& mu = mp.mu;
  int d = mu.dim();
  if (mp.x.dim != d) throw Error(ErrorKind::DimensionMismatch, "point dimension differs from measure");
  Cursor root = mu.root();
  int idx = child_index_of(root, mp.x);
  if (!mu.can_refine(root))
    throw Error(ErrorKind::ResolutionExhausted, "measure has no refinement below the root");
  double mass = mu.child(root, idx).mass;
  if (!(mass > 0))
    throw Error(ErrorKind::UndefinedMagnification, "mu(D(x)) = 0 at x=" + mp.x.to_string());
  MeasurePoint out{mu.subtree(idx, mass), Point(d)};
  for (int i = 0; i < d; ++i) {
    double cc = (idx >> i & 1) ? 0.5 : -0.5;
    out.x.x[i] = 2.0 * (mp.x.x[i] - cc);
  }
  return out;
}

Snapshot lebesgue_snapshot(int d, int m) {
  return magnify(build_lebesgue(d, 0), 0.0, m);
}

Snapshot plane_snapshot(const Subspace& W, int m) {
  return magnify(build_plane(W.ambient(), W.dim(), W, 0), 0.0, m);
}

}  // namespace sflow
