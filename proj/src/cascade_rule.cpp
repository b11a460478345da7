#include "sflow/cascade_rule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sflow/error.hpp"

namespace sflow {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Regime splice_regime(double theta, int growth, int level) {
  long long start = 0;
  for (long long j = 1;; ++j) {
    long long len = static_cast<long long>(growth) * j;
    if (level < start + len) {
      long long l_len = std::lround(theta * static_cast<double>(len));
      return level - start < l_len ? Regime::L : Regime::H;
    }
    start += len;
  }
}

namespace {

void check_plane(const Subspace& W, int d) {
  if (W.ambient() != d)
    throw Error(ErrorKind::InvalidSubspace, "plane ambient dimension differs from measure dimension");
  if (W.dim() < 1 || W.dim() >= d)
    throw Error(ErrorKind::InvalidSubspace, "plane dimension k must satisfy 1 <= k < d");
  if (W.dim() >= 3 && W.coordinate_axes().empty())
    throw Error(ErrorKind::InvalidSubspace,
                "non-axis-aligned planes are supported only for k <= 2");
}

void plane_weights(const Subspace& W, int d, const CellContext& ctx, double* out) {
  int n = 1 << d;
  plane_quadrant_volumes(W, ctx.anchor, out);
  // Volume on a shared face goes to the child with the smaller index.
  for (int i = 0; i < d; ++i) {
    if (ctx.anchor[i] == 0.0 && W.is_orthogonal_to_axis(i, 0.0)) {
      for (int c = 0; c < n; ++c)
        if (c >> i & 1) out[c] = 0;
    }
  }
  double total = 0;
  for (int c = 0; c < n; ++c) total += out[c];
  if (!(total > 0)) {
    for (int c = 0; c < n; ++c) out[c] = 1.0 / n;
    return;
  }
  for (int c = 0; c < n; ++c) out[c] /= total;
}

CellContext plane_child(const Subspace& W, int d, const CellContext& parent, int child) {
  CellContext c = parent;
  for (int i = 0; i < d; ++i) {
    double cc = (child >> i & 1) ? 0.5 : -0.5;
    c.anchor[i] = 2.0 * (parent.anchor[i] - cc);
  }
  std::vector<int> axes = W.coordinate_axes();
  if (!axes.empty()) {
    for (int a : axes) c.anchor[a] = 0.0;
  } else {
    // Keep only the component orthogonal to W so the anchor stays bounded.
    const auto& f = W.frame();
    for (int j = 0; j < W.dim(); ++j) {
      double p = 0;
      for (int i = 0; i < d; ++i) p += f(i, j) * c.anchor[i];
      for (int i = 0; i < d; ++i) c.anchor[i] -= p * f(i, j);
    }
  }
  return c;
}

}  // namespace

void plane_quadrant_volumes(const Subspace& W, const Coords& a, double* out) {
  int d = W.ambient();
  int k = W.dim();
  int n = 1 << d;
  std::vector<int> axes = W.coordinate_axes();
  const auto& f = W.frame();
  for (int c = 0; c < n; ++c) {
    double lo[kMaxDim], hi[kMaxDim];
    for (int i = 0; i < d; ++i) {
      lo[i] = (c >> i & 1) ? 0.0 : -1.0;
      hi[i] = (c >> i & 1) ? 1.0 : 0.0;
    }
    if (!axes.empty()) {
      bool hit = true;
      for (int i = 0; i < d && hit; ++i) {
        if (std::find(axes.begin(), axes.end(), i) != axes.end()) continue;
        if (a[i] < lo[i] || a[i] > hi[i]) hit = false;
      }
      out[c] = hit ? 1.0 : 0.0;
    } else if (k == 1) {
      double t0 = -std::numeric_limits<double>::infinity();
      double t1 = std::numeric_limits<double>::infinity();
      for (int i = 0; i < d; ++i) {
        double w = f(i, 0);
        if (w == 0.0) {
          if (a[i] < lo[i] || a[i] > hi[i]) t1 = t0 = 0;
          continue;
        }
        double ta = (lo[i] - a[i]) / w, tb = (hi[i] - a[i]) / w;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
      }
      out[c] = std::max(0.0, t1 - t0);
    } else {
      double an = 0;
      for (int i = 0; i < d; ++i) an += a[i] * a[i];
      double R = std::sqrt(an) + std::sqrt(static_cast<double>(d)) + 1.0;
      Polygon2 poly = rect_polygon(-R, R, -R, R);
      for (int i = 0; i < d && !poly.v.empty(); ++i) {
        poly = clip_halfplane(poly, f(i, 0), f(i, 1), hi[i] - a[i]);
        poly = clip_halfplane(poly, -f(i, 0), -f(i, 1), a[i] - lo[i]);
      }
      out[c] = poly.v.size() >= 3 ? poly.area() : 0.0;
    }
  }
}

void validate_rule(const CascadeRule& rule, int d) {
  if (d < 1 || d > kMaxDim) throw Error(ErrorKind::InvalidArgument, "d must be in 1..8");
  int n = 1 << d;
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, SubsetRule>) {
          if (r.children.empty()) throw Error(ErrorKind::InvalidRule, "empty child subset");
          std::vector<int> s = r.children;
          std::sort(s.begin(), s.end());
          if (std::adjacent_find(s.begin(), s.end()) != s.end())
            throw Error(ErrorKind::InvalidRule, "repeated child in subset");
          if (s.front() < 0 || s.back() >= n)
            throw Error(ErrorKind::InvalidRule, "child index out of range");
        } else if constexpr (std::is_same_v<T, FixedWeightsRule>) {
          if (static_cast<int>(r.weights.size()) != n)
            throw Error(ErrorKind::InvalidRule, "weight vector must have 2^d entries");
          double s = 0;
          for (double w : r.weights) {
            if (!(w >= 0)) throw Error(ErrorKind::InvalidRule, "negative or NaN weight");
            s += w;
          }
          if (std::abs(s - 1.0) > 1e-12)
            throw Error(ErrorKind::InvalidRule, "weights do not sum to 1");
        } else if constexpr (std::is_same_v<T, PlaneRule>) {
          check_plane(r.W, d);
        } else if constexpr (std::is_same_v<T, RandomWeightsRule>) {
          if (!(r.param > 0) || !std::isfinite(r.param))
            throw Error(ErrorKind::InvalidRule, "random-weights parameter must be positive");
        } else if constexpr (std::is_same_v<T, SplicedRule>) {
          if (!(r.theta >= 0 && r.theta <= 1))
            throw Error(ErrorKind::InvalidRule, "theta must lie in [0,1]");
          if (r.growth < 1) throw Error(ErrorKind::InvalidRule, "growth must be >= 1");
          check_plane(r.W, d);
        }
      },
      rule);
}

CellContext root_context(const CascadeRule& rule, int d, std::uint64_t seed) {
  (void)d;
  CellContext c;
  c.level = 0;
  c.hash = splitmix64(seed ^ 0x5F1A3C2B7D9E4061ull);
  if (std::holds_alternative<PlaneRule>(rule)) {
    c.anchored = true;
  } else if (const auto* s = std::get_if<SplicedRule>(&rule)) {
    c.anchored = splice_regime(s->theta, s->growth, 0) == Regime::H;
  }
  return c;
}

CellContext child_context(const CascadeRule& rule, int d, const CellContext& parent, int child) {
  CellContext c;
  if (const auto* p = std::get_if<PlaneRule>(&rule)) {
    c = plane_child(p->W, d, parent, child);
  } else if (const auto* s = std::get_if<SplicedRule>(&rule)) {
    bool child_h = splice_regime(s->theta, s->growth, parent.level + 1) == Regime::H;
    if (child_h && parent.anchored) {
      c = plane_child(s->W, d, parent, child);
    } else {
      // A fresh H block restarts the plane through the cell center.
      c = parent;
      c.anchor.fill(0.0);
      c.anchored = child_h;
    }
  } else {
    c = parent;
  }
  c.level = parent.level + 1;
  c.hash = splitmix64(parent.hash + 0xA24BAED4963EE407ull * static_cast<std::uint64_t>(child + 1));
  return c;
}

void rule_weights(const CascadeRule& rule, int d, const CellContext& ctx, double* out) {
  int n = 1 << d;
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, UniformRule>) {
          for (int c = 0; c < n; ++c) out[c] = 1.0 / n;
        } else if constexpr (std::is_same_v<T, SubsetRule>) {
          for (int c = 0; c < n; ++c) out[c] = 0;
          double w = 1.0 / static_cast<double>(r.children.size());
          for (int c : r.children) out[c] = w;
        } else if constexpr (std::is_same_v<T, FixedWeightsRule>) {
          for (int c = 0; c < n; ++c) out[c] = r.weights[c];
        } else if constexpr (std::is_same_v<T, PlaneRule>) {
          plane_weights(r.W, d, ctx, out);
        } else if constexpr (std::is_same_v<T, RandomWeightsRule>) {
          std::mt19937_64 gen(ctx.hash);
          double s = 0;
          if (r.law == WeightLaw::Dirichlet) {
            std::gamma_distribution<double> g(r.param, 1.0);
            for (int c = 0; c < n; ++c) s += out[c] = g(gen);
          } else {
            std::normal_distribution<double> z(0.0, 1.0);
            for (int c = 0; c < n; ++c) s += out[c] = std::exp(r.param * z(gen));
          }
          if (!(s > 0)) {
            for (int c = 0; c < n; ++c) out[c] = 1.0 / n;
            return;
          }
          for (int c = 0; c < n; ++c) out[c] /= s;
        } else if constexpr (std::is_same_v<T, SplicedRule>) {
          if (splice_regime(r.theta, r.growth, ctx.level) == Regime::L) {
            for (int c = 0; c < n; ++c) out[c] = 1.0 / n;
          } else {
            plane_weights(r.W, d, ctx, out);
          }
        }
      },
      rule);
}

std::string rule_name(const CascadeRule& rule) {
  static const char* names[] = {"uniform", "subset", "fixed-weights", "plane", "random-weights",
                                "spliced"};
  return names[rule.index()];
}

}  // namespace sflow
