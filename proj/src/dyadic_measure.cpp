#include "sflow/dyadic_measure.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sflow/error.hpp"

namespace sflow {

Box Cursor::box(int d) const {
  Box b;
  b.dim = d;
  for (int i = 0; i < d; ++i) {
    b.lo[i] = lo[i];
    b.hi[i] = lo[i] + side;
  }
  return b;
}

Point Cursor::center(int d) const {
  Point p(d);
  for (int i = 0; i < d; ++i) p.x[i] = lo[i] + 0.5 * side;
  return p;
}

int child_index_of(const Cursor& c, const Point& p) {
  int idx = 0;
  double half = 0.5 * c.side;
  for (int i = 0; i < p.dim; ++i)
    if (p.x[i] > c.lo[i] + half) idx |= 1 << i;
  return idx;
}

Box cell_box(int d, const std::vector<int>& path) {
  Box b = cube(d, -1.0, 1.0);
  double side = 2.0;
  for (int idx : path) {
    if (idx < 0 || idx >= (1 << d)) throw Error(ErrorKind::InvalidArgument, "child index out of range");
    side *= 0.5;
    for (int i = 0; i < d; ++i) {
      if (idx >> i & 1) b.lo[i] += side;
      b.hi[i] = b.lo[i] + side;
    }
  }
  return b;
}

std::vector<int> path_of_point(const Point& p, int depth) {
  for (int i = 0; i < p.dim; ++i)
    if (!(p.x[i] >= -1.0 && p.x[i] <= 1.0))
      throw Error(ErrorKind::OutOfDomain, "point outside [-1,1]^d");
  std::vector<int> path;
  Cursor c;
  c.lo.fill(-1.0);
  for (int n = 0; n < depth; ++n) {
    int idx = child_index_of(c, p);
    path.push_back(idx);
    c.side *= 0.5;
    for (int i = 0; i < p.dim; ++i)
      if (idx >> i & 1) c.lo[i] += c.side;
  }
  return path;
}

namespace {

Cursor geometric_child(const Cursor& c, int idx, int d) {
  Cursor k;
  k.depth = c.depth + 1;
  k.side = 0.5 * c.side;
  k.lo = c.lo;
  for (int i = 0; i < d; ++i)
    if (idx >> i & 1) k.lo[i] += k.side;
  k.node = -1;
  return k;
}

}  // namespace

int DyadicMeasure::materialized_depth() const {
  if (nodes_.empty()) return 0;
  int best = 0;
  std::vector<std::pair<std::int64_t, int>> stack = {{0, 0}};
  while (!stack.empty()) {
    auto [n, dep] = stack.back();
    stack.pop_back();
    best = std::max(best, dep);
    std::int64_t fc = nodes_[n].first_child;
    if (fc >= 0)
      for (int i = 0; i < fanout(); ++i) stack.push_back({fc + i, dep + 1});
  }
  return best;
}

Cursor DyadicMeasure::root() const {
  Cursor c;
  c.lo.fill(-1.0);
  c.side = 2.0;
  c.mass = total_mass();
  c.node = nodes_.empty() ? -1 : 0;
  c.ctx = root_ctx_;
  return c;
}

bool DyadicMeasure::can_refine(const Cursor& c) const {
  if (c.node >= 0 && nodes_[c.node].first_child >= 0) return true;
  return rule_.has_value() || c.mass == 0.0;
}

bool DyadicMeasure::children(const Cursor& c, std::vector<Cursor>& out) const {
  int n = fanout();
  if (c.node >= 0 && nodes_[c.node].first_child >= 0) {
    std::int64_t fc = nodes_[c.node].first_child;
    out.resize(n);
    for (int i = 0; i < n; ++i) {
      out[i] = geometric_child(c, i, d_);
      out[i].node = fc + i;
      out[i].mass = nodes_[fc + i].mass;
      if (rule_ && out[i].mass > 0) out[i].ctx = child_context(*rule_, d_, c.ctx, i);
      else {
        out[i].ctx = c.ctx;
        out[i].ctx.level = c.ctx.level + 1;
      }
    }
    return true;
  }
  if (c.mass == 0.0) {
    out.resize(n);
    for (int i = 0; i < n; ++i) {
      out[i] = geometric_child(c, i, d_);
      out[i].mass = 0;
      out[i].ctx = c.ctx;
      out[i].ctx.level = c.ctx.level + 1;
    }
    return true;
  }
  if (!rule_) return false;
  double w[1 << kMaxDim];
  rule_weights(*rule_, d_, c.ctx, w);
  out.resize(n);
  for (int i = 0; i < n; ++i) {
    out[i] = geometric_child(c, i, d_);
    out[i].mass = c.mass * w[i];
    if (out[i].mass > 0) out[i].ctx = child_context(*rule_, d_, c.ctx, i);
    else {
      out[i].ctx = c.ctx;
      out[i].ctx.level = c.ctx.level + 1;
    }
  }
  return true;
}

Cursor DyadicMeasure::child(const Cursor& c, int index) const {
  Cursor k = geometric_child(c, index, d_);
  k.ctx = c.ctx;
  k.ctx.level = c.ctx.level + 1;
  if (c.node >= 0 && nodes_[c.node].first_child >= 0) {
    k.node = nodes_[c.node].first_child + index;
    k.mass = nodes_[k.node].mass;
  } else if (c.mass == 0.0) {
    k.mass = 0;
    return k;
  } else if (rule_) {
    double w[1 << kMaxDim];
    rule_weights(*rule_, d_, c.ctx, w);
    k.mass = c.mass * w[index];
  } else {
    throw Error(ErrorKind::ResolutionExhausted,
                "explicit leaf at depth " + std::to_string(c.depth) + " cannot be refined");
  }
  if (rule_ && k.mass > 0) k.ctx = child_context(*rule_, d_, c.ctx, index);
  return k;
}

std::optional<Cursor> DyadicMeasure::locate(const std::vector<int>& path) const {
  Cursor c = root();
  for (int idx : path) {
    if (idx < 0 || idx >= fanout()) throw Error(ErrorKind::InvalidArgument, "child index out of range");
    if (!can_refine(c)) return std::nullopt;
    c = child(c, idx);
  }
  return c;
}

double DyadicMeasure::cell_mass(const std::vector<int>& path) const {
  Cursor c = root();
  for (int idx : path) {
    if (idx < 0 || idx >= fanout()) throw Error(ErrorKind::InvalidArgument, "child index out of range");
    c = child(c, idx);
  }
  return c.mass;
}

void DyadicMeasure::materialize_children(std::int64_t node, const Cursor& c) {
  std::vector<Cursor> kids;
  if (!children(c, kids)) return;
  std::int64_t fc = static_cast<std::int64_t>(nodes_.size());
  for (const auto& k : kids) nodes_.push_back({k.mass, -1});
  nodes_[node].first_child = fc;
}

void DyadicMeasure::refine(int depth) {
  if (!rule_) return;
  std::vector<Cursor> stack = {root()};
  std::vector<Cursor> kids;
  while (!stack.empty()) {
    Cursor c = stack.back();
    stack.pop_back();
    if (c.depth >= depth || !(c.mass > 0)) continue;
    if (nodes_[c.node].first_child < 0) materialize_children(c.node, c);
    children(c, kids);
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
  }
}

std::vector<Leaf> DyadicMeasure::leaves() const {
  std::vector<Leaf> out;
  if (nodes_.empty()) return out;
  std::vector<std::pair<std::int64_t, std::vector<int>>> stack = {{0, {}}};
  while (!stack.empty()) {
    auto [n, path] = std::move(stack.back());
    stack.pop_back();
    std::int64_t fc = nodes_[n].first_child;
    if (fc < 0) {
      if (nodes_[n].mass > 0) out.push_back({path, nodes_[n].mass});
      continue;
    }
    for (int i = fanout() - 1; i >= 0; --i) {
      auto p = path;
      p.push_back(i);
      stack.push_back({fc + i, std::move(p)});
    }
  }
  return out;
}

std::vector<double> DyadicMeasure::dense(int depth) const {
  if (depth < 0 || d_ * depth > 30) throw Error(ErrorKind::DepthOverflow, "dense grid too large");
  std::vector<double> out(std::size_t{1} << (d_ * depth), 0.0);
  std::vector<std::pair<Cursor, std::size_t>> stack = {{root(), 0}};
  std::vector<Cursor> kids;
  while (!stack.empty()) {
    auto [c, idx] = stack.back();
    stack.pop_back();
    if (!(c.mass > 0)) continue;
    if (c.depth == depth) {
      out[idx] = c.mass;
      continue;
    }
    if (!children(c, kids))
      throw Error(ErrorKind::ResolutionExhausted,
                  "explicit leaf at depth " + std::to_string(c.depth) + " above requested depth");
    for (int i = fanout() - 1; i >= 0; --i)
      stack.push_back({kids[i], (idx << d_) | static_cast<std::size_t>(i)});
  }
  return out;
}

DyadicMeasure DyadicMeasure::subtree(int child_idx, double scale) const {
  Cursor c = child(root(), child_idx);
  DyadicMeasure out;
  out.d_ = d_;
  out.kind_ = "magnified";
  out.rule_ = rule_;
  out.seed_ = seed_;
  out.root_ctx_ = c.ctx;
  out.nodes_.push_back({c.mass / scale, -1});
  if (c.node < 0) return out;
  // Breadth-first copy keeps children contiguous.
  std::vector<std::pair<std::int64_t, std::int64_t>> queue = {{c.node, 0}};
  for (std::size_t q = 0; q < queue.size(); ++q) {
    auto [src, dst] = queue[q];
    std::int64_t fc = nodes_[src].first_child;
    if (fc < 0) continue;
    std::int64_t nfc = static_cast<std::int64_t>(out.nodes_.size());
    out.nodes_[dst].first_child = nfc;
    for (int i = 0; i < fanout(); ++i) out.nodes_.push_back({nodes_[fc + i].mass / scale, -1});
    for (int i = 0; i < fanout(); ++i) queue.push_back({fc + i, nfc + i});
  }
  return out;
}

DyadicMeasure DyadicMeasure::from_leaves(int d, const std::vector<Leaf>& leaves, std::string kind,
                                         std::optional<CascadeRule> rule,
                                         std::optional<std::uint64_t> seed,
                                         std::optional<CellContext> root_ctx) {
  if (d < 1 || d > kMaxDim) throw Error(ErrorKind::InvalidArgument, "d must be in 1..8");
  DyadicMeasure mu;
  mu.d_ = d;
  mu.kind_ = std::move(kind);
  mu.rule_ = std::move(rule);
  mu.seed_ = seed;
  if (root_ctx) mu.root_ctx_ = *root_ctx;
  else if (mu.rule_) mu.root_ctx_ = sflow::root_context(*mu.rule_, d, seed.value_or(0));
  int n = 1 << d;
  mu.nodes_.push_back({0.0, -1});
  std::vector<char> is_leaf = {0};
  for (const auto& leaf : leaves) {
    if (!(leaf.mass >= 0) || !std::isfinite(leaf.mass))
      throw Error(ErrorKind::InvalidArgument, "leaf mass must be finite and nonnegative");
    std::int64_t node = 0;
    for (int idx : leaf.path) {
      if (idx < 0 || idx >= n) throw Error(ErrorKind::InvalidArgument, "child index out of range");
      if (is_leaf[node]) throw Error(ErrorKind::InvalidArgument, "leaf is a prefix of another leaf");
      if (mu.nodes_[node].first_child < 0) {
        std::int64_t fc = static_cast<std::int64_t>(mu.nodes_.size());
        mu.nodes_[node].first_child = fc;
        for (int i = 0; i < n; ++i) {
          mu.nodes_.push_back({0.0, -1});
          is_leaf.push_back(0);
        }
      }
      node = mu.nodes_[node].first_child + idx;
    }
    if (is_leaf[node] || mu.nodes_[node].first_child >= 0)
      throw Error(ErrorKind::InvalidArgument, "duplicate or overlapping leaf path");
    is_leaf[node] = 1;
    mu.nodes_[node].mass = leaf.mass;
  }
  for (std::int64_t i = static_cast<std::int64_t>(mu.nodes_.size()) - 1; i >= 0; --i) {
    std::int64_t fc = mu.nodes_[i].first_child;
    if (fc < 0) continue;
    double s = 0;
    for (int c = 0; c < n; ++c) s += mu.nodes_[fc + c].mass;
    mu.nodes_[i].mass = s;
  }
  return mu;
}

DyadicMeasure DyadicMeasure::from_dense(int d, int depth, const std::vector<double>& masses,
                                        std::string kind) {
  if (d < 1 || d > kMaxDim || depth < 0 || d * depth > 30)
    throw Error(ErrorKind::InvalidArgument, "bad dense grid shape");
  std::size_t count = std::size_t{1} << (d * depth);
  if (masses.size() != count) throw Error(ErrorKind::InvalidArgument, "dense grid size mismatch");
  std::vector<Leaf> leaves;
  for (std::size_t idx = 0; idx < count; ++idx) {
    if (masses[idx] == 0.0) continue;
    Leaf l;
    l.path.resize(depth);
    for (int n = 0; n < depth; ++n)
      l.path[n] = static_cast<int>((idx >> (d * (depth - 1 - n))) & ((std::size_t{1} << d) - 1));
    l.mass = masses[idx];
    leaves.push_back(std::move(l));
  }
  return from_leaves(d, leaves, std::move(kind));
}

DyadicMeasure DyadicMeasure::generated(int d, CascadeRule rule, std::uint64_t seed, int depth,
                                       std::string kind, std::size_t node_budget) {
  validate_rule(rule, d);
  if (depth < 0) throw Error(ErrorKind::InvalidArgument, "depth must be >= 0");
  DyadicMeasure mu;
  mu.d_ = d;
  mu.kind_ = std::move(kind);
  mu.rule_ = std::move(rule);
  mu.seed_ = seed;
  mu.root_ctx_ = sflow::root_context(*mu.rule_, d, seed);
  mu.nodes_.push_back({1.0, -1});
  int n = 1 << d;
  std::vector<Cursor> level = {mu.root()};
  std::vector<Cursor> next, kids;
  double w[1 << kMaxDim];
  for (int lev = 0; lev < depth; ++lev) {
    std::size_t positive = 0;
    for (const auto& c : level)
      if (c.mass > 0) ++positive;
    if (mu.nodes_.size() + positive * static_cast<std::size_t>(n) > node_budget) break;
    next.clear();
    for (const auto& c : level) {
      if (!(c.mass > 0)) continue;
      rule_weights(*mu.rule_, d, c.ctx, w);
      double s = 0;
      for (int i = 0; i < n; ++i) {
        if (!(w[i] >= 0)) throw Error(ErrorKind::InvalidRule, "rule emitted a negative weight");
        s += w[i];
      }
      if (std::abs(s - 1.0) > 1e-12)
        throw Error(ErrorKind::InvalidRule, "rule emitted weights summing to " + std::to_string(s));
      mu.materialize_children(c.node, c);
      mu.children(c, kids);
      for (const auto& k : kids) next.push_back(k);
    }
    level.swap(next);
  }
  return mu;
}

DyadicMeasure build_lebesgue(int d, int depth) {
  return DyadicMeasure::generated(d, UniformRule{}, 0, depth, "lebesgue");
}

DyadicMeasure build_plane(int d, int k, const Subspace& W, int depth) {
  if (W.dim() != k) throw Error(ErrorKind::InvalidSubspace, "W must have dimension k");
  return DyadicMeasure::generated(d, PlaneRule{W}, 0, depth, "plane");
}

DyadicMeasure build_cascade(const CascadeRule& rule, int d, int depth, std::uint64_t seed) {
  return DyadicMeasure::generated(d, rule, seed, depth, "cascade");
}

Point sample_point(const DyadicMeasure& mu, int depth, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_point_with(mu, depth, rng);
}

double ball_mass(const DyadicMeasure& mu, const Point& x, double r, BallMassOptions opt) {
  if (!(r >= 0)) throw Error(ErrorKind::InvalidArgument, "radius must be nonnegative");
  if (x.dim != mu.dim()) throw Error(ErrorKind::DimensionMismatch, "point dimension");
  if (r == 0) return 0.0;
  int d = mu.dim();
  int res = static_cast<int>(std::ceil(std::log2(2.0 / r))) + opt.extra_depth;
  res = std::clamp(res, 0, opt.max_depth);
  double rr = r * r;
  double total = 0;
  traverse(mu, [&](const Cursor& c) {
    if (!(c.mass > 0)) return false;
    Box b = c.box(d);
    if (min_dist_sq(b, x) >= rr) return false;
    if (max_dist_sq(b, x) < rr) {
      total += c.mass;
      return false;
    }
    if (c.depth >= res || !mu.can_refine(c)) {
      total += c.mass * box_ball_volume(b, x, r) / b.volume();
      return false;
    }
    return true;
  });
  return total;
}

}  // namespace sflow
