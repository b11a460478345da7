#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sflow/cascade_rule.hpp"
#include "sflow/geometry.hpp"

namespace sflow {

// A dyadic cell of [-1,1]^d. Child index bit i selects the upper half along axis i.
struct Cursor {
  int depth = 0;
  Coords lo{};
  double side = 2.0;
  double mass = 1.0;
  std::int64_t node = 0;  // materialized node, or -1 beyond the materialized tree
  CellContext ctx;

  Box box(int d) const;
  Point center(int d) const;
};

struct Leaf {
  std::vector<int> path;
  double mass = 0;
};

// Child index of the cell containing p (lower-closed convention: upper iff coordinate > midpoint).
int child_index_of(const Cursor& c, const Point& p);
Box cell_box(int d, const std::vector<int>& path);
std::vector<int> path_of_point(const Point& p, int depth);

// Mass assignment on the 2^d-ary dyadic tree over [-1,1]^d. Materialized nodes
// are stored explicitly; an optional cascade rule supplies children beyond them.
class DyadicMeasure {
 public:
  struct Node {
    double mass = 0;
    std::int64_t first_child = -1;
  };

  DyadicMeasure() = default;

  int dim() const { return d_; }
  int fanout() const { return 1 << d_; }
  const std::string& kind() const { return kind_; }
  const std::optional<CascadeRule>& rule() const { return rule_; }
  std::optional<std::uint64_t> seed() const { return seed_; }
  const CellContext& root_context() const { return root_ctx_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  double total_mass() const { return nodes_.empty() ? 0.0 : nodes_[0].mass; }
  int materialized_depth() const;

  Cursor root() const;
  bool can_refine(const Cursor& c) const;
  // Writes the 2^d children of c; returns false for an explicit positive leaf
  // without a generator.
  bool children(const Cursor& c, std::vector<Cursor>& out) const;
  Cursor child(const Cursor& c, int index) const;

  // Mass of the cell at `path`, refining lazily. Throws resolution-exhausted past
  // an explicit positive leaf.
  double cell_mass(const std::vector<int>& path) const;
  std::optional<Cursor> locate(const std::vector<int>& path) const;

  // Materializes every cell of positive mass down to `depth`.
  void refine(int depth);

  // Materialized leaves in lexicographic path order; zero-mass leaves skipped.
  std::vector<Leaf> leaves() const;
  // Dense depth-n masses in Morton order (first path index most significant).
  std::vector<double> dense(int depth) const;

  // Measure rooted at a child cell, masses divided by `scale`.
  DyadicMeasure subtree(int child, double scale) const;

  static DyadicMeasure from_leaves(int d, const std::vector<Leaf>& leaves, std::string kind,
                                   std::optional<CascadeRule> rule = std::nullopt,
                                   std::optional<std::uint64_t> seed = std::nullopt,
                                   std::optional<CellContext> root_ctx = std::nullopt);
  static DyadicMeasure from_dense(int d, int depth, const std::vector<double>& masses,
                                  std::string kind);
  // Generator-backed measure; eagerly materializes at most `node_budget` nodes.
  static DyadicMeasure generated(int d, CascadeRule rule, std::uint64_t seed, int depth,
                                 std::string kind, std::size_t node_budget = 1u << 18);

 private:
  void materialize_children(std::int64_t node, const Cursor& c);

  int d_ = 0;
  std::string kind_;
  std::optional<CascadeRule> rule_;
  std::optional<std::uint64_t> seed_;
  CellContext root_ctx_;
  std::vector<Node> nodes_;
};

DyadicMeasure build_lebesgue(int d, int depth);
DyadicMeasure build_plane(int d, int k, const Subspace& W, int depth);
// Validates the rule and every emitted weight vector along the materialized tree.
DyadicMeasure build_cascade(const CascadeRule& rule, int d, int depth, std::uint64_t seed);

// Point drawn by descending proportionally to child masses; the centre of the reached cell.
Point sample_point(const DyadicMeasure& mu, int depth, std::uint64_t seed);
// Same, with the random stream supplied by the caller.
template <class Rng>
Point sample_point_with(const DyadicMeasure& mu, int depth, Rng& rng);

struct BallMassOptions {
  int extra_depth = 8;
  int max_depth = 64;
};

// Mass of the open ball B(x, r), uniform-within-cell at the resolution depth.
double ball_mass(const DyadicMeasure& mu, const Point& x, double r, BallMassOptions opt = {});

// Iterative depth-first traversal. visit(cursor) returns true to descend.
template <class Visit>
void traverse(const DyadicMeasure& mu, Visit&& visit) {
  std::vector<Cursor> stack;
  std::vector<Cursor> kids;
  stack.push_back(mu.root());
  while (!stack.empty()) {
    Cursor c = stack.back();
    stack.pop_back();
    if (!visit(c)) continue;
    if (!mu.children(c, kids)) continue;
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
  }
}

}  // namespace sflow

#include "sflow/detail/sample_point.ipp"
