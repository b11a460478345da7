#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sflow/geometry.hpp"
#include "sflow/subspace.hpp"

namespace sflow {

struct UniformRule {};

// Equal weight on a fixed subset of children.
struct SubsetRule {
  std::vector<int> children;
};

// The same weight vector at every cell (a deterministic self-similar cascade).
struct FixedWeightsRule {
  std::vector<double> weights;
};

// Mass proportional to the k-volume of an affine copy of W inside each child.
struct PlaneRule {
  Subspace W;
};

enum class WeightLaw { Dirichlet, LogNormal };

// Independent random weight vector per cell, drawn from a generator seeded by the cell path.
struct RandomWeightsRule {
  WeightLaw law = WeightLaw::Dirichlet;
  double param = 1.0;
};

// Uniform (L) and plane (H) levels pasted according to a growing block schedule.
struct SplicedRule {
  double theta = 0.5;
  int growth = 8;
  Subspace W;
};

using CascadeRule =
    std::variant<UniformRule, SubsetRule, FixedWeightsRule, PlaneRule, RandomWeightsRule, SplicedRule>;

// Per-cell generator state. Anchor is a point of the affine plane in the cell's
// local coordinates, where the cell is [-1,1]^d.
struct CellContext {
  int level = 0;
  std::uint64_t hash = 0;
  bool anchored = false;
  Coords anchor{};
};

enum class Regime { L, H };

// Regime of a dyadic level under the block rule: super-block j (1-based) covers
// growth*j levels starting at growth*j*(j-1)/2, its first round(theta*growth*j) levels are L.
Regime splice_regime(double theta, int growth, int level);

std::uint64_t splitmix64(std::uint64_t x);

// Throws invalid-rule / invalid-subspace for rules that cannot run in dimension d.
void validate_rule(const CascadeRule& rule, int d);

CellContext root_context(const CascadeRule& rule, int d, std::uint64_t seed);
CellContext child_context(const CascadeRule& rule, int d, const CellContext& parent, int child);

// Writes the 2^d child weights of a cell into out.
void rule_weights(const CascadeRule& rule, int d, const CellContext& ctx, double* out);

std::string rule_name(const CascadeRule& rule);

// k-volume of (W + anchor) inside each closed quadrant of [-1,1]^d, before the
// shared-face convention is applied. Exposed for tests.
void plane_quadrant_volumes(const Subspace& W, const Coords& anchor, double* out);

}  // namespace sflow
