#pragma once

#include <cstdint>
#include <vector>

#include "sflow/cascade_rule.hpp"
#include "sflow/dyadic_measure.hpp"

namespace sflow {

struct SpliceBlock {
  Regime regime = Regime::L;
  int length = 0;
};

// Alternating L/H blocks: super-block j has growth*j levels, the first
// round(theta*growth*j) of them L.
struct SpliceSchedule {
  std::vector<SpliceBlock> blocks;
  double theta = 0.5;
  int growth = 8;
  int levels = 0;

  Regime regime_at(int level) const;
  // Fraction of L levels among the first n levels.
  double running_frequency(int n) const;
};

SpliceSchedule schedule_for_theta(double theta, int levels, int growth);

// theta = (s - k) / (d - k).
double theta_for_dimension(int d, int k, double s);

DyadicMeasure build_spliced(int d, int k, const Subspace& W, const SpliceSchedule& schedule,
                            int depth, std::uint64_t seed);

}  // namespace sflow
