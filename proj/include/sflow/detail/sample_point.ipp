#pragma once

#include <random>

#include "sflow/error.hpp"

namespace sflow {

template <class Rng>
Point sample_point_with(const DyadicMeasure& mu, int depth, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Cursor> kids;
  Cursor c = mu.root();
  if (!(c.mass > 0)) throw Error(ErrorKind::DegenerateMeasure, "measure has zero total mass");
  while (c.depth < depth) {
    if (!mu.children(c, kids))
      throw Error(ErrorKind::ResolutionExhausted,
                  "cannot refine below depth " + std::to_string(c.depth));
    double total = 0;
    for (const auto& k : kids) total += k.mass;
    if (!(total > 0))
      throw Error(ErrorKind::DegenerateMeasure,
                  "all child masses zero at depth " + std::to_string(c.depth));
    double u = unif(rng) * total;
    size_t pick = kids.size();
    double acc = 0;
    for (size_t i = 0; i < kids.size(); ++i) {
      if (!(kids[i].mass > 0)) continue;
      acc += kids[i].mass;
      pick = i;
      if (u < acc) break;
    }
    c = kids[pick];
  }
  return c.center(mu.dim());
}

}  // namespace sflow
