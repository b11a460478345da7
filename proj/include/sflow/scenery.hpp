#pragma once

#include <cstddef>
#include <vector>

#include "sflow/dyadic_measure.hpp"
#include "sflow/snapshot.hpp"

namespace sflow {

constexpr int kMaxRenderDepth = 60;

// e^{-t}, snapped to an exact power of two when t is within 1e-9 of n log 2.
double flow_scale(double t);
// Number of dyadic levels a zoom by e^{-t} spans (ceil of t / log 2, snapped).
int flow_levels(double t);

// Pushes the mass of mu inside the window x + s[-1,1]^d onto the depth-m grid of
// [-1,1]^d, refining the source down to `resolution`. Cells that land inside one
// output cell are copied whole; the rest are split by overlap volume.
std::vector<double> deposit(const DyadicMeasure& mu, const Point& x, double s, int m,
                            int resolution);

// Normalized view of mu around x at scale e^{-t}, on the depth-m grid.
Snapshot render(const DyadicMeasure& mu, const Point& x, double t, int m, Domain domain);

// Scenery mu_{x,t}: requires B(x, e^{-t}) inside the cube.
Snapshot scenery_at(const DyadicMeasure& mu, const Point& x, double t, int m);
Snapshot magnify(const DyadicMeasure& mu, double t, int m);
Snapshot magnify(const Snapshot& nu, double t, int m);

// T_x mu re-gridded at `depth` (negative: the materialized depth of mu). Mass moved
// outside the cube is dropped, so the result may have total below 1.
DyadicMeasure translate(const DyadicMeasure& mu, const Point& x, int depth = -1);

struct MeasurePoint {
  DyadicMeasure mu;
  Point x;
};

MeasurePoint cp_magnify(const MeasurePoint& mp);

Snapshot lebesgue_snapshot(int d, int m);
Snapshot plane_snapshot(const Subspace& W, int m);

}  // namespace sflow
