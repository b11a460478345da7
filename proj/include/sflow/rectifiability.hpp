#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sflow/geometry.hpp"
#include "sflow/snapshot.hpp"
#include "sflow/subspace.hpp"

namespace sflow {

struct PointCloud {
  int d = 2;
  std::vector<Point> points;
  std::optional<double> r_min;

  double mean_nearest_neighbor() const;
  // r_min when set, otherwise 3x the mean nearest-neighbor distance.
  double scale_floor() const;
  void check() const;
};

PointCloud read_point_cloud_csv(const std::string& path);

struct VacancyParams {
  int net_size = 0;  // 0: 1024 directions (d=3), 512 random frames (d>3); d = 2 is exact
  int refine_steps = 40;
  std::uint64_t seed = 1;
};

// V in G(d, d-k) with (E \ {x}) inside X(x, r, V, alpha) empty, if one is found.
// x must be a point of E and r at least the scale floor.
std::optional<Subspace> cone_vacancy(const PointCloud& E, std::size_t index, int k, double alpha,
                                     double r, const VacancyParams& params = {});
std::optional<Subspace> cone_vacancy(const PointCloud& E, const Point& x, int k, double alpha,
                                     double r, const VacancyParams& params = {});

// V with no test point of a support cell (mass > mass_floor) robustly inside
// X(0,1,V,alpha); robust means deeper in the cone than the cell half-diagonal.
// mass_floor < 0 selects 2^{-d m} * 1e-3.
std::optional<Subspace> support_vacancy(const Snapshot& nu, int k, double alpha,
                                        double mass_floor = -1, const VacancyParams& params = {});

// d = 2: the midpoint of the widest set of angles phi that no open arc (c - w, c + w)
// contains, taken mod pi, or none when the arcs cover the circle.
std::optional<double> uncovered_angle(std::vector<std::pair<double, double>> arcs);

}  // namespace sflow
