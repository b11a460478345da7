#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sflow/dyadic_measure.hpp"
#include "sflow/geometry.hpp"

namespace sflow {

enum class Domain { Ball, Cube };

// Cell layout of the depth-m grid of [-1,1]^d in Morton order (first path index
// most significant). Shared and immutable once built.
struct GridGeometry {
  int d = 0;
  int m = 0;
  double side = 0;
  std::vector<double> lo;          // cell lower corners, d entries per cell
  std::vector<unsigned char> ball;  // cell meets the open unit ball

  std::size_t cells() const { return std::size_t{1} << (d * m); }
  Box box(std::size_t idx) const;
  Point center(std::size_t idx) const;
};

const GridGeometry& grid_geometry(int d, int m);

// A normalized measure on the depth-m grid. Raw masses are kept alongside the
// normalized ones so that rescaling a snapshot copies cells bit for bit.
class Snapshot {
 public:
  Snapshot() = default;
  // Normalizes `raw` (sequential sum in index order). Zero total → outside-support.
  Snapshot(int d, int m, Domain domain, std::vector<double> raw, double t, Point x);

  int dim() const { return d_; }
  int depth() const { return m_; }
  Domain domain() const { return domain_; }
  std::size_t cells() const { return raw_.size(); }
  const std::vector<double>& raw() const { return raw_; }
  const std::vector<double>& masses() const { return mass_; }
  double mass(std::size_t idx) const { return mass_[idx]; }
  double raw_total() const { return total_; }
  double time() const { return t_; }
  const Point& center() const { return x_; }
  const GridGeometry& grid() const { return grid_geometry(d_, m_); }

  // Sum of normalized masses; 1 up to rounding.
  double total_mass() const;
  Snapshot coarsen(int depth) const;
  // Explicit dyadic measure with the raw masses as leaves (root mass = raw total).
  DyadicMeasure to_measure() const;
  std::string to_csv() const;

 private:
  int d_ = 0;
  int m_ = 0;
  Domain domain_ = Domain::Ball;
  std::vector<double> raw_;
  std::vector<double> mass_;
  double total_ = 0;
  double t_ = 0;
  Point x_;
};

// Exact equality of the normalized leaf tables.
bool same_cells(const Snapshot& a, const Snapshot& b);
double max_cell_difference(const Snapshot& a, const Snapshot& b);

}  // namespace sflow
