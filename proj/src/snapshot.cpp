#include "sflow/snapshot.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include "sflow/error.hpp"

namespace sflow {

Box GridGeometry::box(std::size_t idx) const {
  Box b;
  b.dim = d;
  for (int i = 0; i < d; ++i) {
    b.lo[i] = lo[idx * d + i];
    b.hi[i] = b.lo[i] + side;
  }
  return b;
}

Point GridGeometry::center(std::size_t idx) const {
  Point p(d);
  for (int i = 0; i < d; ++i) p.x[i] = lo[idx * d + i] + 0.5 * side;
  return p;
}

const GridGeometry& grid_geometry(int d, int m) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<GridGeometry>> cache;
  if (d < 1 || d > kMaxDim || m < 0 || d * m > 24)
    throw Error(ErrorKind::DepthOverflow, "snapshot grid too large");
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{d, m}];
  if (!slot) {
    auto g = std::make_unique<GridGeometry>();
    g->d = d;
    g->m = m;
    g->side = std::ldexp(1.0, 1 - m);
    std::size_t n = g->cells();
    g->lo.resize(n * d);
    g->ball.resize(n);
    std::size_t mask = (std::size_t{1} << d) - 1;
    for (std::size_t idx = 0; idx < n; ++idx) {
      Box b = cube(d, -1.0, -1.0);
      double side = 2.0;
      for (int lev = 0; lev < m; ++lev) {
        int c = static_cast<int>((idx >> (d * (m - 1 - lev))) & mask);
        side *= 0.5;
        for (int i = 0; i < d; ++i)
          if (c >> i & 1) b.lo[i] += side;
      }
      for (int i = 0; i < d; ++i) {
        g->lo[idx * d + i] = b.lo[i];
        b.hi[i] = b.lo[i] + g->side;
      }
      g->ball[idx] = min_dist_sq(b, Point(d)) < 1.0 ? 1 : 0;
    }
    slot = std::move(g);
  }
  return *slot;
}

Snapshot::Snapshot(int d, int m, Domain domain, std::vector<double> raw, double t, Point x)
    : d_(d), m_(m), domain_(domain), raw_(std::move(raw)), t_(t), x_(x) {
  if (raw_.size() != (std::size_t{1} << (d * m)))
    throw Error(ErrorKind::InvalidArgument, "snapshot size does not match 2^(d m)");
  double s = 0;
  for (double v : raw_) s += v;
  if (!(s > 0))
    throw Error(ErrorKind::OutsideSupport, "snapshot window carries no mass");
  total_ = s;
  mass_.resize(raw_.size());
  for (std::size_t i = 0; i < raw_.size(); ++i) mass_[i] = raw_[i] / s;
}

double Snapshot::total_mass() const {
  double s = 0;
  for (double v : mass_) s += v;
  return s;
}

Snapshot Snapshot::coarsen(int depth) const {
  if (depth < 0 || depth > m_) throw Error(ErrorKind::DepthOverflow, "coarsen depth exceeds snapshot depth");
  int shift = d_ * (m_ - depth);
  std::vector<double> r(std::size_t{1} << (d_ * depth), 0.0);
  for (std::size_t i = 0; i < raw_.size(); ++i) r[i >> shift] += raw_[i];
  return Snapshot(d_, depth, domain_, std::move(r), t_, x_);
}

DyadicMeasure Snapshot::to_measure() const {
  return DyadicMeasure::from_dense(d_, m_, raw_, "snapshot");
}

std::string Snapshot::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "# d=" << d_ << " m=" << m_ << " t=" << t_ << " x=";
  for (int i = 0; i < x_.dim; ++i) os << (i ? ";" : "") << x_[i];
  os << "\npath,mass\n";
  std::size_t mask = (std::size_t{1} << d_) - 1;
  for (std::size_t idx = 0; idx < mass_.size(); ++idx) {
    if (mass_[idx] == 0.0) continue;
    for (int lev = 0; lev < m_; ++lev)
      os << (lev ? "." : "") << ((idx >> (d_ * (m_ - 1 - lev))) & mask);
    os << ',' << mass_[idx] << '\n';
  }
  return os.str();
}

bool same_cells(const Snapshot& a, const Snapshot& b) {
  return a.dim() == b.dim() && a.depth() == b.depth() && a.masses() == b.masses();
}

double max_cell_difference(const Snapshot& a, const Snapshot& b) {
  if (a.dim() != b.dim() || a.depth() != b.depth())
    throw Error(ErrorKind::DimensionMismatch, "snapshots differ in shape");
  double m = 0;
  for (std::size_t i = 0; i < a.cells(); ++i) m = std::max(m, std::abs(a.mass(i) - b.mass(i)));
  return m;
}

}  // namespace sflow
