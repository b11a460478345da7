#include "sflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sflow/error.hpp"

namespace sflow {

Point::Point(std::initializer_list<double> v) : dim(static_cast<int>(v.size())) {
  if (dim > kMaxDim) throw Error(ErrorKind::InvalidArgument, "dimension exceeds kMaxDim");
  int i = 0;
  for (double c : v) x[i++] = c;
}

Point Point::from_vector(const std::vector<double>& v) {
  if (v.empty() || v.size() > static_cast<size_t>(kMaxDim))
    throw Error(ErrorKind::InvalidArgument, "point dimension must be in 1..8");
  Point p(static_cast<int>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) throw Error(ErrorKind::InvalidArgument, "non-finite coordinate");
    p.x[i] = v[i];
  }
  return p;
}

double Point::norm_sq() const {
  double s = 0;
  for (int i = 0; i < dim; ++i) s += x[i] * x[i];
  return s;
}

double Point::norm() const { return std::sqrt(norm_sq()); }

std::vector<double> Point::to_vector() const { return {x.begin(), x.begin() + dim}; }

std::string Point::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (int i = 0; i < dim; ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

Point operator+(const Point& a, const Point& b) {
  Point r(a.dim);
  for (int i = 0; i < a.dim; ++i) r.x[i] = a.x[i] + b.x[i];
  return r;
}

Point operator-(const Point& a, const Point& b) {
  Point r(a.dim);
  for (int i = 0; i < a.dim; ++i) r.x[i] = a.x[i] - b.x[i];
  return r;
}

Point operator*(double s, const Point& a) {
  Point r(a.dim);
  for (int i = 0; i < a.dim; ++i) r.x[i] = s * a.x[i];
  return r;
}

bool operator==(const Point& a, const Point& b) {
  if (a.dim != b.dim) return false;
  for (int i = 0; i < a.dim; ++i)
    if (a.x[i] != b.x[i]) return false;
  return true;
}

double Box::volume() const {
  double v = 1;
  for (int i = 0; i < dim; ++i) v *= std::max(0.0, hi[i] - lo[i]);
  return v;
}

Point Box::center() const {
  Point p(dim);
  for (int i = 0; i < dim; ++i) p.x[i] = 0.5 * (lo[i] + hi[i]);
  return p;
}

Box cube(int d, double lo, double hi) {
  Box b;
  b.dim = d;
  for (int i = 0; i < d; ++i) {
    b.lo[i] = lo;
    b.hi[i] = hi;
  }
  return b;
}

bool contains(const Box& b, const Point& p) {
  for (int i = 0; i < b.dim; ++i)
    if (p.x[i] < b.lo[i] || p.x[i] > b.hi[i]) return false;
  return true;
}

Box intersect(const Box& a, const Box& b) {
  Box r;
  r.dim = a.dim;
  for (int i = 0; i < a.dim; ++i) {
    r.lo[i] = std::max(a.lo[i], b.lo[i]);
    r.hi[i] = std::min(a.hi[i], b.hi[i]);
  }
  return r;
}

double overlap_volume(const Box& a, const Box& b) { return intersect(a, b).volume(); }

double min_dist_sq(const Box& b, const Point& p) {
  double s = 0;
  for (int i = 0; i < b.dim; ++i) {
    double e = 0;
    if (p.x[i] < b.lo[i]) e = b.lo[i] - p.x[i];
    else if (p.x[i] > b.hi[i]) e = p.x[i] - b.hi[i];
    s += e * e;
  }
  return s;
}

double max_dist_sq(const Box& b, const Point& p) {
  double s = 0;
  for (int i = 0; i < b.dim; ++i) {
    double e = std::max(std::abs(p.x[i] - b.lo[i]), std::abs(p.x[i] - b.hi[i]));
    s += e * e;
  }
  return s;
}

namespace {

// Antiderivative of sqrt(r^2 - u^2).
double half_chord_primitive(double u, double r) {
  u = std::clamp(u, -r, r);
  double s = std::sqrt(std::max(0.0, r * r - u * u));
  return 0.5 * (u * s + r * r * std::asin(u / r));
}

constexpr std::array<double, 16> kGLNodes = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
    -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
    0.0950125098376374,  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,  0.9894009349916499};
constexpr std::array<double, 16> kGLWeights = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
    0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

double box_ball_volume_3d(double x0, double x1, double y0, double y1, double z0, double z1,
                          double r) {
  double a = std::max(z0, -r), b = std::min(z1, r);
  if (a >= b) return 0;
  std::vector<double> cuts = {a, b};
  auto add_delta = [&](double delta) {
    if (delta < r) {
      double z = std::sqrt(r * r - delta * delta);
      for (double c : {z, -z})
        if (c > a && c < b) cuts.push_back(c);
    }
  };
  for (double u : {x0, x1}) add_delta(std::abs(u));
  for (double v : {y0, y1}) add_delta(std::abs(v));
  for (double u : {x0, x1})
    for (double v : {y0, y1}) add_delta(std::hypot(u, v));
  if (a < 0 && b > 0) cuts.push_back(0.0);
  std::sort(cuts.begin(), cuts.end());
  double vol = 0;
  for (size_t p = 0; p + 1 < cuts.size(); ++p) {
    double lo = cuts[p], hi = cuts[p + 1];
    if (hi <= lo) continue;
    // z = lo + (hi-lo)(1-cos(pi u))/2 smooths the square-root behaviour at breakpoints.
    double piece = 0;
    for (size_t q = 0; q < kGLNodes.size(); ++q) {
      double u = 0.5 * (kGLNodes[q] + 1);
      double z = lo + (hi - lo) * 0.5 * (1 - std::cos(std::numbers::pi * u));
      double jac = (hi - lo) * 0.5 * std::numbers::pi * std::sin(std::numbers::pi * u) * 0.5;
      double rz = std::sqrt(std::max(0.0, r * r - z * z));
      piece += kGLWeights[q] * jac * rect_disk_area(x0, x1, y0, y1, rz);
    }
    vol += piece;
  }
  return vol;
}

}  // namespace

double rect_disk_area(double x0, double x1, double y0, double y1, double r) {
  if (r <= 0 || x1 <= x0 || y1 <= y0) return 0;
  double a = std::max(x0, -r), b = std::min(x1, r);
  if (a >= b) return 0;
  std::vector<double> cuts = {a, b};
  for (double v : {y0, y1}) {
    if (std::abs(v) < r) {
      double u = std::sqrt(r * r - v * v);
      for (double c : {u, -u})
        if (c > a && c < b) cuts.push_back(c);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double area = 0;
  for (size_t p = 0; p + 1 < cuts.size(); ++p) {
    double lo = cuts[p], hi = cuts[p + 1];
    if (hi <= lo) continue;
    double mid = 0.5 * (lo + hi);
    double h = std::sqrt(std::max(0.0, r * r - mid * mid));
    bool top_is_chord = h < y1;
    bool bottom_is_chord = -h > y0;
    double top = top_is_chord ? h : y1;
    double bottom = bottom_is_chord ? -h : y0;
    if (top <= bottom) continue;
    double g = half_chord_primitive(hi, r) - half_chord_primitive(lo, r);
    double piece = 0;
    piece += top_is_chord ? g : y1 * (hi - lo);
    piece -= bottom_is_chord ? -g : y0 * (hi - lo);
    area += piece;
  }
  return area;
}

void halton(std::uint64_t index, int d, double* out) {
  static constexpr int kPrimes[kMaxDim] = {2, 3, 5, 7, 11, 13, 17, 19};
  for (int i = 0; i < d; ++i) {
    double f = 1, v = 0;
    std::uint64_t n = index;
    while (n > 0) {
      f /= kPrimes[i];
      v += f * static_cast<double>(n % kPrimes[i]);
      n /= kPrimes[i];
    }
    out[i] = v;
  }
}

double box_ball_volume(const Box& b, const Point& c, double r) {
  if (r <= 0) return 0;
  double rr = r * r;
  if (min_dist_sq(b, c) >= rr) return 0;
  if (max_dist_sq(b, c) <= rr) return b.volume();
  switch (b.dim) {
    case 1:
      return std::max(0.0, std::min(b.hi[0], c.x[0] + r) - std::max(b.lo[0], c.x[0] - r));
    case 2:
      return rect_disk_area(b.lo[0] - c.x[0], b.hi[0] - c.x[0], b.lo[1] - c.x[1],
                            b.hi[1] - c.x[1], r);
    case 3:
      return box_ball_volume_3d(b.lo[0] - c.x[0], b.hi[0] - c.x[0], b.lo[1] - c.x[1],
                                b.hi[1] - c.x[1], b.lo[2] - c.x[2], b.hi[2] - c.x[2], r);
    default: {
      int inside = 0;
      double u[kMaxDim];
      for (int s = 1; s <= 64; ++s) {
        halton(static_cast<std::uint64_t>(s), b.dim, u);
        double q = 0;
        for (int i = 0; i < b.dim; ++i) {
          double y = b.lo[i] + u[i] * (b.hi[i] - b.lo[i]) - c.x[i];
          q += y * y;
        }
        if (q < rr) ++inside;
      }
      return b.volume() * inside / 64.0;
    }
  }
}

double Polygon2::area() const {
  double s = 0;
  size_t n = v.size();
  for (size_t i = 0; i < n; ++i) {
    const auto& p = v[i];
    const auto& q = v[(i + 1) % n];
    s += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * std::abs(s);
}

Polygon2 clip_halfplane(const Polygon2& p, double a, double b, double c) {
  Polygon2 out;
  size_t n = p.v.size();
  if (n == 0) return out;
  out.v.reserve(n + 2);
  for (size_t i = 0; i < n; ++i) {
    const auto& s = p.v[i];
    const auto& e = p.v[(i + 1) % n];
    double fs = a * s[0] + b * s[1] - c;
    double fe = a * e[0] + b * e[1] - c;
    if (fs <= 0) out.v.push_back(s);
    if ((fs < 0 && fe > 0) || (fs > 0 && fe < 0)) {
      double t = fs / (fs - fe);
      out.v.push_back({s[0] + t * (e[0] - s[0]), s[1] + t * (e[1] - s[1])});
    }
  }
  return out;
}

Polygon2 rect_polygon(double x0, double x1, double y0, double y1) {
  Polygon2 p;
  p.v = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  return p;
}

double rect_halfplane_area(double x0, double x1, double y0, double y1, double a, double b,
                           double c) {
  double vx[4] = {x0, x1, x1, x0}, vy[4] = {y0, y0, y1, y1};
  double f[4];
  int inside = 0;
  for (int i = 0; i < 4; ++i) {
    f[i] = a * vx[i] + b * vy[i] - c;
    if (f[i] <= 0) ++inside;
  }
  double full = (x1 - x0) * (y1 - y0);
  if (inside == 4) return full;
  if (inside == 0) return 0.0;
  double px[8], py[8];
  int n = 0;
  for (int i = 0; i < 4; ++i) {
    int j = (i + 1) & 3;
    if (f[i] <= 0) {
      px[n] = vx[i];
      py[n++] = vy[i];
    }
    if ((f[i] < 0 && f[j] > 0) || (f[i] > 0 && f[j] < 0)) {
      double t = f[i] / (f[i] - f[j]);
      px[n] = vx[i] + t * (vx[j] - vx[i]);
      py[n++] = vy[i] + t * (vy[j] - vy[i]);
    }
  }
  double s = 0;
  for (int i = 0; i < n; ++i) {
    int j = (i + 1) % n;
    s += px[i] * py[j] - px[j] * py[i];
  }
  return std::min(full, 0.5 * std::abs(s));
}

}  // namespace sflow
