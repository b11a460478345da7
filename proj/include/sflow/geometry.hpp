#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace sflow {

constexpr int kMaxDim = 8;
using Coords = std::array<double, kMaxDim>;

struct Point {
  int dim = 0;
  Coords x{};

  Point() = default;
  explicit Point(int d) : dim(d) {}
  Point(std::initializer_list<double> v);
  static Point from_vector(const std::vector<double>& v);

  double operator[](int i) const { return x[i]; }
  double& operator[](int i) { return x[i]; }
  double norm() const;
  double norm_sq() const;
  std::vector<double> to_vector() const;
  std::string to_string() const;
};

Point operator+(const Point& a, const Point& b);
Point operator-(const Point& a, const Point& b);
Point operator*(double s, const Point& a);
bool operator==(const Point& a, const Point& b);

// Axis-aligned box lo <= x <= hi.
struct Box {
  int dim = 0;
  Coords lo{};
  Coords hi{};

  double volume() const;
  Point center() const;
  double side(int i) const { return hi[i] - lo[i]; }
};

Box cube(int d, double lo, double hi);
bool contains(const Box& b, const Point& p);
Box intersect(const Box& a, const Box& b);
double overlap_volume(const Box& a, const Box& b);

double min_dist_sq(const Box& b, const Point& p);
double max_dist_sq(const Box& b, const Point& p);

// Volume of b ∩ B(c, r). Exact in d <= 2, quadrature along one axis in d = 3,
// 64 Halton points for larger d.
double box_ball_volume(const Box& b, const Point& c, double r);

// Area of [x0,x1] x [y0,y1] ∩ B(0, r).
double rect_disk_area(double x0, double x1, double y0, double y1, double r);

// Radical-inverse low-discrepancy point in [0,1)^d, index >= 1.
void halton(std::uint64_t index, int d, double* out);

// Convex polygon clipped against a half-plane a*x + b*y <= c.
struct Polygon2 {
  std::vector<std::array<double, 2>> v;
  double area() const;
};
Polygon2 clip_halfplane(const Polygon2& p, double a, double b, double c);
Polygon2 rect_polygon(double x0, double x1, double y0, double y1);

// Area of [x0,x1] x [y0,y1] ∩ {a*x + b*y < c}, allocation free.
double rect_halfplane_area(double x0, double x1, double y0, double y1, double a, double b,
                           double c);

}  // namespace sflow
