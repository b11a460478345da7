#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sflow/geometry.hpp"

namespace sflow {

// An m-dimensional linear subspace of R^d held as a d x m orthonormal frame.
class Subspace {
 public:
  Subspace() = default;

  // Frame columns must be orthonormal within 1e-10; otherwise invalid-subspace.
  static Subspace from_frame(const Eigen::MatrixXd& frame);
  // Orthonormalizes the given (full-rank) columns.
  static Subspace span_of(const Eigen::MatrixXd& vectors);
  static Subspace coordinate(int d, const std::vector<int>& axes);
  // Line through the origin with direction (cos theta, sin theta).
  static Subspace line(double theta);
  static Subspace from_vectors(int d, const std::vector<std::vector<double>>& vectors);

  int ambient() const { return static_cast<int>(frame_.rows()); }
  int dim() const { return static_cast<int>(frame_.cols()); }
  const Eigen::MatrixXd& frame() const { return frame_; }

  Subspace complement() const;

  double dist_sq(const double* y) const;
  double dist(const Point& y) const;
  double dist_sq(const Point& y) const { return dist_sq(y.x.data()); }
  // Squared norm of the orthogonal projection onto the subspace.
  double proj_sq(const double* y) const;

  // dist(y, V) < alpha |y|; the origin is never inside.
  bool in_cone(const Point& y, double alpha) const;

  // Axes i with frame columns equal to +-e_i, or empty when the frame is not axis aligned.
  std::vector<int> coordinate_axes() const;
  bool is_orthogonal_to_axis(int axis, double tol = 1e-14) const;

 private:
  explicit Subspace(Eigen::MatrixXd frame) : frame_(std::move(frame)) {}
  Eigen::MatrixXd frame_;
};

// Largest principal angle between two subspaces of equal dimension.
double principal_angle(const Subspace& a, const Subspace& b);

}  // namespace sflow
