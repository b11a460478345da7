#include "sflow/subspace.hpp"

#include <algorithm>
#include <cmath>

#include "sflow/error.hpp"

namespace sflow {

Subspace Subspace::from_frame(const Eigen::MatrixXd& frame) {
  if (frame.rows() < 1 || frame.rows() > kMaxDim || frame.cols() < 1 ||
      frame.cols() > frame.rows())
    throw Error(ErrorKind::InvalidSubspace, "frame must be d x m with 1 <= m <= d <= 8");
  if (!frame.allFinite()) throw Error(ErrorKind::InvalidSubspace, "frame has non-finite entries");
  Eigen::MatrixXd gram = frame.transpose() * frame;
  double err = (gram - Eigen::MatrixXd::Identity(frame.cols(), frame.cols())).cwiseAbs().maxCoeff();
  if (err > 1e-10)
    throw Error(ErrorKind::InvalidSubspace,
                "frame not orthonormal (max Gram deviation " + std::to_string(err) + ")");
  return Subspace(frame);
}

Subspace Subspace::span_of(const Eigen::MatrixXd& vectors) {
  if (vectors.rows() < 1 || vectors.rows() > kMaxDim || vectors.cols() < 1 ||
      vectors.cols() > vectors.rows())
    throw Error(ErrorKind::InvalidSubspace, "span_of needs 1 <= m <= d <= 8 vectors");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(vectors);
  double scale = vectors.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < vectors.cols(); ++i)
    if (!(std::abs(qr.matrixQR()(i, i)) > 1e-12 * scale))
      throw Error(ErrorKind::InvalidSubspace, "vectors are linearly dependent");
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(vectors.rows(), vectors.cols());
  return Subspace(q);
}

Subspace Subspace::coordinate(int d, const std::vector<int>& axes) {
  if (d < 1 || d > kMaxDim || axes.empty() || static_cast<int>(axes.size()) > d)
    throw Error(ErrorKind::InvalidSubspace, "bad coordinate subspace");
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(axes.size()));
  for (size_t j = 0; j < axes.size(); ++j) {
    int a = axes[j];
    if (a < 0 || a >= d) throw Error(ErrorKind::InvalidSubspace, "axis out of range");
    if (f.row(a).any()) throw Error(ErrorKind::InvalidSubspace, "repeated axis");
    f(a, static_cast<Eigen::Index>(j)) = 1.0;
  }
  return Subspace(f);
}

Subspace Subspace::line(double theta) {
  Eigen::MatrixXd f(2, 1);
  f << std::cos(theta), std::sin(theta);
  return Subspace(f);
}

Subspace Subspace::from_vectors(int d, const std::vector<std::vector<double>>& vectors) {
  if (vectors.empty()) throw Error(ErrorKind::InvalidSubspace, "no vectors");
  Eigen::MatrixXd f(d, static_cast<Eigen::Index>(vectors.size()));
  for (size_t j = 0; j < vectors.size(); ++j) {
    if (static_cast<int>(vectors[j].size()) != d)
      throw Error(ErrorKind::InvalidSubspace, "vector length differs from ambient dimension");
    for (int i = 0; i < d; ++i) f(i, static_cast<Eigen::Index>(j)) = vectors[j][i];
  }
  return from_frame(f);
}

Subspace Subspace::complement() const {
  int d = ambient(), m = dim();
  if (m == d) throw Error(ErrorKind::InvalidSubspace, "complement of the full space is trivial");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(frame_);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd c = q.rightCols(d - m);
  // Clean up signs so axis-aligned input gives axis-aligned output.
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    Eigen::Index imax;
    c.col(j).cwiseAbs().maxCoeff(&imax);
    if (c(imax, j) < 0) c.col(j) *= -1;
    for (Eigen::Index i = 0; i < c.rows(); ++i)
      if (std::abs(c(i, j)) < 1e-15) c(i, j) = 0;
  }
  return Subspace(c);
}

double Subspace::proj_sq(const double* y) const {
  double s = 0;
  int d = ambient();
  for (int j = 0; j < dim(); ++j) {
    double c = 0;
    for (int i = 0; i < d; ++i) c += frame_(i, j) * y[i];
    s += c * c;
  }
  return s;
}

double Subspace::dist_sq(const double* y) const {
  int d = ambient();
  double n = 0;
  for (int i = 0; i < d; ++i) n += y[i] * y[i];
  return std::max(0.0, n - proj_sq(y));
}

double Subspace::dist(const Point& y) const { return std::sqrt(dist_sq(y)); }

bool Subspace::in_cone(const Point& y, double alpha) const {
  if (y.dim != ambient()) throw Error(ErrorKind::DimensionMismatch, "point/subspace dimension");
  double n = y.norm_sq();
  if (n == 0) return false;
  // Residual computed directly to keep points of V exactly at distance 0.
  int d = ambient();
  Coords r = y.x;
  for (int j = 0; j < dim(); ++j) {
    double c = 0;
    for (int i = 0; i < d; ++i) c += frame_(i, j) * y.x[i];
    for (int i = 0; i < d; ++i) r[i] -= c * frame_(i, j);
  }
  double dsq = 0;
  for (int i = 0; i < d; ++i) dsq += r[i] * r[i];
  return std::sqrt(dsq) < alpha * std::sqrt(n);
}

std::vector<int> Subspace::coordinate_axes() const {
  std::vector<int> axes;
  for (int j = 0; j < dim(); ++j) {
    int hit = -1;
    for (int i = 0; i < ambient(); ++i) {
      double v = frame_(i, j);
      if (v == 0) continue;
      if (std::abs(v) != 1.0 || hit >= 0) return {};
      hit = i;
    }
    if (hit < 0) return {};
    axes.push_back(hit);
  }
  return axes;
}

bool Subspace::is_orthogonal_to_axis(int axis, double tol) const {
  for (int j = 0; j < dim(); ++j)
    if (std::abs(frame_(axis, j)) > tol) return false;
  return true;
}

double principal_angle(const Subspace& a, const Subspace& b) {
  if (a.ambient() != b.ambient() || a.dim() != b.dim())
    throw Error(ErrorKind::DimensionMismatch, "principal angle needs equal shapes");
  Eigen::MatrixXd m = a.frame().transpose() * b.frame();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  double smin = std::clamp(svd.singularValues().minCoeff(), 0.0, 1.0);
  return std::acos(smin);
}

}  // namespace sflow
