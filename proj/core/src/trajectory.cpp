#include "mrnav/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "mrnav/errors.hpp"

namespace mrnav {

namespace {

using Coeffs = Eigen::Matrix<double, 8, 1>;
using Mat8 = Eigen::Matrix<double, 8, 8>;

// i! / (i - r)!
double falling(int i, int r) {
  double v = 1.0;
  for (int q = 0; q < r; ++q) v *= static_cast<double>(i - q);
  return v;
}

double eval(const Coeffs& c, double t, int order) {
  double acc = 0.0;
  for (int i = 7; i >= order; --i) acc = acc * t + c[i] * falling(i, order);
  return acc;
}

// Rows 0..3: derivatives 0..3 at t = 0; rows 4..7: derivatives 0..3 at t = T.
Mat8 endpoint_map(double T) {
  Mat8 A = Mat8::Zero();
  for (int r = 0; r < 4; ++r) {
    A(r, r) = falling(r, r);
    for (int i = r; i < 8; ++i) A(4 + r, i) = falling(i, r) * std::pow(T, i - r);
  }
  return A;
}

}  // namespace

Mat8 snap_hessian(double T) {
  Mat8 Q = Mat8::Zero();
  for (int i = 4; i < 8; ++i) {
    for (int j = 4; j < 8; ++j) {
      const int p = i + j - 7;
      Q(i, j) = falling(i, 4) * falling(j, 4) * std::pow(T, p) / p;
    }
  }
  return Q;
}

PolynomialTrajectory::PolynomialTrajectory(std::vector<PolySegment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw std::invalid_argument("trajectory needs at least one segment");
  knots_.reserve(segments_.size() + 1);
  knots_.push_back(0.0);
  for (const auto& s : segments_) {
    if (!(s.duration > 0.0)) throw std::invalid_argument("segment durations must be positive");
    total_ += s.duration;
    knots_.push_back(total_);
  }
}

Vec3 PolynomialTrajectory::derivative(double t, int order, bool left) const {
  t = std::clamp(t, 0.0, total_);
  std::size_t seg;
  if (left) {
    auto it = std::lower_bound(knots_.begin() + 1, knots_.end(), t);
    seg = static_cast<std::size_t>(it - knots_.begin()) - 1;
  } else {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    seg = static_cast<std::size_t>(it - knots_.begin()) - 1;
  }
  seg = std::min(seg, segments_.size() - 1);
  const double local = std::clamp(t - knots_[seg], 0.0, segments_[seg].duration);
  const auto& c = segments_[seg].coeffs;
  return {eval(c[0], local, order), eval(c[1], local, order), eval(c[2], local, order)};
}

TrajectorySample PolynomialTrajectory::sample(double t) const {
  return {derivative(t, 0), derivative(t, 1), derivative(t, 2)};
}

double PolynomialTrajectory::snap_cost() const {
  double cost = 0.0;
  for (const auto& s : segments_) {
    const Mat8 Q = snap_hessian(s.duration);
    for (const auto& c : s.coeffs) cost += c.dot(Q * c);
  }
  return cost;
}

std::vector<Vec3> PolynomialTrajectory::polyline(double dt) const {
  if (!(dt > 0.0)) throw std::invalid_argument("polyline: dt must be positive");
  std::vector<Vec3> out;
  const auto n = static_cast<std::size_t>(std::floor(total_ / dt + 1e-9));
  out.reserve(n + 2);
  for (std::size_t i = 0; i <= n; ++i) out.push_back(derivative(static_cast<double>(i) * dt, 0));
  if (static_cast<double>(n) * dt < total_ - 1e-9) out.push_back(derivative(total_, 0));
  return out;
}

std::vector<double> allocate_times(const std::vector<Vec3>& waypoints, double nominal_speed, double t_min) {
  if (waypoints.size() < 2) throw std::invalid_argument("allocate_times: need at least two waypoints");
  if (!(nominal_speed > 0.0)) throw std::invalid_argument("allocate_times: speed must be positive");
  std::vector<double> out;
  out.reserve(waypoints.size() - 1);
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    out.push_back(std::max((waypoints[i] - waypoints[i - 1]).norm() / nominal_speed, t_min));
  }
  return out;
}

PolynomialTrajectory fit_min_snap(const std::vector<Vec3>& waypoints, const std::vector<double>& durations) {
  if (waypoints.size() < 2 || durations.size() + 1 != waypoints.size()) {
    throw std::invalid_argument("fit_min_snap: need waypoints.size() == durations.size() + 1 >= 2");
  }
  for (double T : durations) {
    if (!(T > 0.0) || !std::isfinite(T)) throw SingularSystem("fit_min_snap: segment duration must be positive and finite");
  }
  const int segs = static_cast<int>(durations.size());
  const int knots = segs + 1;
  const int vars = 4 * knots;

  // Endpoint derivatives are shared between adjacent segments, which enforces
  // C3 continuity. Variable (knot, order) -> column 4*knot + order.
  // Fixed: every position and derivatives 1..3 at both ends. Free: the rest.
  std::vector<int> fixed_cols, free_cols;
  for (int k = 0; k < knots; ++k) {
    for (int r = 0; r < 4; ++r) {
      const bool fixed = r == 0 || k == 0 || k == knots - 1;
      (fixed ? fixed_cols : free_cols).push_back(4 * k + r);
    }
  }

  std::vector<Mat8> a_inv(segs);
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(vars, vars);
  for (int s = 0; s < segs; ++s) {
    const Eigen::FullPivLU<Mat8> lu(endpoint_map(durations[s]));
    if (!lu.isInvertible()) throw SingularSystem("fit_min_snap: endpoint map not invertible");
    a_inv[s] = lu.inverse();
    const Mat8 local = a_inv[s].transpose() * snap_hessian(durations[s]) * a_inv[s];
    R.block<8, 8>(4 * s, 4 * s) += local;
  }

  const int nf = static_cast<int>(fixed_cols.size());
  const int np = static_cast<int>(free_cols.size());
  Eigen::MatrixXd R_pf(np, nf), R_pp(np, np);
  for (int a = 0; a < np; ++a) {
    for (int b = 0; b < nf; ++b) R_pf(a, b) = R(free_cols[a], fixed_cols[b]);
    for (int b = 0; b < np; ++b) R_pp(a, b) = R(free_cols[a], free_cols[b]);
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  if (np > 0) {
    ldlt.compute(R_pp);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw SingularSystem("fit_min_snap: free-derivative system is singular");
  }

  std::vector<PolySegment> segments(segs);
  for (int s = 0; s < segs; ++s) segments[s].duration = durations[s];
  for (int axis = 0; axis < 3; ++axis) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(vars);
    for (int k = 0; k < knots; ++k) x[4 * k] = waypoints[k][axis];
    if (np > 0) {
      Eigen::VectorXd xf(nf);
      for (int b = 0; b < nf; ++b) xf[b] = x[fixed_cols[b]];
      const Eigen::VectorXd xp = ldlt.solve(-R_pf * xf);
      if (!xp.allFinite()) throw SingularSystem("fit_min_snap: non-finite solution");
      for (int a = 0; a < np; ++a) x[free_cols[a]] = xp[a];
    }
    for (int s = 0; s < segs; ++s) segments[s].coeffs[axis] = a_inv[s] * x.segment<8>(4 * s);
  }
  return PolynomialTrajectory(std::move(segments));
}

PolynomialTrajectory hold_position(const Vec3& p, double duration) {
  PolySegment seg;
  seg.duration = duration;
  for (int axis = 0; axis < 3; ++axis) {
    seg.coeffs[axis].setZero();
    seg.coeffs[axis][0] = p[axis];
  }
  return PolynomialTrajectory({seg});
}

}  // namespace mrnav
