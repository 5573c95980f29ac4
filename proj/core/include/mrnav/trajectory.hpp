#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "mrnav/geom.hpp"

namespace mrnav {

/// Shortest segment duration handed to the polynomial fit.
inline constexpr double kMinSegmentDuration = 0.5;

struct TrajectorySample {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();
};

/// One 7th-order segment, p(t) = sum_i c_i t^i for t in [0, duration], per axis.
struct PolySegment {
  double duration = 0.0;
  std::array<Eigen::Matrix<double, 8, 1>, 3> coeffs{};
};

/// Piecewise polynomial reference. Immutable once built.
class PolynomialTrajectory {
 public:
  explicit PolynomialTrajectory(std::vector<PolySegment> segments);

  const std::vector<PolySegment>& segments() const noexcept { return segments_; }
  double total_duration() const noexcept { return total_; }
  /// Start time of each segment plus the final time (size = segments + 1).
  const std::vector<double>& knot_times() const noexcept { return knots_; }

  /// `order`-th derivative at time t (clamped to [0, T]). When t sits on an
  /// interior knot the later segment is used unless `left` is set.
  Vec3 derivative(double t, int order, bool left = false) const;
  TrajectorySample sample(double t) const;

  /// Integral of the squared snap norm over the whole trajectory.
  double snap_cost() const;

  /// Positions every `dt` seconds, always including t = T.
  std::vector<Vec3> polyline(double dt) const;

 private:
  std::vector<PolySegment> segments_;
  std::vector<double> knots_;
  double total_ = 0.0;
};

/// duration_i = max(|w_{i+1} - w_i| / nominal_speed, t_min)
std::vector<double> allocate_times(const std::vector<Vec3>& waypoints, double nominal_speed,
                                   double t_min = kMinSegmentDuration);

/// Minimum-snap, rest-to-rest interpolation of `waypoints` with the given
/// segment durations; C3 at interior knots. Throws SingularSystem.
PolynomialTrajectory fit_min_snap(const std::vector<Vec3>& waypoints, const std::vector<double>& durations);

/// Constant trajectory holding `p` for `duration` seconds.
PolynomialTrajectory hold_position(const Vec3& p, double duration);

/// Snap cost Hessian of one segment: cost = c^T Q c for coefficients c.
Eigen::Matrix<double, 8, 8> snap_hessian(double duration);

}  // namespace mrnav
