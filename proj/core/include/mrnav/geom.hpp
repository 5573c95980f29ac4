#pragma once

#include <array>
#include <optional>
#include <string_view>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "mrnav/errors.hpp"

namespace mrnav {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

/// Coordinate frames of the collaborative setup.
///   W  - robot inertial (world) frame
///   B  - robot body frame
///   H  - operator headset frame
///   Bv - virtual robot hologram (UI only)
///   Mv - interactive goal marker (UI only)
///   Wv - common virtual-world frame the minimap is drawn in
enum class Frame { W, B, H, Bv, Mv, Wv };

std::string_view to_string(Frame f);
std::optional<Frame> frame_from_string(std::string_view s);

/// A point tagged with the frame it is expressed in.
struct FramedPoint {
  Vec3 p = Vec3::Zero();
  Frame frame = Frame::W;
};

/// Rigid transform T_from^to: maps coordinates expressed in `from` into `to`.
/// The rotation is kept unit-norm with a non-negative scalar part.
class RigidTransform {
 public:
  RigidTransform(Frame from, Frame to, const Quat& rotation, const Vec3& translation);

  static RigidTransform identity(Frame from, Frame to);
  static RigidTransform translation(Frame from, Frame to, const Vec3& t);
  /// Rotation about +z by `yaw` radians followed by translation `t`.
  static RigidTransform yaw(Frame from, Frame to, double yaw, const Vec3& t = Vec3::Zero());

  Frame from() const noexcept { return from_; }
  Frame to() const noexcept { return to_; }
  const Quat& rotation() const noexcept { return rotation_; }
  const Vec3& translation() const noexcept { return translation_; }

  /// Applies the transform to raw coordinates; the caller vouches for the frame.
  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }

  /// [qw, qx, qy, qz, tx, ty, tz]
  std::array<double, 7> to_array() const;
  static RigidTransform from_array(Frame from, Frame to, const std::array<double, 7>& a);

  bool approx_equal(const RigidTransform& other, double tol = 1e-9) const;

 private:
  Frame from_;
  Frame to_;
  Quat rotation_;
  Vec3 translation_;
};

/// Applies `a` first, then `b`. Requires a.to() == b.from().
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);
FramedPoint transform_point(const RigidTransform& t, const FramedPoint& p);

/// Similarity map from the minimap (Wv) into the world: p_W = rigid(scale * p_Wv).
class MinimapTransform {
 public:
  MinimapTransform(double scale, const RigidTransform& rigid);

  double scale() const noexcept { return scale_; }
  const RigidTransform& rigid() const noexcept { return rigid_; }

 private:
  double scale_;
  RigidTransform rigid_;
};

FramedPoint minimap_to_world(const MinimapTransform& m, const FramedPoint& p_mini);
FramedPoint world_to_minimap(const MinimapTransform& m, const FramedPoint& p_world);

/// Robot state: position and velocity in W, attitude of B in W, body rates.
struct DroneState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Quat attitude = Quat::Identity();
  Vec3 angular_velocity = Vec3::Zero();
  double stamp = 0.0;

  /// T_B^W built from position and attitude.
  RigidTransform pose() const;
  double yaw() const;
};

}  // namespace mrnav
