#include "mrnav/geom.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mrnav {

namespace {

Quat canonical(const Quat& q) {
  const double n = q.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("rotation quaternion must be finite and non-zero");
  }
  Quat out(q.coeffs() / n);
  if (out.w() < 0.0) out.coeffs() = -out.coeffs();
  return out;
}

void require_frame(Frame expected, Frame actual, const char* what) {
  if (expected != actual) {
    throw FrameMismatch(std::string(what) + ": expected frame " + std::string(to_string(expected)) +
                        ", got " + std::string(to_string(actual)));
  }
}

}  // namespace

std::string_view to_string(Frame f) {
  switch (f) {
    case Frame::W: return "W";
    case Frame::B: return "B";
    case Frame::H: return "H";
    case Frame::Bv: return "Bv";
    case Frame::Mv: return "Mv";
    case Frame::Wv: return "Wv";
  }
  return "?";
}

std::optional<Frame> frame_from_string(std::string_view s) {
  for (Frame f : {Frame::W, Frame::B, Frame::H, Frame::Bv, Frame::Mv, Frame::Wv}) {
    if (to_string(f) == s) return f;
  }
  return std::nullopt;
}

RigidTransform::RigidTransform(Frame from, Frame to, const Quat& rotation, const Vec3& translation)
    : from_(from), to_(to), rotation_(canonical(rotation)), translation_(translation) {
  if (!translation_.allFinite()) throw std::invalid_argument("translation must be finite");
}

RigidTransform RigidTransform::identity(Frame from, Frame to) {
  return {from, to, Quat::Identity(), Vec3::Zero()};
}

RigidTransform RigidTransform::translation(Frame from, Frame to, const Vec3& t) {
  return {from, to, Quat::Identity(), t};
}

RigidTransform RigidTransform::yaw(Frame from, Frame to, double yaw, const Vec3& t) {
  return {from, to, Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())), t};
}

std::array<double, 7> RigidTransform::to_array() const {
  return {rotation_.w(), rotation_.x(), rotation_.y(), rotation_.z(),
          translation_.x(), translation_.y(), translation_.z()};
}

RigidTransform RigidTransform::from_array(Frame from, Frame to, const std::array<double, 7>& a) {
  return {from, to, Quat(a[0], a[1], a[2], a[3]), Vec3(a[4], a[5], a[6])};
}

bool RigidTransform::approx_equal(const RigidTransform& other, double tol) const {
  if (from_ != other.from_ || to_ != other.to_) return false;
  // q and -q encode the same rotation; canonical() already fixes the sign
  // except at w == 0, hence the abs().
  const double dot = std::abs(rotation_.coeffs().dot(other.rotation_.coeffs()));
  return (1.0 - dot) <= tol && (translation_ - other.translation_).norm() <= tol;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  if (a.to() != b.from()) {
    throw FrameMismatch("compose: " + std::string(to_string(a.from())) + "->" +
                        std::string(to_string(a.to())) + " does not chain into " +
                        std::string(to_string(b.from())) + "->" + std::string(to_string(b.to())));
  }
  return {a.from(), b.to(), b.rotation() * a.rotation(), b.rotation() * a.translation() + b.translation()};
}

RigidTransform invert(const RigidTransform& t) {
  const Quat inv = t.rotation().conjugate();
  return {t.to(), t.from(), inv, -(inv * t.translation())};
}

FramedPoint transform_point(const RigidTransform& t, const FramedPoint& p) {
  require_frame(t.from(), p.frame, "transform_point");
  return {t.apply(p.p), t.to()};
}

MinimapTransform::MinimapTransform(double scale, const RigidTransform& rigid)
    : scale_(scale), rigid_(rigid) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("minimap scale must be positive and finite");
  }
  if (rigid.from() != Frame::Wv || rigid.to() != Frame::W) {
    throw FrameMismatch("minimap rigid transform must map Wv -> W");
  }
}

FramedPoint minimap_to_world(const MinimapTransform& m, const FramedPoint& p_mini) {
  require_frame(Frame::Wv, p_mini.frame, "minimap_to_world");
  return {m.rigid().apply(m.scale() * p_mini.p), Frame::W};
}

FramedPoint world_to_minimap(const MinimapTransform& m, const FramedPoint& p_world) {
  require_frame(Frame::W, p_world.frame, "world_to_minimap");
  return {invert(m.rigid()).apply(p_world.p) / m.scale(), Frame::Wv};
}

RigidTransform DroneState::pose() const { return {Frame::B, Frame::W, attitude, position}; }

double DroneState::yaw() const {
  const Quat& q = attitude;
  return std::atan2(2.0 * (q.w() * q.z() + q.x() * q.y()), 1.0 - 2.0 * (q.y() * q.y() + q.z() * q.z()));
}

}  // namespace mrnav
