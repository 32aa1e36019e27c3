// Copyright 2026 The kinres Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kinres/core/quaternion.h"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "kinres/core/error.h"

namespace kinres {

UnitQuaternion UnitQuaternion::FromComponents(double w, double x, double y,
                                              double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!std::isfinite(n) || std::abs(n - 1.0) > kUnitNormTolerance) {
    throw ValidationError(
        fmt::format("quaternion norm {} is not unit within {}", n,
                    kUnitNormTolerance));
  }
  // Already unit to working precision: keep the bits so serialized values
  // round-trip exactly.
  if (std::abs(n - 1.0) <= 1e-12) return Raw(w, x, y, z);
  return Raw(w / n, x / n, y / n, z / n);
}

UnitQuaternion UnitQuaternion::Normalize(double w, double x, double y,
                                         double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!std::isfinite(n) || n == 0.0) {
    throw ValidationError("cannot normalize a zero or non-finite quaternion");
  }
  return Raw(w / n, x / n, y / n, z / n);
}

UnitQuaternion UnitQuaternion::NormalizeOrIdentity(double w, double x,
                                                   double y, double z,
                                                   double min_norm) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!std::isfinite(n) || n < min_norm) return UnitQuaternion();
  return Raw(w / n, x / n, y / n, z / n);
}

UnitQuaternion UnitQuaternion::FromAxisAngle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n == 0.0 || !std::isfinite(n)) {
    throw ValidationError("rotation axis must be non-zero");
  }
  const Vec3 u = axis / n;
  const double s = std::sin(0.5 * angle);
  return Normalize(std::cos(0.5 * angle), s * u.x(), s * u.y(), s * u.z());
}

UnitQuaternion UnitQuaternion::FromRotationVector(const Vec3& rotvec) {
  const double angle = rotvec.norm();
  if (angle < 1e-12) {
    // Second-order expansion of exp(v/2).
    return Normalize(1.0 - angle * angle / 8.0, 0.5 * rotvec.x(),
                     0.5 * rotvec.y(), 0.5 * rotvec.z());
  }
  return FromAxisAngle(rotvec / angle, angle);
}

UnitQuaternion UnitQuaternion::FromMatrix(const Mat3& m) {
  const Eigen::Quaterniond q(m);
  return Normalize(q.w(), q.x(), q.y(), q.z());
}

UnitQuaternion UnitQuaternion::operator*(const UnitQuaternion& o) const {
  return Normalize(w_ * o.w_ - x_ * o.x_ - y_ * o.y_ - z_ * o.z_,
                   w_ * o.x_ + x_ * o.w_ + y_ * o.z_ - z_ * o.y_,
                   w_ * o.y_ - x_ * o.z_ + y_ * o.w_ + z_ * o.x_,
                   w_ * o.z_ + x_ * o.y_ - y_ * o.x_ + z_ * o.w_);
}

Vec3 UnitQuaternion::Rotate(const Vec3& v) const {
  // v + 2 w (u x v) + 2 u x (u x v)
  const Vec3 u(x_, y_, z_);
  const Vec3 t = 2.0 * u.cross(v);
  return v + w_ * t + u.cross(t);
}

Mat3 UnitQuaternion::ToMatrix() const {
  Mat3 r;
  const double xx = x_ * x_, yy = y_ * y_, zz = z_ * z_;
  const double xy = x_ * y_, xz = x_ * z_, yz = y_ * z_;
  const double wx = w_ * x_, wy = w_ * y_, wz = w_ * z_;
  r << 1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy),  //
      2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx),   //
      2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy);
  return r;
}

Vec3 UnitQuaternion::ToRotationVector() const {
  // Pick the hemisphere with w >= 0 so the angle lies in [0, pi].
  const double sign = w_ < 0.0 ? -1.0 : 1.0;
  const Vec3 u(sign * x_, sign * y_, sign * z_);
  const double s = u.norm();
  const double angle = 2.0 * std::atan2(s, sign * w_);
  if (s < 1e-12) return 2.0 * u;
  return u * (angle / s);
}

double UnitQuaternion::Heading() const {
  const Vec3 fwd = Rotate(Vec3::UnitX());
  return std::atan2(fwd.y(), fwd.x());
}

double QuatDiffAngle(const UnitQuaternion& a, const UnitQuaternion& b) {
  // a^-1 a is only identity up to rounding.
  if (a == b || a == b.Negated()) return 0.0;
  const UnitQuaternion r = a.Inverse() * b;
  const double vec = std::sqrt(r.x() * r.x() + r.y() * r.y() + r.z() * r.z());
  return 2.0 * std::atan2(vec, std::abs(r.w()));
}

double QuatDiffAngle(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
  return QuatDiffAngle(UnitQuaternion::FromComponents(a[0], a[1], a[2], a[3]),
                       UnitQuaternion::FromComponents(b[0], b[1], b[2], b[3]));
}

double WrapAngle(double angle) {
  constexpr double kPi = std::numbers::pi;
  double r = std::remainder(angle, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

Mat3 Skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(),  //
      v.z(), 0, -v.x(),   //
      -v.y(), v.x(), 0;
  return s;
}

}  // namespace kinres
