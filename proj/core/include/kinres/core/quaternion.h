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

#ifndef KINRES_CORE_QUATERNION_H_
#define KINRES_CORE_QUATERNION_H_

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace kinres {

using Vec3 = Eigen::Vector3d;
using VecX = Eigen::VectorXd;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Tolerance accepted on the norm of externally supplied quaternions.
inline constexpr double kUnitNormTolerance = 1e-6;

// Rotation stored as a unit-norm quaternion (w, x, y, z). Every constructor
// renormalizes, so the norm is 1 to within rounding.
class UnitQuaternion {
 public:
  UnitQuaternion() = default;

  // Components that must already be unit norm within kUnitNormTolerance.
  // Throws ValidationError otherwise.
  static UnitQuaternion FromComponents(double w, double x, double y, double z);
  // Arbitrary non-zero finite components, normalized.
  static UnitQuaternion Normalize(double w, double x, double y, double z);
  // Same, but falls back to identity when the norm is below `min_norm`.
  static UnitQuaternion NormalizeOrIdentity(double w, double x, double y,
                                            double z, double min_norm = 1e-12);
  static UnitQuaternion FromAxisAngle(const Vec3& axis, double angle);
  // Exponential map of a rotation vector (axis * angle).
  static UnitQuaternion FromRotationVector(const Vec3& rotvec);
  static UnitQuaternion FromMatrix(const Mat3& m);
  static UnitQuaternion Yaw(double angle) {
    return FromAxisAngle(Vec3::UnitZ(), angle);
  }

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }
  Eigen::Vector4d Coeffs() const { return {w_, x_, y_, z_}; }

  UnitQuaternion operator*(const UnitQuaternion& o) const;
  UnitQuaternion Inverse() const { return Raw(w_, -x_, -y_, -z_); }
  UnitQuaternion Negated() const { return Raw(-w_, -x_, -y_, -z_); }
  Vec3 Rotate(const Vec3& v) const;
  Mat3 ToMatrix() const;
  // Logarithm map: rotation vector with angle in [0, pi].
  Vec3 ToRotationVector() const;
  // Heading angle of the rotated x axis projected on the ground plane.
  double Heading() const;

  // Exact component equality. Use QuatDiffAngle for geometric comparison.
  bool operator==(const UnitQuaternion& o) const {
    return w_ == o.w_ && x_ == o.x_ && y_ == o.y_ && z_ == o.z_;
  }

 private:
  static UnitQuaternion Raw(double w, double x, double y, double z) {
    UnitQuaternion q;
    q.w_ = w;
    q.x_ = x;
    q.y_ = y;
    q.z_ = z;
    return q;
  }

  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

// Geodesic angle of the relative rotation a^-1 b, in [0, pi]. Symmetric and
// zero for q vs -q.
double QuatDiffAngle(const UnitQuaternion& a, const UnitQuaternion& b);

// Raw (w, x, y, z) overload; throws ValidationError when either input is off
// unit norm by more than kUnitNormTolerance.
double QuatDiffAngle(const Eigen::Vector4d& a, const Eigen::Vector4d& b);

// Wraps to (-pi, pi].
double WrapAngle(double angle);

Mat3 Skew(const Vec3& v);

}  // namespace kinres

#endif  // KINRES_CORE_QUATERNION_H_
