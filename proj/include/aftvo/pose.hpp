#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace aftvo {

/// Microseconds on the shared capture clock.
using Timestamp = std::int64_t;

inline double to_seconds(Timestamp t) { return static_cast<double>(t) * 1e-6; }
Timestamp from_seconds(double seconds);

using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Rotation from Euler angles, R = Rz(ez) * Ry(ey) * Rx(ex).
Eigen::Quaterniond quaternion_from_euler(const Eigen::Vector3d& euler_xyz);
/// Inverse of quaternion_from_euler; returns (ex, ey, ez) with ey in [-pi/2, pi/2].
Eigen::Vector3d euler_from_quaternion(const Eigen::Quaterniond& q);

/// Rigid transform; rotation kept as a unit quaternion.
struct Pose {
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();

  static Pose identity() { return {}; }
  /// From (tx, ty, tz, ex, ey, ez), Euler angles in radians.
  static Pose from_vector(const Vector6d& v);
  Vector6d to_vector() const;

  Pose inverse() const;
  Pose operator*(const Pose& other) const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& point) const { return rotation * point + translation; }
};

/// Motion from `a` to `b` expressed in frame `a`: a^-1 * b.
Pose relative_pose(const Pose& a, const Pose& b);
/// Applies a relative motion: a * relative.
Pose compose(const Pose& a, const Pose& relative);

/// Fixed per-dimension standardisation of 6-DoF vectors: (v - offset) / scale.
struct PoseNormaliser {
  Vector6d offset = Vector6d::Zero();
  Vector6d scale = Vector6d::Ones();

  /// Sample mean and standard deviation; scale floored at `floor`.
  static PoseNormaliser fit(std::span<const Vector6d> samples, double floor = 1e-3);
  void validate() const;
};

/// Rotation angle of a pose's quaternion in [0, pi].
double rotation_angle(const Pose& p);

struct StampedPose {
  Timestamp stamp;
  Pose pose;
};

/// Time-ordered poses; stamps strictly increasing.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(std::vector<StampedPose> poses);

  void push_back(Timestamp stamp, const Pose& pose);
  std::size_t size() const { return poses_.size(); }
  bool empty() const { return poses_.empty(); }
  const StampedPose& operator[](std::size_t i) const { return poses_[i]; }
  std::span<const StampedPose> poses() const { return poses_; }
  auto begin() const { return poses_.begin(); }
  auto end() const { return poses_.end(); }

  /// Exact-stamp lookup; nullptr when absent.
  const Pose* find(Timestamp stamp) const;
  const Pose& at(Timestamp stamp) const;
  /// Sub-trajectory at the given stamps (all must be present).
  Trajectory select(std::span<const Timestamp> stamps) const;

 private:
  std::vector<StampedPose> poses_;
};

}  // namespace aftvo
