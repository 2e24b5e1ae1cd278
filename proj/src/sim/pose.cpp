#include "aftvo/pose.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace aftvo {

Timestamp from_seconds(double seconds) { return static_cast<Timestamp>(std::llround(seconds * 1e6)); }

Eigen::Quaterniond quaternion_from_euler(const Eigen::Vector3d& e) {
  Eigen::Quaterniond q = Eigen::AngleAxisd(e.z(), Eigen::Vector3d::UnitZ()) *
                         Eigen::AngleAxisd(e.y(), Eigen::Vector3d::UnitY()) *
                         Eigen::AngleAxisd(e.x(), Eigen::Vector3d::UnitX());
  return q.normalized();
}

Eigen::Vector3d euler_from_quaternion(const Eigen::Quaterniond& q) {
  const Eigen::Matrix3d r = q.normalized().toRotationMatrix();
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  double roll, yaw;
  if (std::abs(r(2, 0)) < 1.0 - 1e-12) {
    roll = std::atan2(r(2, 1), r(2, 2));
    yaw = std::atan2(r(1, 0), r(0, 0));
  } else {
    // Gimbal lock: fold all yaw-roll coupling into yaw.
    roll = 0.0;
    yaw = std::atan2(-r(0, 1), r(1, 1));
  }
  return {roll, pitch, yaw};
}

Pose Pose::from_vector(const Vector6d& v) {
  return {v.head<3>(), quaternion_from_euler(v.tail<3>())};
}

Vector6d Pose::to_vector() const {
  Vector6d v;
  v << translation, euler_from_quaternion(rotation);
  return v;
}

Pose Pose::inverse() const {
  const Eigen::Quaterniond inv = rotation.conjugate();
  return {-(inv * translation), inv};
}

Pose Pose::operator*(const Pose& other) const {
  return {rotation * other.translation + translation, (rotation * other.rotation).normalized()};
}

Pose relative_pose(const Pose& a, const Pose& b) { return a.inverse() * b; }

Pose compose(const Pose& a, const Pose& relative) { return a * relative; }

double rotation_angle(const Pose& p) {
  return 2.0 * std::atan2(p.rotation.vec().norm(), std::abs(p.rotation.w()));
}

Trajectory::Trajectory(std::vector<StampedPose> poses) : poses_(std::move(poses)) {
  for (std::size_t i = 1; i < poses_.size(); ++i)
    if (poses_[i].stamp <= poses_[i - 1].stamp)
      throw std::invalid_argument("trajectory stamps must be strictly increasing");
}

void Trajectory::push_back(Timestamp stamp, const Pose& pose) {
  if (!poses_.empty() && stamp <= poses_.back().stamp)
    throw std::invalid_argument("trajectory stamps must be strictly increasing");
  poses_.push_back({stamp, pose});
}

const Pose* Trajectory::find(Timestamp stamp) const {
  auto it = std::lower_bound(poses_.begin(), poses_.end(), stamp,
                             [](const StampedPose& p, Timestamp t) { return p.stamp < t; });
  if (it == poses_.end() || it->stamp != stamp) return nullptr;
  return &it->pose;
}

const Pose& Trajectory::at(Timestamp stamp) const {
  const Pose* p = find(stamp);
  if (!p) throw std::out_of_range("no pose at stamp " + std::to_string(stamp));
  return *p;
}

Trajectory Trajectory::select(std::span<const Timestamp> stamps) const {
  Trajectory out;
  for (Timestamp t : stamps) out.push_back(t, at(t));
  return out;
}

PoseNormaliser PoseNormaliser::fit(std::span<const Vector6d> samples, double floor) {
  PoseNormaliser n;
  if (samples.empty()) return n;
  const auto count = static_cast<double>(samples.size());
  for (const auto& v : samples) n.offset += v;
  n.offset /= count;
  Vector6d var = Vector6d::Zero();
  for (const auto& v : samples) var += (v - n.offset).cwiseAbs2();
  n.scale = (var / count).cwiseSqrt().cwiseMax(floor);
  return n;
}

void PoseNormaliser::validate() const {
  if (!offset.allFinite() || !(scale.array() > 0.0).all() || !scale.allFinite())
    throw std::invalid_argument("pose normaliser needs finite offsets and positive scales");
}

}  // namespace aftvo
