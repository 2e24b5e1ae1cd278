#include "aftvo/eval.hpp"

namespace aftvo::eval {

Trajectory compose_trajectory(std::span<const StampedMotion> motions, const StampedPose& start) {
  Trajectory out;
  out.push_back(start.stamp, start.pose);
  Pose current = start.pose;
  for (const auto& m : motions) {
    current = compose(current, m.motion);
    out.push_back(m.stamp, current);
  }
  return out;
}

std::vector<StampedMotion> decompose_trajectory(const Trajectory& trajectory) {
  std::vector<StampedMotion> out;
  for (std::size_t i = 1; i < trajectory.size(); ++i)
    out.push_back({trajectory[i].stamp, relative_pose(trajectory[i - 1].pose, trajectory[i].pose)});
  return out;
}

}  // namespace aftvo::eval
