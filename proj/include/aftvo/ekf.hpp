#pragma once

#include <Eigen/Core>
#include <span>
#include <stdexcept>
#include <vector>

#include "aftvo/pose.hpp"

namespace aftvo::ekf {

using Vector12d = Eigen::Matrix<double, 12, 1>;
using Matrix12d = Eigen::Matrix<double, 12, 12>;

/// State layout: world position, Euler zyx angles, body linear velocity, body angular rate.
struct EkfState {
  Vector12d x = Vector12d::Zero();
  Matrix12d P = Matrix12d::Zero();
  Timestamp stamp = 0;

  Pose pose() const;
};

struct EkfConfig {
  double q_velocity = 3.0;   // m^2/s^3, white acceleration density
  double q_rate = 0.1;       // rad^2/s^3
  double initial_pose_variance = 0.0;
  double variance_inflation = 1.0;  // multiplies every measurement variance
};

/// Constant-velocity prediction to t_new; throws std::invalid_argument on time regression.
EkfState ekf_predict(const EkfState& state, Timestamp t_new, const EkfConfig& config);

/// Relative motion over a frame gap as a pseudo-velocity observation of
/// (v, w): z = mean / dt, R = variance / dt^2. Joseph-form covariance update.
EkfState ekf_update(const EkfState& state, const Vector6d& mean, const Vector6d& variance, double dt_frame);

struct EkfMeasurement {
  int source_id = 0;
  Timestamp stamp = 0;
  Timestamp previous = 0;  // stamp of the frame the motion starts from
  Vector6d mean = Vector6d::Zero();
  Vector6d variance = Vector6d::Ones();
};

/// Sorts by (stamp, source_id), the processing order of run_ekf.
std::vector<EkfMeasurement> merge_measurements(std::vector<EkfMeasurement> measurements);

/// Filters measurements stamped after `start` in timestamp order. Velocity is
/// initialised from the first of them. Returns poses at the start, at every
/// measurement stamp and at each of `extra_stamps` (predicted without
/// altering the filter).
Trajectory run_ekf(std::span<const EkfMeasurement> measurements, const StampedPose& start, const EkfConfig& config,
                   std::span<const Timestamp> extra_stamps = {});

}  // namespace aftvo::ekf
