#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aftvo/pose.hpp"

namespace aftvo::sim {

enum class TrajectoryKind { Straight, Arc, RandomSmooth };

TrajectoryKind parse_trajectory_kind(const std::string& name);
std::string to_string(TrajectoryKind kind);

struct TrajectoryParams {
  double speed = 10.0;        // m/s, straight and arc
  double arc_radius = 20.0;   // m
  double mean_speed = 9.0;    // m/s, random_smooth
  double speed_variation = 1.5;       // m/s amplitude bound per harmonic
  double curvature_variation = 0.03;  // 1/m amplitude bound per harmonic
  double attitude_variation = 0.02;   // rad amplitude of roll/pitch sway
};

struct Harmonic {
  double amplitude, frequency_hz, phase;
};

/// Ground-truth motion sampled on a 1 kHz grid. Between grid points position
/// and heading use cubic Hermite interpolation, so pose_at is C1 in time.
class GroundTruthTrajectory {
 public:
  static constexpr Timestamp kSamplePeriod = 1000;

  GroundTruthTrajectory(TrajectoryKind kind, double duration_s, const TrajectoryParams& params,
                        std::uint64_t seed);

  Timestamp duration() const { return duration_; }
  TrajectoryKind kind() const { return kind_; }
  Pose pose_at(Timestamp t) const;
  /// Unwrapped heading angle (rad).
  double heading_at(Timestamp t) const;
  std::size_t sample_count() const { return yaw_.size(); }

  double speed(double t) const;
  double curvature(double t) const;
  double roll(double t) const;
  double pitch(double t) const;

 private:
  TrajectoryKind kind_;
  Timestamp duration_;
  TrajectoryParams params_;
  std::vector<Harmonic> speed_terms_, curvature_terms_, roll_terms_, pitch_terms_;
  std::vector<double> yaw_, yaw_rate_;
  std::vector<Eigen::Vector3d> position_, velocity_;

  Eigen::Vector3d world_velocity(double t, double yaw) const;
};

/// Seeded ground truth; throws std::invalid_argument for duration <= 0.
GroundTruthTrajectory generate_trajectory(TrajectoryKind kind, double duration_s, std::uint64_t seed,
                                          const TrajectoryParams& params = {});

struct DegradationWindow {
  Timestamp start;
  Timestamp end;
  double multiplier;
};

struct SensorSpec {
  int source_id = 0;
  double rate_hz = 10.0;
  Timestamp phase_offset = 0;
  double jitter_std_us = 0.0;
  double noise_std_translation = 0.0;  // m per frame, each axis
  double noise_std_rotation = 0.0;     // rad per frame, each tangent axis
  double dropout_prob = 0.0;
  std::vector<DegradationWindow> degradation;
  /// Sensors in the same group share part of their noise (view overlap).
  int correlation_group = -1;
  double correlation = 0.0;  // fraction of noise variance that is shared

  void validate() const;
  /// Noise multiplier at `t`: the largest covering window, 1 elsewhere.
  double noise_scale_at(Timestamp t) const;
};

struct Measurement {
  Timestamp timestamp;
  Vector6d observation;  // relative pose since the previous retained frame
  double noise_scale;
};

/// Measurements of one sensor; entry n pairs retained frames n and n+1,
/// frame 0 being `origin`.
struct MeasurementStream {
  int source_id = 0;
  Timestamp origin = 0;
  std::vector<Measurement> entries;

  Timestamp previous_stamp(std::size_t i) const { return i == 0 ? origin : entries[i - 1].timestamp; }
  std::vector<Timestamp> frame_stamps() const;
};

/// Smooth zero-mean unit-variance 6-channel process (random Fourier features
/// of a squared-exponential kernel). Shared by a correlation group.
class SharedNoiseField {
 public:
  SharedNoiseField(std::uint64_t seed, double correlation_time_s, int features = 64);
  Vector6d operator()(Timestamp t) const;

 private:
  int features_;
  std::vector<double> omega_, phase_;  // [6 * features]
};

MeasurementStream sample_sensor(const GroundTruthTrajectory& traj, const SensorSpec& spec,
                                std::uint64_t seed, const SharedNoiseField* shared = nullptr);

/// Samples every sensor with per-sensor seeds and per-group shared noise.
std::vector<MeasurementStream> sample_sensors(const GroundTruthTrajectory& traj,
                                              const std::vector<SensorSpec>& specs,
                                              std::uint64_t seed, double correlation_time_s = 0.03);

struct SimulationConfig {
  TrajectoryKind kind = TrajectoryKind::RandomSmooth;
  double duration_s = 40.0;
  TrajectoryParams trajectory;
  std::vector<SensorSpec> sensors;
  double reference_rate_hz = 10.0;
  double correlation_time_s = 0.03;
};

/// One simulated drive: asynchronous streams plus ground truth at every
/// sensor frame and every reference (query) stamp.
struct Episode {
  std::vector<MeasurementStream> streams;
  std::vector<Timestamp> reference_stamps;
  Trajectory ground_truth;

  const MeasurementStream& stream(int source_id) const;
  /// Ground-truth relative motion between two stamps present in ground_truth.
  Vector6d true_relative(Timestamp from, Timestamp to) const;
};

Episode simulate_episode(const SimulationConfig& config, std::uint64_t seed);

/// Sensor presets used by benchmarks and examples.
std::vector<SensorSpec> asynchronous_triplet();
std::vector<SensorSpec> synchronous_triplet();

}  // namespace aftvo::sim
