#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "aftvo/io.hpp"
#include "aftvo/pose.hpp"
#include "aftvo/sim.hpp"

using namespace aftvo;
using namespace aftvo::sim;

namespace {

Pose random_pose(std::mt19937_64& rng, double max_pitch = std::numbers::pi / 2 - 0.1) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Pose p;
  p.translation = {5 * u(rng), 5 * u(rng), 5 * u(rng)};
  p.rotation = quaternion_from_euler({std::numbers::pi * u(rng), max_pitch * u(rng), std::numbers::pi * u(rng)});
  return p;
}

double pose_distance(const Pose& a, const Pose& b) {
  return (a.translation - b.translation).norm() + a.rotation.angularDistance(b.rotation);
}

SensorSpec clean_sensor(int id, double rate, Timestamp phase) {
  SensorSpec s;
  s.source_id = id;
  s.rate_hz = rate;
  s.phase_offset = phase;
  return s;
}

}  // namespace

TEST(Pose, EulerQuaternionRoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d e{std::numbers::pi * 0.999 * u(rng), (std::numbers::pi / 2 - 0.1) * u(rng),
                            std::numbers::pi * 0.999 * u(rng)};
    const Eigen::Vector3d back = euler_from_quaternion(quaternion_from_euler(e));
    EXPECT_LT((back - e).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Pose, EulerMatchesAxisProducts) {
  const Eigen::Vector3d e{0.3, -0.2, 1.1};
  const Eigen::Matrix3d expected = (Eigen::AngleAxisd(e.z(), Eigen::Vector3d::UnitZ()) *
                                    Eigen::AngleAxisd(e.y(), Eigen::Vector3d::UnitY()) *
                                    Eigen::AngleAxisd(e.x(), Eigen::Vector3d::UnitX()))
                                       .toRotationMatrix();
  EXPECT_LT((quaternion_from_euler(e).toRotationMatrix() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RelativePose, IdenticalPosesGiveIdentity) {
  std::mt19937_64 rng(1);
  const Pose a = random_pose(rng);
  const Pose r = relative_pose(a, a);
  EXPECT_LT(r.translation.norm(), 1e-12);
  EXPECT_LT(r.rotation.angularDistance(Eigen::Quaterniond::Identity()), 1e-9);
}

TEST(RelativePose, PureTranslation) {
  Pose b;
  b.translation = {1, 2, 3};
  const Pose r = relative_pose(Pose::identity(), b);
  EXPECT_DOUBLE_EQ(r.translation.x(), 1.0);
  EXPECT_DOUBLE_EQ(r.translation.y(), 2.0);
  EXPECT_DOUBLE_EQ(r.translation.z(), 3.0);
}

TEST(RelativePose, ComposeRoundTripRandomPairs) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng);
    const Pose c = compose(a, relative_pose(a, b));
    EXPECT_LT(pose_distance(c, b), 1e-9);
    EXPECT_NEAR(c.rotation.norm(), 1.0, 1e-9);
  }
}

TEST(RelativePose, ExpressedInEarlierFrame) {
  Pose a;
  a.rotation = quaternion_from_euler({0, 0, std::numbers::pi / 2});  // facing +y
  Pose b;
  b.translation = {0, 1, 0};
  b.rotation = a.rotation;
  const Pose r = relative_pose(a, b);
  EXPECT_NEAR(r.translation.x(), 1.0, 1e-12);  // straight ahead in a's frame
  EXPECT_NEAR(r.translation.y(), 0.0, 1e-12);
}

TEST(PoseVector, RoundTrip) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const Pose p = random_pose(rng);
    EXPECT_LT(pose_distance(Pose::from_vector(p.to_vector()), p), 1e-9);
  }
}

TEST(Trajectory, StraightLineAtConstantSpeed) {
  TrajectoryParams params;
  params.speed = 10.0;
  const auto traj = generate_trajectory(TrajectoryKind::Straight, 2.0, 1, params);
  const Pose p = traj.pose_at(1'000'000);
  EXPECT_NEAR(p.translation.x(), 10.0, 1e-9);
  EXPECT_NEAR(p.translation.y(), 0.0, 1e-9);
  EXPECT_NEAR(p.translation.z(), 0.0, 1e-9);
}

TEST(Trajectory, ArcFullLoopTurnsTwoPi) {
  TrajectoryParams params;
  params.speed = 10.0;
  params.arc_radius = 20.0;
  const double loop_s = 2 * std::numbers::pi * 20.0 / 10.0;
  const auto traj = generate_trajectory(TrajectoryKind::Arc, loop_s + 1.0, 1, params);
  const double turned = traj.heading_at(from_seconds(loop_s)) - traj.heading_at(0);
  EXPECT_NEAR(turned, 2 * std::numbers::pi, 1e-6);
  EXPECT_LT(traj.pose_at(from_seconds(loop_s)).translation.norm(), 1e-3);
}

TEST(Trajectory, RandomSmoothDeterministicPerSeed) {
  const auto a = generate_trajectory(TrajectoryKind::RandomSmooth, 5.0, 42);
  const auto b = generate_trajectory(TrajectoryKind::RandomSmooth, 5.0, 42);
  const auto c = generate_trajectory(TrajectoryKind::RandomSmooth, 5.0, 43);
  bool differs = false;
  for (Timestamp t = 0; t <= 5'000'000; t += 12'345) {
    const Pose pa = a.pose_at(t), pb = b.pose_at(t);
    EXPECT_EQ(pa.translation, pb.translation);
    EXPECT_EQ(pa.rotation.coeffs(), pb.rotation.coeffs());
    differs = differs || pose_distance(pa, c.pose_at(t)) > 1e-6;
  }
  EXPECT_TRUE(differs);
}

TEST(Trajectory, RandomSmoothIsContinuous) {
  const auto traj = generate_trajectory(TrajectoryKind::RandomSmooth, 4.0, 9);
  // position is C1: consecutive microsecond differences match the finite-difference velocity
  for (Timestamp t = 1000; t < 3'900'000; t += 77'777) {
    const Eigen::Vector3d v0 = (traj.pose_at(t + 1).translation - traj.pose_at(t - 1).translation) / 2e-6;
    const Eigen::Vector3d v1 = (traj.pose_at(t + 501).translation - traj.pose_at(t + 499).translation) / 2e-6;
    EXPECT_LT((v0 - v1).norm(), 0.05);
  }
}

TEST(Trajectory, RejectsNonPositiveDuration) {
  EXPECT_THROW(generate_trajectory(TrajectoryKind::Straight, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(generate_trajectory(TrajectoryKind::Arc, -1.0, 1), std::invalid_argument);
}

TEST(Sensor, NoiseFreeObservationsEqualTruth) {
  const auto traj = generate_trajectory(TrajectoryKind::RandomSmooth, 5.0, 2);
  const auto stream = sample_sensor(traj, clean_sensor(0, 17.0, 3'000), 7);
  ASSERT_GT(stream.entries.size(), 10u);
  for (std::size_t i = 0; i < stream.entries.size(); ++i) {
    const auto& m = stream.entries[i];
    const Pose truth = relative_pose(traj.pose_at(stream.previous_stamp(i)), traj.pose_at(m.timestamp));
    EXPECT_LT((m.observation - truth.to_vector()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Sensor, AsynchronousRatesShareNoStamps) {
  const auto traj = generate_trajectory(TrajectoryKind::Straight, 3.0, 1);
  const auto a = sample_sensor(traj, clean_sensor(0, 12.0, 1'000), 1);
  const auto b = sample_sensor(traj, clean_sensor(1, 20.0, 7'000), 2);
  EXPECT_NE(a.entries.size(), b.entries.size());
  std::set<Timestamp> stamps;
  for (const auto& m : a.entries) stamps.insert(m.timestamp);
  for (const auto& m : b.entries) EXPECT_FALSE(stamps.count(m.timestamp));
}

TEST(Sensor, EmpiricalNoiseStdMatchesConfiguredStd) {
  const auto traj = generate_trajectory(TrajectoryKind::Straight, 500.0, 1);
  SensorSpec s = clean_sensor(0, 25.0, 0);
  s.noise_std_translation = 0.05;
  const auto stream = sample_sensor(traj, s, 99);
  ASSERT_GE(stream.entries.size(), 10'000u);
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < stream.entries.size(); ++i) {
    const Pose truth = relative_pose(traj.pose_at(stream.previous_stamp(i)), traj.pose_at(stream.entries[i].timestamp));
    const Vector6d d = stream.entries[i].observation - truth.to_vector();
    for (int j = 0; j < 3; ++j) ss += d[j] * d[j];
    n += 3;
  }
  EXPECT_NEAR(std::sqrt(ss / static_cast<double>(n)), 0.05, 0.05 * 0.05);
}

TEST(Sensor, RotationNoiseInTangentSpace) {
  const auto traj = generate_trajectory(TrajectoryKind::Straight, 400.0, 1);
  SensorSpec s = clean_sensor(0, 25.0, 0);
  s.noise_std_rotation = 0.01;
  const auto stream = sample_sensor(traj, s, 5);
  double ss = 0.0;
  for (std::size_t i = 0; i < stream.entries.size(); ++i) {
    const Pose truth = relative_pose(traj.pose_at(stream.previous_stamp(i)), traj.pose_at(stream.entries[i].timestamp));
    const double angle = truth.rotation.angularDistance(Pose::from_vector(stream.entries[i].observation).rotation);
    ss += angle * angle;
  }
  // squared angle of a 3-D isotropic tangent perturbation averages 3 sigma^2
  EXPECT_NEAR(std::sqrt(ss / static_cast<double>(stream.entries.size()) / 3.0), 0.01, 0.01 * 0.05);
}

TEST(Sensor, JitterNeverReordersFrames) {
  const auto traj = generate_trajectory(TrajectoryKind::Straight, 20.0, 1);
  SensorSpec s = clean_sensor(0, 25.0, 0);
  s.jitter_std_us = 1e6;  // far beyond the period; the clamp must hold
  const auto stream = sample_sensor(traj, s, 3);
  const double period = 1e6 / s.rate_hz;
  for (std::size_t i = 0; i < stream.entries.size(); ++i) {
    EXPECT_GT(stream.entries[i].timestamp, stream.previous_stamp(i));
  }
  for (std::size_t n = 0; n < stream.entries.size(); ++n) {
    const double nominal = std::round(static_cast<double>(stream.entries[n].timestamp) / period) * period;
    EXPECT_LE(std::abs(static_cast<double>(stream.entries[n].timestamp) - nominal), 0.4 * period + 1.0);
  }
}

TEST(Sensor, DropoutRemovesFramesAndPairsRetainedNeighbours) {
  const auto traj = generate_trajectory(TrajectoryKind::RandomSmooth, 20.0, 4);
  SensorSpec s = clean_sensor(0, 20.0, 0);
  s.dropout_prob = 0.3;
  const auto stream = sample_sensor(traj, s, 8);
  EXPECT_LT(stream.entries.size(), 20u * 20u * 8u / 10u);
  for (std::size_t i = 0; i < stream.entries.size(); ++i) {
    const Pose truth = relative_pose(traj.pose_at(stream.previous_stamp(i)), traj.pose_at(stream.entries[i].timestamp));
    EXPECT_LT((stream.entries[i].observation - truth.to_vector()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Sensor, DegradationWindowScalesNoise) {
  SensorSpec s = clean_sensor(0, 10.0, 0);
  s.degradation = {{1'000'000, 2'000'000, 5.0}, {1'500'000, 3'000'000, 8.0}};
  EXPECT_DOUBLE_EQ(s.noise_scale_at(500'000), 1.0);
  EXPECT_DOUBLE_EQ(s.noise_scale_at(1'200'000), 5.0);
  EXPECT_DOUBLE_EQ(s.noise_scale_at(1'700'000), 8.0);
  const auto traj = generate_trajectory(TrajectoryKind::Straight, 4.0, 1);
  const auto stream = sample_sensor(traj, s, 1);
  for (const auto& m : stream.entries) EXPECT_DOUBLE_EQ(m.noise_scale, s.noise_scale_at(m.timestamp));
}

TEST(Sensor, InvalidSpecsRejected) {
  SensorSpec s;
  s.rate_hz = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.rate_hz = 10.0;
  s.dropout_prob = 1.5;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.dropout_prob = 0.0;
  s.degradation = {{2, 1, 2.0}};
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Sensor, TooFewFramesIsAnError) {
  const auto traj = generate_trajectory(TrajectoryKind::Straight, 1.0, 1);
  EXPECT_THROW(sample_sensor(traj, clean_sensor(0, 0.5, 0), 1), std::invalid_argument);
}

TEST(Sensor, ComposedCleanStreamsMatchTruthAtOwnStamps) {
  const auto traj = generate_trajectory(TrajectoryKind::RandomSmooth, 10.0, 6);
  for (const auto& spec : asynchronous_triplet()) {
    SensorSpec s = spec;
    s.noise_std_translation = s.noise_std_rotation = s.dropout_prob = 0.0;
    const auto stream = sample_sensor(traj, s, 3);
    Pose pose = traj.pose_at(stream.origin);
    for (const auto& m : stream.entries) {
      pose = compose(pose, Pose::from_vector(m.observation));
      EXPECT_LT((pose.translation - traj.pose_at(m.timestamp).translation).norm(), 1e-6);
    }
  }
}

TEST(Sensor, SameSeedGivesIdenticalStreamText) {
  SimulationConfig cfg;
  cfg.duration_s = 5.0;
  cfg.sensors = asynchronous_triplet();
  const Episode a = simulate_episode(cfg, 17), b = simulate_episode(cfg, 17);
  ASSERT_EQ(a.streams.size(), b.streams.size());
  for (std::size_t k = 0; k < a.streams.size(); ++k) {
    std::ostringstream sa, sb;
    io::write_stream(sa, a.streams[k]);
    io::write_stream(sb, b.streams[k]);
    EXPECT_EQ(sa.str(), sb.str());
  }
}

TEST(SharedNoise, CorrelatedSensorsShareNoise) {
  const auto traj = generate_trajectory(TrajectoryKind::Straight, 200.0, 1);
  std::vector<SensorSpec> specs(2);
  for (int k = 0; k < 2; ++k) {
    specs[k] = clean_sensor(k, 20.0, 0);
    specs[k].noise_std_translation = 0.05;
    specs[k].correlation_group = 0;
    specs[k].correlation = 0.9;
  }
  specs[1].phase_offset = 2'000;
  const auto streams = sample_sensors(traj, specs, 3);
  const std::size_t n = std::min(streams[0].entries.size(), streams[1].entries.size());
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = streams[0].entries[i].observation[0] - 0.5, b = streams[1].entries[i].observation[0] - 0.5;
    sab += a * b;
    saa += a * a;
    sbb += b * b;
  }
  EXPECT_GT(sab / std::sqrt(saa * sbb), 0.7);
}

TEST(StreamIo, RoundTripIsExact) {
  SimulationConfig cfg;
  cfg.duration_s = 3.0;
  cfg.sensors = asynchronous_triplet();
  const Episode ep = simulate_episode(cfg, 5);
  std::stringstream s;
  io::write_stream(s, ep.streams[1]);
  const auto back = io::read_stream(s);
  ASSERT_EQ(back.entries.size(), ep.streams[1].entries.size());
  EXPECT_EQ(back.origin, ep.streams[1].origin);
  for (std::size_t i = 0; i < back.entries.size(); ++i) {
    EXPECT_EQ(back.entries[i].timestamp, ep.streams[1].entries[i].timestamp);
    EXPECT_EQ(back.entries[i].observation, ep.streams[1].entries[i].observation);
    EXPECT_EQ(back.entries[i].noise_scale, ep.streams[1].entries[i].noise_scale);
  }
}

TEST(StreamIo, RejectsMissingHeaderAndUnsortedStamps) {
  std::istringstream no_header("0 1 0 0 0 0 0 0 1\n");
  EXPECT_THROW(io::read_stream(no_header), io::FormatError);
  std::istringstream unsorted(
      "# aftvo-stream v1 origin_us=0 columns=source_id,timestamp_us,tx,ty,tz,ex,ey,ez,noise_scale\n"
      "0 20 0 0 0 0 0 0 1\n0 10 0 0 0 0 0 0 1\n");
  EXPECT_THROW(io::read_stream(unsorted), io::FormatError);
}

TEST(TumIo, RoundTripKeepsStamps) {
  std::mt19937_64 rng(2);
  Trajectory t;
  for (int i = 0; i < 20; ++i) t.push_back(1'000'003 + 33'331 * i, random_pose(rng));
  std::stringstream s;
  io::write_tum(s, t);
  const Trajectory back = io::read_tum(s);
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(back[i].stamp, t[i].stamp);
    EXPECT_LT(pose_distance(back[i].pose, t[i].pose), 1e-12);
  }
}
