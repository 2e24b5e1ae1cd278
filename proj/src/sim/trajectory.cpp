#include <cmath>
#include <random>
#include <stdexcept>

#include "aftvo/nn.hpp"
#include "aftvo/sim.hpp"

namespace aftvo::sim {
namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double evaluate(const std::vector<Harmonic>& terms, double t) {
  double v = 0.0;
  for (const auto& h : terms) v += h.amplitude * std::sin(kTwoPi * h.frequency_hz * t + h.phase);
  return v;
}

std::vector<Harmonic> draw_harmonics(num::Rng& rng, int count, double amplitude, double f_lo,
                                     double f_hi) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Harmonic> terms;
  for (int i = 0; i < count; ++i) {
    const double a = amplitude * (0.3 + 0.7 * unit(rng));
    const double f = f_lo + (f_hi - f_lo) * unit(rng);
    const double p = kTwoPi * unit(rng);
    terms.push_back({a, f, p});
  }
  return terms;
}

// Cubic Hermite basis on [0, 1] with endpoint values and slopes (already
// scaled by the interval length).
template <typename T>
T hermite(const T& p0, const T& m0, const T& p1, const T& m1, double s) {
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * p1 +
         (s3 - s2) * m1;
}

}  // namespace

TrajectoryKind parse_trajectory_kind(const std::string& name) {
  if (name == "straight") return TrajectoryKind::Straight;
  if (name == "arc") return TrajectoryKind::Arc;
  if (name == "random_smooth") return TrajectoryKind::RandomSmooth;
  throw std::invalid_argument("unknown trajectory kind: " + name);
}

std::string to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::Straight: return "straight";
    case TrajectoryKind::Arc: return "arc";
    case TrajectoryKind::RandomSmooth: return "random_smooth";
  }
  return "unknown";
}

GroundTruthTrajectory::GroundTruthTrajectory(TrajectoryKind kind, double duration_s,
                                             const TrajectoryParams& params, std::uint64_t seed)
    : kind_(kind), params_(params) {
  if (!(duration_s > 0.0)) throw std::invalid_argument("trajectory duration must be positive");
  duration_ = from_seconds(duration_s);

  if (kind == TrajectoryKind::RandomSmooth) {
    num::Rng rng(num::mix_seed(seed, 17));
    speed_terms_ = draw_harmonics(rng, 3, params.speed_variation, 0.15, 0.8);
    curvature_terms_ = draw_harmonics(rng, 3, params.curvature_variation, 0.05, 0.5);
    roll_terms_ = draw_harmonics(rng, 2, params.attitude_variation, 0.2, 1.0);
    pitch_terms_ = draw_harmonics(rng, 2, params.attitude_variation, 0.2, 1.0);
  }

  const std::size_t n = static_cast<std::size_t>((duration_ + kSamplePeriod - 1) / kSamplePeriod) + 1;
  yaw_.resize(n);
  yaw_rate_.resize(n);
  position_.resize(n);
  velocity_.resize(n);

  auto yaw_rate = [&](double t) { return curvature(t) * speed(t); };
  const double h = static_cast<double>(kSamplePeriod) * 1e-6;
  double yaw = 0.0;
  Eigen::Vector3d pos = Eigen::Vector3d::Zero();
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * h;
    yaw_[k] = yaw;
    yaw_rate_[k] = yaw_rate(t);
    position_[k] = pos;
    velocity_[k] = world_velocity(t, yaw);
    // RK4 on (yaw, position); the inputs are closed-form functions of t.
    const double k1y = yaw_rate(t);
    const Eigen::Vector3d k1p = world_velocity(t, yaw);
    const double k2y = yaw_rate(t + h / 2);
    const Eigen::Vector3d k2p = world_velocity(t + h / 2, yaw + h / 2 * k1y);
    const double k3y = k2y;
    const Eigen::Vector3d k3p = world_velocity(t + h / 2, yaw + h / 2 * k2y);
    const double k4y = yaw_rate(t + h);
    const Eigen::Vector3d k4p = world_velocity(t + h, yaw + h * k3y);
    yaw += h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y);
    pos += h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p);
  }
}

double GroundTruthTrajectory::speed(double t) const {
  switch (kind_) {
    case TrajectoryKind::Straight:
    case TrajectoryKind::Arc: return params_.speed;
    case TrajectoryKind::RandomSmooth:
      return std::max(1.0, params_.mean_speed + evaluate(speed_terms_, t));
  }
  return 0.0;
}

double GroundTruthTrajectory::curvature(double t) const {
  switch (kind_) {
    case TrajectoryKind::Straight: return 0.0;
    case TrajectoryKind::Arc: return 1.0 / params_.arc_radius;
    case TrajectoryKind::RandomSmooth: return evaluate(curvature_terms_, t);
  }
  return 0.0;
}

double GroundTruthTrajectory::roll(double t) const { return evaluate(roll_terms_, t); }
double GroundTruthTrajectory::pitch(double t) const { return evaluate(pitch_terms_, t); }

Eigen::Vector3d GroundTruthTrajectory::world_velocity(double t, double yaw) const {
  const Eigen::Quaterniond q = quaternion_from_euler({roll(t), pitch(t), yaw});
  return q * Eigen::Vector3d(speed(t), 0.0, 0.0);
}

double GroundTruthTrajectory::heading_at(Timestamp t) const {
  if (t < 0 || t > duration_) throw std::out_of_range("timestamp outside trajectory");
  const std::size_t k = std::min(static_cast<std::size_t>(t / kSamplePeriod), yaw_.size() - 2);
  const double s = static_cast<double>(t - static_cast<Timestamp>(k) * kSamplePeriod) / kSamplePeriod;
  const double h = static_cast<double>(kSamplePeriod) * 1e-6;
  return hermite(yaw_[k], yaw_rate_[k] * h, yaw_[k + 1], yaw_rate_[k + 1] * h, s);
}

Pose GroundTruthTrajectory::pose_at(Timestamp t) const {
  if (t < 0 || t > duration_) throw std::out_of_range("timestamp outside trajectory");
  const std::size_t k = std::min(static_cast<std::size_t>(t / kSamplePeriod), yaw_.size() - 2);
  const double s = static_cast<double>(t - static_cast<Timestamp>(k) * kSamplePeriod) / kSamplePeriod;
  const double h = static_cast<double>(kSamplePeriod) * 1e-6;
  const Eigen::Vector3d p =
      hermite<Eigen::Vector3d>(position_[k], velocity_[k] * h, position_[k + 1], velocity_[k + 1] * h, s);
  const double ts = to_seconds(t);
  const double yaw = hermite(yaw_[k], yaw_rate_[k] * h, yaw_[k + 1], yaw_rate_[k + 1] * h, s);
  return {p, quaternion_from_euler({roll(ts), pitch(ts), yaw})};
}

GroundTruthTrajectory generate_trajectory(TrajectoryKind kind, double duration_s, std::uint64_t seed,
                                          const TrajectoryParams& params) {
  return GroundTruthTrajectory(kind, duration_s, params, seed);
}

}  // namespace aftvo::sim
