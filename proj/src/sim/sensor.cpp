#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "aftvo/nn.hpp"
#include "aftvo/sim.hpp"

namespace aftvo::sim {
namespace {

Eigen::Quaterniond exp_map(const Eigen::Vector3d& w) {
  const double angle = w.norm();
  if (angle < 1e-15) return Eigen::Quaterniond::Identity();
  return Eigen::Quaterniond(Eigen::AngleAxisd(angle, w / angle));
}

}  // namespace

void SensorSpec::validate() const {
  if (!(rate_hz > 0.0)) throw std::invalid_argument("sensor rate must be positive");
  if (dropout_prob < 0.0 || dropout_prob > 1.0) throw std::invalid_argument("dropout_prob outside [0,1]");
  if (correlation < 0.0 || correlation > 1.0) throw std::invalid_argument("correlation outside [0,1]");
  if (jitter_std_us < 0.0 || noise_std_translation < 0.0 || noise_std_rotation < 0.0)
    throw std::invalid_argument("negative noise or jitter");
  for (const auto& w : degradation)
    if (w.end < w.start || w.multiplier < 0.0) throw std::invalid_argument("invalid degradation window");
}

double SensorSpec::noise_scale_at(Timestamp t) const {
  double scale = 1.0;
  bool covered = false;
  for (const auto& w : degradation)
    if (t >= w.start && t <= w.end) {
      scale = covered ? std::max(scale, w.multiplier) : w.multiplier;
      covered = true;
    }
  return scale;
}

std::vector<Timestamp> MeasurementStream::frame_stamps() const {
  std::vector<Timestamp> stamps{origin};
  for (const auto& e : entries) stamps.push_back(e.timestamp);
  return stamps;
}

SharedNoiseField::SharedNoiseField(std::uint64_t seed, double correlation_time_s, int features)
    : features_(features) {
  num::Rng rng(seed);
  std::normal_distribution<double> freq(0.0, 1.0 / correlation_time_s);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  omega_.resize(6 * static_cast<std::size_t>(features));
  phase_.resize(omega_.size());
  for (std::size_t i = 0; i < omega_.size(); ++i) {
    omega_[i] = freq(rng);
    phase_[i] = phase(rng);
  }
}

Vector6d SharedNoiseField::operator()(Timestamp t) const {
  const double ts = to_seconds(t);
  const double norm = std::sqrt(2.0 / features_);
  Vector6d v;
  for (int d = 0; d < 6; ++d) {
    double total = 0.0;
    for (int m = 0; m < features_; ++m) {
      const std::size_t i = static_cast<std::size_t>(d * features_ + m);
      total += std::cos(omega_[i] * ts + phase_[i]);
    }
    v[d] = norm * total;
  }
  return v;
}

MeasurementStream sample_sensor(const GroundTruthTrajectory& traj, const SensorSpec& spec,
                                std::uint64_t seed, const SharedNoiseField* shared) {
  spec.validate();
  num::Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double period = 1e6 / spec.rate_hz;
  const double clamp = 0.4 * period;
  std::vector<Timestamp> frames;
  for (std::int64_t n = 0;; ++n) {
    const double nominal = static_cast<double>(spec.phase_offset) + static_cast<double>(n) * period;
    if (nominal > static_cast<double>(traj.duration()) + clamp) break;
    const double jitter = std::clamp(spec.jitter_std_us * gauss(rng), -clamp, clamp);
    const auto t = static_cast<Timestamp>(std::llround(nominal + jitter));
    if (t >= 0 && t <= traj.duration()) frames.push_back(t);
  }
  std::vector<Timestamp> kept;
  for (Timestamp t : frames)
    if (!(unit(rng) < spec.dropout_prob)) kept.push_back(t);
  if (kept.size() < 2)
    throw std::invalid_argument("sensor " + std::to_string(spec.source_id) +
                                " produces fewer than 2 frames");

  const double rho = shared ? spec.correlation : 0.0;
  const double shared_w = std::sqrt(rho), own_w = std::sqrt(1.0 - rho);
  MeasurementStream stream;
  stream.source_id = spec.source_id;
  stream.origin = kept.front();
  Pose previous = traj.pose_at(kept.front());
  for (std::size_t i = 1; i < kept.size(); ++i) {
    const Timestamp t = kept[i];
    const Pose current = traj.pose_at(t);
    const Pose truth = relative_pose(previous, current);
    const double scale = spec.noise_scale_at(t);
    Vector6d unit_noise;
    for (int d = 0; d < 6; ++d) unit_noise[d] = gauss(rng);
    if (shared) unit_noise = shared_w * (*shared)(t) + own_w * unit_noise;
    const Eigen::Vector3d dt = spec.noise_std_translation * scale * unit_noise.head<3>();
    const Eigen::Vector3d dr = spec.noise_std_rotation * scale * unit_noise.tail<3>();
    Pose observed{truth.translation + dt, (truth.rotation * exp_map(dr)).normalized()};
    stream.entries.push_back({t, observed.to_vector(), scale});
    previous = current;
  }
  return stream;
}

std::vector<MeasurementStream> sample_sensors(const GroundTruthTrajectory& traj,
                                              const std::vector<SensorSpec>& specs,
                                              std::uint64_t seed, double correlation_time_s) {
  std::map<int, SharedNoiseField> fields;
  for (const auto& spec : specs)
    if (spec.correlation_group >= 0 && spec.correlation > 0.0 && !fields.contains(spec.correlation_group))
      fields.emplace(spec.correlation_group,
                     SharedNoiseField(num::mix_seed(seed, 1000 + static_cast<std::uint64_t>(spec.correlation_group)),
                                      correlation_time_s));
  std::vector<MeasurementStream> streams;
  for (const auto& spec : specs) {
    const SharedNoiseField* field = nullptr;
    if (auto it = fields.find(spec.correlation_group); it != fields.end()) field = &it->second;
    streams.push_back(
        sample_sensor(traj, spec, num::mix_seed(seed, static_cast<std::uint64_t>(spec.source_id)), field));
  }
  return streams;
}

const MeasurementStream& Episode::stream(int source_id) const {
  for (const auto& s : streams)
    if (s.source_id == source_id) return s;
  throw std::out_of_range("no stream for source " + std::to_string(source_id));
}

Vector6d Episode::true_relative(Timestamp from, Timestamp to) const {
  return relative_pose(ground_truth.at(from), ground_truth.at(to)).to_vector();
}

Episode simulate_episode(const SimulationConfig& config, std::uint64_t seed) {
  const auto traj = generate_trajectory(config.kind, config.duration_s, num::mix_seed(seed, 0), config.trajectory);
  Episode ep;
  ep.streams = sample_sensors(traj, config.sensors, num::mix_seed(seed, 1), config.correlation_time_s);

  const double period = 1e6 / config.reference_rate_hz;
  for (std::int64_t u = 0;; ++u) {
    const auto t = static_cast<Timestamp>(std::llround(static_cast<double>(u) * period));
    if (t > traj.duration()) break;
    ep.reference_stamps.push_back(t);
  }
  std::set<Timestamp> stamps(ep.reference_stamps.begin(), ep.reference_stamps.end());
  for (const auto& s : ep.streams)
    for (Timestamp t : s.frame_stamps()) stamps.insert(t);
  for (Timestamp t : stamps) ep.ground_truth.push_back(t, traj.pose_at(t));
  return ep;
}

std::vector<SensorSpec> asynchronous_triplet() {
  std::vector<SensorSpec> specs(3);
  const double rates[] = {12.0, 17.0, 25.0};
  const Timestamp phases[] = {0, 11'000, 23'000};
  for (int k = 0; k < 3; ++k) {
    auto& s = specs[static_cast<std::size_t>(k)];
    s.source_id = k;
    s.rate_hz = rates[k];
    s.phase_offset = phases[k];
    s.jitter_std_us = 3000.0;
    s.noise_std_translation = 0.02;
    s.noise_std_rotation = 0.002;
    s.dropout_prob = 0.03;
  }
  return specs;
}

std::vector<SensorSpec> synchronous_triplet() {
  auto specs = asynchronous_triplet();
  for (auto& s : specs) {
    s.rate_hz = 20.0;
    s.phase_offset = 0;
    s.jitter_std_us = 0.0;
    s.dropout_prob = 0.0;
  }
  return specs;
}

}  // namespace aftvo::sim
