#include <algorithm>
#include <cmath>
#include <limits>
#include "aftvo/ekf.hpp"

#include <unsupported/Eigen/AutoDiff>

namespace aftvo::ekf {
namespace {

using Vector6 = Eigen::Matrix<double, 6, 1>;

template <typename T>
Eigen::Matrix<T, 12, 1> transition(const Eigen::Matrix<T, 12, 1>& x, double dt) {
  using std::cos;
  using std::sin;
  using std::tan;
  const T cx = cos(x[3]), sx = sin(x[3]), cy = cos(x[4]), sy = sin(x[4]), cz = cos(x[5]), sz = sin(x[5]);
  Eigen::Matrix<T, 3, 3> r;
  r << cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx,
       sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx,
       -sy, cy * sx, cy * cx;
  // Euler rates from body rates for R = Rz Ry Rx
  Eigen::Matrix<T, 3, 3> e;
  e << T(1.0), sx * tan(x[4]), cx * tan(x[4]),
       T(0.0), cx, -sx,
       T(0.0), sx / cy, cx / cy;
  Eigen::Matrix<T, 12, 1> out = x;
  out.template segment<3>(0) += r * x.template segment<3>(6) * T(dt);
  out.template segment<3>(3) += e * x.template segment<3>(9) * T(dt);
  return out;
}

Matrix12d transition_jacobian(const Vector12d& x, double dt) {
  using Scalar = Eigen::AutoDiffScalar<Vector12d>;
  Eigen::Matrix<Scalar, 12, 1> ax;
  for (int i = 0; i < 12; ++i) ax[i] = Scalar(x[i], 12, i);
  const auto y = transition(ax, dt);
  Matrix12d f;
  for (int i = 0; i < 12; ++i) f.row(i) = y[i].derivatives().transpose();
  return f;
}

Matrix12d symmetrised(const Matrix12d& p) { return 0.5 * (p + p.transpose()); }

}  // namespace

Pose EkfState::pose() const { return Pose::from_vector(x.head<6>()); }

EkfState ekf_predict(const EkfState& state, Timestamp t_new, const EkfConfig& config) {
  if (t_new < state.stamp) throw std::invalid_argument("ekf_predict: time regression");
  if (t_new == state.stamp) return state;
  const double dt = to_seconds(t_new - state.stamp);
  EkfState out;
  out.x = transition(state.x, dt);
  const Matrix12d f = transition_jacobian(state.x, dt);
  Matrix12d q = Matrix12d::Zero();
  q.diagonal().segment<3>(6).setConstant(config.q_velocity * dt);
  q.diagonal().segment<3>(9).setConstant(config.q_rate * dt);
  out.P = symmetrised(f * state.P * f.transpose() + q);
  out.stamp = t_new;
  return out;
}

EkfState ekf_update(const EkfState& state, const Vector6d& mean, const Vector6d& variance, double dt_frame) {
  if (!(dt_frame > 0.0)) throw std::invalid_argument("ekf_update: frame gap must be positive");
  if (!(variance.array() > 0.0).all()) throw std::invalid_argument("ekf_update: variance must be positive");
  Eigen::Matrix<double, 6, 12> h = Eigen::Matrix<double, 6, 12>::Zero();
  h.block<6, 6>(0, 6).setIdentity();
  const Vector6 z = mean / dt_frame;
  const Eigen::Matrix<double, 6, 6> r = (variance / (dt_frame * dt_frame)).asDiagonal();
  const Eigen::Matrix<double, 6, 6> s = h * state.P * h.transpose() + r;
  Eigen::LDLT<Eigen::Matrix<double, 6, 6>> ldlt(s);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all())
    throw std::runtime_error("ekf_update: singular innovation covariance");
  const Eigen::Matrix<double, 12, 6> k = ldlt.solve(h * state.P).transpose();
  EkfState out = state;
  out.x = state.x + k * (z - h * state.x);
  const Matrix12d a = Matrix12d::Identity() - k * h;
  out.P = symmetrised(a * state.P * a.transpose() + k * r * k.transpose());
  return out;
}

std::vector<EkfMeasurement> merge_measurements(std::vector<EkfMeasurement> measurements) {
  std::stable_sort(measurements.begin(), measurements.end(), [](const auto& a, const auto& b) {
    return a.stamp != b.stamp ? a.stamp < b.stamp : a.source_id < b.source_id;
  });
  return measurements;
}

Trajectory run_ekf(std::span<const EkfMeasurement> measurements, const StampedPose& start, const EkfConfig& config,
                   std::span<const Timestamp> extra_stamps) {
  std::vector<EkfMeasurement> sorted;
  for (const auto& m : measurements)
    if (m.stamp > start.stamp) sorted.push_back(m);
  sorted = merge_measurements(std::move(sorted));
  std::vector<Timestamp> extras(extra_stamps.begin(), extra_stamps.end());
  std::sort(extras.begin(), extras.end());
  extras.erase(std::unique(extras.begin(), extras.end()), extras.end());
  if (!extras.empty() && extras.front() < start.stamp)
    throw std::invalid_argument("run_ekf: requested stamp precedes the start pose");

  EkfState state;
  state.stamp = start.stamp;
  state.x.head<6>() = start.pose.to_vector();
  state.P.diagonal().head<6>().setConstant(config.initial_pose_variance);
  if (!sorted.empty()) {
    const auto& first = sorted.front();
    const double dt = to_seconds(first.stamp - first.previous);
    if (!(dt > 0.0)) throw std::invalid_argument("run_ekf: measurement with non-positive frame gap");
    state.x.tail<6>() = first.mean / dt;
    state.P.diagonal().tail<6>() = config.variance_inflation * first.variance / (dt * dt);
  }

  Trajectory out;
  out.push_back(start.stamp, start.pose);
  std::size_t next_extra = 0;
  auto emit_extras_before = [&](Timestamp limit) {
    for (; next_extra < extras.size() && extras[next_extra] < limit; ++next_extra)
      if (extras[next_extra] > start.stamp) out.push_back(extras[next_extra], ekf_predict(state, extras[next_extra], config).pose());
  };

  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& m = sorted[i];
    emit_extras_before(m.stamp);
    state = ekf_predict(state, m.stamp, config);
    if (i > 0) {
      const double dt = to_seconds(m.stamp - m.previous);
      if (!(dt > 0.0)) throw std::invalid_argument("run_ekf: measurement with non-positive frame gap");
      state = ekf_update(state, m.mean, config.variance_inflation * m.variance, dt);
    }
    if (i + 1 == sorted.size() || sorted[i + 1].stamp != m.stamp) {
      out.push_back(m.stamp, state.pose());
      while (next_extra < extras.size() && extras[next_extra] == m.stamp) ++next_extra;
    }
  }
  emit_extras_before(std::numeric_limits<Timestamp>::max());
  return out;
}

}  // namespace aftvo::ekf
