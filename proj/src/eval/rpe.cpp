#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aftvo/eval.hpp"

namespace aftvo::eval {
namespace {

void summarise(const std::vector<double>& e, double& rmse, double& max, double& mean, double& std) {
  if (e.empty()) {
    rmse = max = mean = std = 0.0;
    return;
  }
  double sq = 0.0, total = 0.0;
  max = 0.0;
  for (double v : e) {
    sq += v * v;
    total += v;
    max = std::max(max, v);
  }
  const auto n = static_cast<double>(e.size());
  mean = total / n;
  rmse = std::sqrt(sq / n);
  double dev = 0.0;
  for (double v : e) dev += (v - mean) * (v - mean);
  std = std::sqrt(dev / n);
}

RpeReport from_errors(std::vector<double> trans, std::vector<double> rot) {
  RpeReport r;
  r.errors = std::move(trans);
  r.rot_errors = std::move(rot);
  summarise(r.errors, r.rmse, r.max, r.mean, r.std);
  summarise(r.rot_errors, r.rot_rmse, r.rot_max, r.rot_mean, r.rot_std);
  return r;
}

}  // namespace

RpeReport rpe(const Trajectory& est, const Trajectory& gt) {
  if (est.size() < 2) throw std::invalid_argument("rpe needs at least 2 estimated poses");
  std::vector<double> trans, rot;
  const Pose* prev_gt = gt.find(est[0].stamp);
  if (!prev_gt) throw std::invalid_argument("estimate stamp missing from ground truth");
  for (std::size_t i = 1; i < est.size(); ++i) {
    const Pose* cur_gt = gt.find(est[i].stamp);
    if (!cur_gt) throw std::invalid_argument("estimate stamp missing from ground truth");
    const Pose gt_rel = relative_pose(*prev_gt, *cur_gt);
    const Pose est_rel = relative_pose(est[i - 1].pose, est[i].pose);
    const Pose err = gt_rel.inverse() * est_rel;
    trans.push_back(err.translation.norm());
    rot.push_back(rotation_angle(err));
    prev_gt = cur_gt;
  }
  return from_errors(std::move(trans), std::move(rot));
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

RpeReport median_report(const std::vector<RpeReport>& reports) {
  RpeReport out;
  if (reports.empty()) return out;
  auto pick = [&](auto member) {
    std::vector<double> v;
    for (const auto& r : reports) v.push_back(r.*member);
    return median(std::move(v));
  };
  out.rmse = pick(&RpeReport::rmse);
  out.max = pick(&RpeReport::max);
  out.mean = pick(&RpeReport::mean);
  out.std = pick(&RpeReport::std);
  out.rot_rmse = pick(&RpeReport::rot_rmse);
  out.rot_max = pick(&RpeReport::rot_max);
  out.rot_mean = pick(&RpeReport::rot_mean);
  out.rot_std = pick(&RpeReport::rot_std);
  return out;
}

RpeReport pool_reports(const std::vector<RpeReport>& reports) {
  std::vector<double> trans, rot;
  for (const auto& r : reports) {
    trans.insert(trans.end(), r.errors.begin(), r.errors.end());
    rot.insert(rot.end(), r.rot_errors.begin(), r.rot_errors.end());
  }
  return from_errors(std::move(trans), std::move(rot));
}

}  // namespace aftvo::eval
