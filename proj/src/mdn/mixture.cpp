#include <algorithm>
#include <cmath>

#include "aftvo/mdn.hpp"

namespace aftvo::mdn {
namespace {
const double kHalfLog2Pi = 0.5 * std::log(2.0 * M_PI);
}

std::vector<double> MixtureParams::payload() const {
  std::vector<double> out(alpha.begin(), alpha.end());
  for (const auto& m : mu) out.insert(out.end(), m.data(), m.data() + 6);
  for (const auto& s : sigma) out.insert(out.end(), s.data(), s.data() + 6);
  return out;
}

void MixtureParams::validate() const {
  if (alpha.empty() || mu.size() != alpha.size() || sigma.size() != alpha.size())
    throw std::invalid_argument("mixture component arrays differ in length");
  double total = 0.0;
  for (double a : alpha) {
    if (!(a >= 0.0)) throw std::invalid_argument("negative mixture weight");
    total += a;
  }
  if (std::abs(total - 1.0) > 1e-6) throw std::invalid_argument("mixture weights do not sum to 1");
  for (const auto& s : sigma)
    if (!((s.array() > 0.0).all())) throw std::invalid_argument("non-positive mixture sigma");
}

double mixture_nll(const MixtureParams& p, const Vector6d& y) {
  p.validate();
  std::vector<double> terms;
  for (std::size_t i = 0; i < p.components(); ++i) {
    double log_phi = 0.0;
    for (int d = 0; d < 6; ++d) {
      const double z = (y[d] - p.mu[i][d]) / p.sigma[i][d];
      log_phi -= std::log(p.sigma[i][d]) + kHalfLog2Pi + 0.5 * z * z;
    }
    terms.push_back(std::log(p.alpha[i]) + log_phi);
  }
  const double hi = *std::max_element(terms.begin(), terms.end());
  double total = 0.0;
  for (double t : terms) total += std::exp(t - hi);
  const double nll = -(hi + std::log(total));
  if (!std::isfinite(nll)) throw num::NumericalError("non-finite mixture NLL");
  return nll;
}

Moments mixture_moments(const MixtureParams& p) {
  p.validate();
  Vector6d mean = Vector6d::Zero(), second = Vector6d::Zero();
  for (std::size_t i = 0; i < p.components(); ++i) {
    mean += p.alpha[i] * p.mu[i];
    second += p.alpha[i] * (p.sigma[i].array().square() + p.mu[i].array().square()).matrix();
  }
  Vector6d var = second - mean.cwiseProduct(mean);
  return {mean, var.cwiseMax(0.0)};
}

MixtureParams MixtureTensors::values() const {
  MixtureParams p;
  const std::size_t x = log_alpha.size();
  for (std::size_t i = 0; i < x; ++i) {
    p.alpha.push_back(std::exp(log_alpha.data()[i]));
    Vector6d m, s;
    for (int d = 0; d < 6; ++d) {
      m[d] = mu.at(i, static_cast<std::size_t>(d));
      s[d] = sigma.at(i, static_cast<std::size_t>(d));
    }
    p.mu.push_back(m);
    p.sigma.push_back(s);
  }
  return p;
}

num::Tensor mixture_nll(const MixtureTensors& p, const Vector6d& y) {
  using namespace num;
  const Tensor target({1, 6}, std::vector<double>(y.data(), y.data() + 6));
  const Tensor z = mul(sub(p.mu, target), exp(scale(log(p.sigma), -1.0)));
  // log phi_i = -sum_d (log sigma + 0.5 log 2pi + 0.5 z^2)
  const Tensor per_dim = add(add(log(p.sigma), scale(mul(z, z), 0.5)), Tensor::scalar(kHalfLog2Pi));
  const Tensor log_phi = scale(sum_rows(per_dim), -1.0);  // [X,1]
  const Tensor joint = add(transpose(p.log_alpha), log_phi);
  return scale(logsumexp_rows(transpose(joint)), -1.0);
}

}  // namespace aftvo::mdn
