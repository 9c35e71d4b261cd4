#include "leosat/adam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "leosat/errors.hpp"

namespace leosat {

double CosineDecay::at(std::int64_t step) const {
  const double final_lr = final_fraction * base_lr;
  if (total_steps <= 0) return final_lr;
  const double progress =
      static_cast<double>(std::clamp<std::int64_t>(step, 0, total_steps)) / static_cast<double>(total_steps);
  return final_lr + (base_lr - final_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

Adam::Adam(Eigen::Index num_params, CosineDecay schedule, AdamOptions options)
    : schedule_(schedule),
      options_(options),
      m_(Eigen::VectorXd::Zero(num_params)),
      v_(Eigen::VectorXd::Zero(num_params)) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw Error("Adam::step: parameter/gradient size mismatch");
  }
  if (!grads.allFinite()) {
    Eigen::Index bad = 0;
    while (bad < grads.size() && std::isfinite(grads(bad))) ++bad;
    const auto count = (!grads.array().isFinite()).count();
    throw NonFiniteGradient("non-finite gradient: " + std::to_string(count) +
                            " entries, first at index " + std::to_string(bad) + " (step " +
                            std::to_string(step_count_) + ")");
  }
  const double lr = current_lr();
  const double b1 = options_.beta1, b2 = options_.beta2;
  Eigen::VectorXd m = b1 * m_ + (1.0 - b1) * grads;
  Eigen::VectorXd v = b2 * v_ + (1.0 - b2) * grads.cwiseAbs2();
  const double t = static_cast<double>(step_count_ + 1);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  Eigen::VectorXd updated =
      params.array() - lr * (m.array() / c1) / ((v.array() / c2).sqrt() + options_.epsilon);
  if (!updated.allFinite()) {
    throw NonFiniteGradient("Adam::step produced non-finite parameters at step " +
                            std::to_string(step_count_));
  }
  params = std::move(updated);
  m_ = std::move(m);
  v_ = std::move(v);
  ++step_count_;
}

void Adam::restore(Eigen::VectorXd first, Eigen::VectorXd second, std::int64_t step_count) {
  if (first.size() != second.size()) throw Error("Adam::restore: moment size mismatch");
  m_ = std::move(first);
  v_ = std::move(second);
  step_count_ = step_count;
}

}  // namespace leosat
