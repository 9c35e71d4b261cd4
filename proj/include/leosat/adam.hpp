#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace leosat {

/// lr(t) = final + (base - final) (1 + cos(pi min(t, T) / T)) / 2 with
/// final = final_fraction * base. T = 0 means the schedule is already done.
struct CosineDecay {
  double base_lr = 1e-4;
  double final_fraction = 0.01;
  std::int64_t total_steps = 1;

  double at(std::int64_t step) const;

  bool operator==(const CosineDecay&) const = default;
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamOptions&) const = default;
};

/// Adam with a cosine-decayed learning rate. Regularisation is expected to
/// be folded into the gradient by the caller.
class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index num_params, CosineDecay schedule, AdamOptions options = {});

  /// Applies one update in place. Throws NonFiniteGradient (parameters left
  /// untouched) if any gradient entry is NaN/Inf, and also if the update would
  /// produce non-finite parameters.
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grads);

  /// Learning rate the next step() will use.
  double current_lr() const { return schedule_.at(step_count_); }

  std::int64_t step_count() const { return step_count_; }
  const CosineDecay& schedule() const { return schedule_; }
  const AdamOptions& options() const { return options_; }
  const Eigen::VectorXd& first_moment() const { return m_; }
  const Eigen::VectorXd& second_moment() const { return v_; }

  /// Restores full optimizer state (checkpoint loading).
  void restore(Eigen::VectorXd first, Eigen::VectorXd second, std::int64_t step_count);

 private:
  CosineDecay schedule_;
  AdamOptions options_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  std::int64_t step_count_ = 0;
};

}  // namespace leosat
