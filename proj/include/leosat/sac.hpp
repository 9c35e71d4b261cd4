#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "leosat/config.hpp"
#include "leosat/metrics.hpp"
#include "leosat/neural.hpp"
#include "leosat/random.hpp"

namespace leosat {

// ---------------------------------------------------------------------------
// State transforms

/// How a complex channel entry becomes two reals.
enum class InputTransform { magnitude_phase, real_imag };

std::string to_string(InputTransform t);
InputTransform parse_input_transform(std::string_view s);

/// Per-dimension standardisation (x - mean) / scale, frozen after calibration.
struct StandardizationStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  int sample_count = 0;

  bool calibrated() const { return sample_count > 0 && mean.size() > 0; }
};

/// Flattens H row-major and splits every entry into an interleaved pair
/// (|h|, arg h) or (re h, im h). Length 2KN.
Eigen::VectorXd raw_state(const Eigen::MatrixXcd& estimated_channel, InputTransform transform);

/// raw_state() followed by standardisation. Throws NotCalibrated.
Eigen::VectorXd state_from_estimate(const Eigen::MatrixXcd& estimated_channel,
                                    const StandardizationStats& stats, InputTransform transform);

/// Sample mean and population standard deviation of raw states over
/// `n_samples` fresh channel estimates drawn from `cfg`; scale floored at 1e-12.
StandardizationStats calibrate_standardization(const ScenarioConfig& cfg, Rng& rng,
                                               int n_samples, InputTransform transform);

/// Mean/scale from an explicit sample matrix (rows are samples).
StandardizationStats standardization_from_samples(const Eigen::MatrixXd& samples);

// ---------------------------------------------------------------------------
// Gaussian policy head

inline constexpr double kMinLogScale = -10.0;
inline constexpr double kMaxLogScale = 3.0;

/// Actor output split into its interleaved (mean, log_scale) pairs.
struct PolicyOutput {
  Eigen::VectorXd means;
  Eigen::VectorXd log_scales;  // clamped to [kMinLogScale, kMaxLogScale]
};

PolicyOutput split_policy_output(const Eigen::RowVectorXd& raw);

enum class ActionMode { stochastic, mean };

struct ActionVector {
  Eigen::VectorXd a;
  double log_prob = 0;
};

/// Sum of independent Normal(mean_i, exp(log_scale_i)) log-densities at a.
double gaussian_log_prob(const Eigen::VectorXd& a, const PolicyOutput& policy);

ActionVector sample_action(const MlpNetwork& actor, const Eigen::VectorXd& state, Rng& rng,
                           ActionMode mode);

ActionVector sample_action(const PolicyOutput& policy, Rng& rng, ActionMode mode);

/// Pairs consecutive reals into complex entries, reshapes row-major to N x K
/// and scales to total power P. Throws ZeroAction for an all-zero action.
PrecodingMatrix precoder_from_action(const Eigen::VectorXd& action, double transmit_power,
                                     int num_users, int num_antennas);

// ---------------------------------------------------------------------------
// Experience buffer

struct Experience {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  double reward = 0;
};

struct ExperienceBatch {
  Eigen::MatrixXd states;   // B x 2KN
  Eigen::MatrixXd actions;  // B x 2KN
  Eigen::VectorXd rewards;

  Eigen::Index size() const { return rewards.size(); }
  /// Critic input rows [state | action].
  Eigen::MatrixXd critic_input() const;
};

/// Fixed-capacity FIFO ring of (state, action, reward) tuples.
class ExperienceBuffer {
 public:
  explicit ExperienceBuffer(std::size_t capacity);

  void push(Experience e);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }

  /// i-th oldest stored tuple.
  const Experience& at(std::size_t i) const;

  /// Uniform sampling with replacement.
  ExperienceBatch sample(std::size_t batch_size, Rng& rng) const;
  /// Rows taken from raw storage slots, which are not in insertion order
  /// once the ring has wrapped.
  ExperienceBatch gather(std::span<const std::size_t> indices) const;

 private:
  std::size_t capacity_;
  std::vector<Experience> items_;
  std::size_t cursor_ = 0;  // slot of the oldest entry once full
};

// ---------------------------------------------------------------------------
// Losses

/// Mean squared error of Q(s, a) against the stored sum rate plus
/// l2_scale * ||theta||^2. Runs the critic in training mode and leaves
/// dLoss/dtheta in critic.gradients().
double critic_loss(MlpNetwork& critic, const ExperienceBatch& batch, double l2_scale);

std::vector<double> critic_losses(std::span<MlpNetwork> critics, const ExperienceBatch& batch,
                                  double l2_scale);

struct ActorLossTerms {
  double loss = 0;
  double q_term = 0;        // -(1/B) sum min_c Q_c
  double entropy_term = 0;  // (1/B) sum exp(log_alpha) log pi
  double l2_term = 0;       // l2_scale * ||theta||
  double mean_log_prob = 0;
  Eigen::MatrixXd actions;  // reparameterised samples, B x 2KN
};

/// Three-term actor loss with reparameterised actions mean + scale * noise.
/// The actor runs in training mode, the critics in inference mode (their
/// gradient stores are used as scratch). Leaves dLoss/dtheta in
/// actor.gradients().
ActorLossTerms actor_loss(MlpNetwork& actor, std::span<MlpNetwork> critics,
                          const Eigen::MatrixXd& states, const Eigen::MatrixXd& noise,
                          double log_alpha, double l2_scale);

/// Draws the reparameterisation noise and calls the fixed-noise overload.
ActorLossTerms actor_loss(MlpNetwork& actor, std::span<MlpNetwork> critics,
                          const Eigen::MatrixXd& states, Rng& rng, double log_alpha,
                          double l2_scale);

/// One gradient step on L(log_alpha) = -exp(log_alpha) (mean_log_prob + target).
double update_temperature(double log_alpha, double mean_log_prob, double target_entropy, double lr);

}  // namespace leosat
