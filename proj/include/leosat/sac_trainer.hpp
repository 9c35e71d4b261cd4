#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "leosat/adam.hpp"
#include "leosat/channel.hpp"
#include "leosat/config.hpp"
#include "leosat/neural.hpp"
#include "leosat/sac.hpp"

namespace leosat {

/// Learner hyper-parameters. Defaults are the full-scale settings;
/// tiny_sac_options() holds the desk-scale ones.
struct SacOptions {
  std::vector<int> actor_hidden = {512, 512, 512, 512};
  std::vector<int> critic_hidden = {512, 512, 512, 512};
  bool batch_norm = true;
  double leaky_slope = 0.01;
  double bn_momentum = 0.99;
  double bn_epsilon = 1e-5;
  double actor_output_init_scale = 1.0;

  int num_critics = 2;
  int batch_size = 1024;
  std::int64_t buffer_capacity = 100'000;
  int inference_per_learning = 10;

  double critic_lr = 1e-4;
  double actor_lr = 1e-5;
  double lr_final_fraction = 0.01;
  std::int64_t schedule_steps = 100'000;  // learning steps over which lr decays

  double critic_l2 = 0.1;
  double actor_l2 = 0.1;

  bool auto_temperature = true;
  double initial_log_alpha = -4.0;
  double temperature_lr = 1e-3;
  std::optional<double> target_entropy;  // default -2KN

  InputTransform transform = InputTransform::magnitude_phase;
  int standardization_samples = 100;

  /// `key=value` lines; parse_sac_options() reads them back bit-exactly.
  std::string to_text() const;
  bool operator==(const SacOptions&) const = default;
};

void set_sac_option(SacOptions& options, std::string_view key, std::string_view value);
bool is_sac_option_key(std::string_view key);
SacOptions parse_sac_options(std::string_view text, SacOptions base = {});

/// Actor, critics, optimizers, temperature and input standardisation: the
/// complete trainable state of one learned precoder.
struct SacAgent {
  ScenarioConfig config;  // scenario the agent was trained on
  SacOptions options;
  StandardizationStats stats;
  MlpNetwork actor;
  std::vector<MlpNetwork> critics;
  Adam actor_opt;
  std::vector<Adam> critic_opts;
  double log_alpha = 0;
  std::int64_t inference_steps = 0;
  std::int64_t learning_steps = 0;

  int num_users() const { return config.num_users; }
  int num_antennas() const { return config.num_antennas; }
  int state_size() const { return 2 * config.num_users * config.num_antennas; }
  double target_entropy() const;

  /// Precoder for an estimated channel; `mode == mean` is deterministic.
  PrecodingMatrix precode(const Eigen::MatrixXcd& estimated_channel, Rng& rng,
                          ActionMode mode = ActionMode::mean) const;
};

/// Fresh agent with independently initialised networks; stats left empty.
SacAgent make_agent(const ScenarioConfig& cfg, const SacOptions& options, Rng& rng);

struct StepDiagnostics {
  std::int64_t step = 0;  // inference steps taken so far
  bool learned = false;   // false while the buffer holds fewer than batch_size tuples
  std::vector<double> critic_losses;
  double actor_loss = 0;
  double alpha = 0;
  double mean_log_prob = 0;
  double mean_reward = 0;  // over this step's inference rollouts
  double critic_lr = 0;
  double actor_lr = 0;
};

/// What one inference step produced; kept for log-consistency audits.
struct InferenceRecord {
  ChannelRealization realization;
  PrecodingMatrix precoder;
  Experience experience;
};

/// Owns the agent, replay buffer and random streams of one training run.
class SacTrainer {
 public:
  SacTrainer(ScenarioConfig cfg, SacOptions options, std::uint64_t seed);

  /// Fits input standardisation on `options.standardization_samples`
  /// estimates. Must precede train_step().
  void calibrate();

  /// `inference_per_learning` inference steps followed by one learning step
  /// (skipped until the buffer holds a full batch). Throws NotCalibrated.
  StepDiagnostics train_step();

  /// One learning step on a given batch (exposed for tests).
  StepDiagnostics learn(const ExperienceBatch& batch);

  SacAgent& agent() { return agent_; }
  const SacAgent& agent() const { return agent_; }
  const ExperienceBuffer& buffer() const { return buffer_; }
  const std::vector<InferenceRecord>& last_inference() const { return last_inference_; }

 private:
  SacAgent agent_;
  std::uint64_t seed_;
  ExperienceBuffer buffer_;
  Rng world_rng_;
  Rng policy_rng_;
  Rng batch_rng_;
  std::vector<InferenceRecord> last_inference_;
};

}  // namespace leosat
