#include "leosat/sac_trainer.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "leosat/errors.hpp"
#include "leosat/metrics.hpp"

namespace leosat {

namespace {

constexpr std::array<std::string_view, 23> kSacKeys = {
    "actor_hidden",      "critic_hidden",       "batch_norm",        "leaky_slope",
    "bn_momentum",       "bn_epsilon",          "actor_output_init_scale",
    "num_critics",       "batch_size",          "buffer_capacity",   "inference_per_learning",
    "critic_lr",         "actor_lr",            "lr_final_fraction", "schedule_steps",
    "critic_l2",         "actor_l2",            "auto_temperature",  "initial_log_alpha",
    "temperature_lr",    "target_entropy",      "transform",         "standardization_samples"};

std::string join_widths(const std::vector<int>& widths) {
  std::string out;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(widths[i]);
  }
  return out;
}

std::vector<int> parse_widths(std::string_view key, std::string_view v) {
  std::vector<int> out;
  if (v.empty() || v == "none") return out;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    auto comma = v.find(',', pos);
    if (comma == std::string_view::npos) comma = v.size();
    const auto w = parse_int_value(key, v.substr(pos, comma - pos));
    if (w < 1) throw ConfigError("layer widths must be positive in '" + std::string(key) + "'");
    out.push_back(static_cast<int>(w));
    pos = comma + 1;
  }
  return out;
}

MlpOptions network_options(const SacOptions& o, int input, int output, const std::vector<int>& hidden,
                           double output_scale) {
  MlpOptions m;
  m.input_size = input;
  m.output_size = output;
  m.hidden = hidden;
  m.batch_norm = o.batch_norm;
  m.leaky_slope = o.leaky_slope;
  m.bn_momentum = o.bn_momentum;
  m.bn_epsilon = o.bn_epsilon;
  m.output_init_scale = output_scale;
  return m;
}

}  // namespace

std::string SacOptions::to_text() const {
  std::ostringstream os;
  os << "actor_hidden=" << join_widths(actor_hidden) << '\n'
     << "critic_hidden=" << join_widths(critic_hidden) << '\n'
     << "batch_norm=" << (batch_norm ? "true" : "false") << '\n'
     << "leaky_slope=" << format_double(leaky_slope) << '\n'
     << "bn_momentum=" << format_double(bn_momentum) << '\n'
     << "bn_epsilon=" << format_double(bn_epsilon) << '\n'
     << "actor_output_init_scale=" << format_double(actor_output_init_scale) << '\n'
     << "num_critics=" << num_critics << '\n'
     << "batch_size=" << batch_size << '\n'
     << "buffer_capacity=" << buffer_capacity << '\n'
     << "inference_per_learning=" << inference_per_learning << '\n'
     << "critic_lr=" << format_double(critic_lr) << '\n'
     << "actor_lr=" << format_double(actor_lr) << '\n'
     << "lr_final_fraction=" << format_double(lr_final_fraction) << '\n'
     << "schedule_steps=" << schedule_steps << '\n'
     << "critic_l2=" << format_double(critic_l2) << '\n'
     << "actor_l2=" << format_double(actor_l2) << '\n'
     << "auto_temperature=" << (auto_temperature ? "true" : "false") << '\n'
     << "initial_log_alpha=" << format_double(initial_log_alpha) << '\n'
     << "temperature_lr=" << format_double(temperature_lr) << '\n'
     << "target_entropy=" << (target_entropy ? format_double(*target_entropy) : "default") << '\n'
     << "transform=" << to_string(transform) << '\n'
     << "standardization_samples=" << standardization_samples << '\n';
  return os.str();
}

bool is_sac_option_key(std::string_view key) {
  for (auto k : kSacKeys) {
    if (k == key) return true;
  }
  return false;
}

void set_sac_option(SacOptions& o, std::string_view key, std::string_view v) {
  auto as_int = [&] { return static_cast<int>(parse_int_value(key, v)); };
  if (key == "actor_hidden") o.actor_hidden = parse_widths(key, v);
  else if (key == "critic_hidden") o.critic_hidden = parse_widths(key, v);
  else if (key == "batch_norm") o.batch_norm = parse_bool_value(key, v);
  else if (key == "leaky_slope") o.leaky_slope = parse_double_value(key, v);
  else if (key == "bn_momentum") o.bn_momentum = parse_double_value(key, v);
  else if (key == "bn_epsilon") o.bn_epsilon = parse_double_value(key, v);
  else if (key == "actor_output_init_scale") o.actor_output_init_scale = parse_double_value(key, v);
  else if (key == "num_critics") o.num_critics = as_int();
  else if (key == "batch_size") o.batch_size = as_int();
  else if (key == "buffer_capacity") o.buffer_capacity = parse_int_value(key, v);
  else if (key == "inference_per_learning") o.inference_per_learning = as_int();
  else if (key == "critic_lr") o.critic_lr = parse_double_value(key, v);
  else if (key == "actor_lr") o.actor_lr = parse_double_value(key, v);
  else if (key == "lr_final_fraction") o.lr_final_fraction = parse_double_value(key, v);
  else if (key == "schedule_steps") o.schedule_steps = parse_int_value(key, v);
  else if (key == "critic_l2") o.critic_l2 = parse_double_value(key, v);
  else if (key == "actor_l2") o.actor_l2 = parse_double_value(key, v);
  else if (key == "auto_temperature") o.auto_temperature = parse_bool_value(key, v);
  else if (key == "initial_log_alpha") o.initial_log_alpha = parse_double_value(key, v);
  else if (key == "temperature_lr") o.temperature_lr = parse_double_value(key, v);
  else if (key == "target_entropy") {
    if (v == "default") o.target_entropy.reset();
    else o.target_entropy = parse_double_value(key, v);
  } else if (key == "transform") o.transform = parse_input_transform(v);
  else if (key == "standardization_samples") o.standardization_samples = as_int();
  else throw ConfigError("unknown learner option '" + std::string(key) + "'");
}

SacOptions parse_sac_options(std::string_view text, SacOptions base) {
  for (const auto& [k, v] : parse_key_values(text)) {
    if (is_sac_option_key(k)) set_sac_option(base, k, v);
  }
  return base;
}

double SacAgent::target_entropy() const {
  return options.target_entropy.value_or(-static_cast<double>(state_size()));
}

PrecodingMatrix SacAgent::precode(const Eigen::MatrixXcd& estimated_channel, Rng& rng,
                                  ActionMode mode) const {
  const Eigen::VectorXd s = state_from_estimate(estimated_channel, stats, options.transform);
  const ActionVector a = sample_action(actor, s, rng, mode);
  return precoder_from_action(a.a, config.transmit_power, config.num_users, config.num_antennas);
}

SacAgent make_agent(const ScenarioConfig& cfg, const SacOptions& options, Rng& rng) {
  cfg.validate();
  if (options.num_critics < 1) throw ConfigError("num_critics must be >= 1");
  if (options.batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (options.buffer_capacity < 1) throw ConfigError("buffer_capacity must be >= 1");
  if (options.inference_per_learning < 1) throw ConfigError("inference_per_learning must be >= 1");

  SacAgent agent;
  agent.config = cfg;
  agent.options = options;
  const int state = agent.state_size();
  agent.actor = MlpNetwork(
      network_options(options, state, 2 * state, options.actor_hidden, options.actor_output_init_scale),
      rng);
  for (int c = 0; c < options.num_critics; ++c) {
    agent.critics.emplace_back(network_options(options, 2 * state, 1, options.critic_hidden, 1.0), rng);
  }
  agent.actor_opt = Adam(agent.actor.parameters().size(),
                         {options.actor_lr, options.lr_final_fraction, options.schedule_steps});
  for (const auto& c : agent.critics) {
    agent.critic_opts.emplace_back(c.parameters().size(),
                                   CosineDecay{options.critic_lr, options.lr_final_fraction,
                                               options.schedule_steps});
  }
  agent.log_alpha = options.initial_log_alpha;
  return agent;
}

// ---------------------------------------------------------------------------

SacTrainer::SacTrainer(ScenarioConfig cfg, SacOptions options, std::uint64_t seed)
    : seed_(seed),
      buffer_(static_cast<std::size_t>(std::max<std::int64_t>(options.buffer_capacity, 1))),
      world_rng_(derive_seed(seed, 1)),
      policy_rng_(derive_seed(seed, 2)),
      batch_rng_(derive_seed(seed, 3)) {
  Rng init_rng(derive_seed(seed, 0));
  agent_ = make_agent(cfg, options, init_rng);
}

void SacTrainer::calibrate() {
  Rng rng(derive_seed(seed_, 4));
  agent_.stats = calibrate_standardization(agent_.config, rng, agent_.options.standardization_samples,
                                           agent_.options.transform);
}

StepDiagnostics SacTrainer::train_step() {
  if (!agent_.stats.calibrated()) throw NotCalibrated("train_step before calibrate()");
  const auto& cfg = agent_.config;
  last_inference_.clear();
  double reward_sum = 0;
  for (int i = 0; i < agent_.options.inference_per_learning; ++i) {
    InferenceRecord rec{sample_realization(cfg, world_rng_), {}, {}};
    const Eigen::VectorXd s =
        state_from_estimate(rec.realization.estimated_channel, agent_.stats, agent_.options.transform);
    const ActionVector a = sample_action(agent_.actor, s, policy_rng_, ActionMode::stochastic);
    rec.precoder = precoder_from_action(a.a, cfg.transmit_power, cfg.num_users, cfg.num_antennas);
    const double reward = sum_rate(rec.realization.true_channel, rec.precoder, cfg.noise_power).sum_rate;
    rec.experience = {s, a.a, reward};
    buffer_.push(rec.experience);
    reward_sum += reward;
    ++agent_.inference_steps;
    last_inference_.push_back(std::move(rec));
  }

  StepDiagnostics diag;
  if (buffer_.size() >= static_cast<std::size_t>(agent_.options.batch_size)) {
    diag = learn(buffer_.sample(static_cast<std::size_t>(agent_.options.batch_size), batch_rng_));
  } else {
    diag.alpha = std::exp(agent_.log_alpha);
    diag.actor_lr = agent_.actor_opt.current_lr();
    diag.critic_lr = agent_.critic_opts.front().current_lr();
    diag.critic_losses.assign(agent_.critics.size(), 0.0);
  }
  diag.step = agent_.inference_steps;
  diag.mean_reward = reward_sum / agent_.options.inference_per_learning;
  return diag;
}

StepDiagnostics SacTrainer::learn(const ExperienceBatch& batch) {
  auto& a = agent_;
  StepDiagnostics diag;
  diag.learned = true;
  diag.critic_lr = a.critic_opts.front().current_lr();
  diag.actor_lr = a.actor_opt.current_lr();

  for (std::size_t c = 0; c < a.critics.size(); ++c) {
    diag.critic_losses.push_back(critic_loss(a.critics[c], batch, a.options.critic_l2));
    a.critic_opts[c].step(a.critics[c].parameters(), a.critics[c].gradients());
  }

  const ActorLossTerms terms =
      actor_loss(a.actor, a.critics, batch.states, policy_rng_, a.log_alpha, a.options.actor_l2);
  a.actor_opt.step(a.actor.parameters(), a.actor.gradients());
  diag.actor_loss = terms.loss;
  diag.mean_log_prob = terms.mean_log_prob;

  if (a.options.auto_temperature) {
    a.log_alpha = update_temperature(a.log_alpha, terms.mean_log_prob, a.target_entropy(),
                                     a.options.temperature_lr);
  }
  diag.alpha = std::exp(a.log_alpha);
  ++a.learning_steps;
  return diag;
}

}  // namespace leosat
