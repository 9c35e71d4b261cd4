#include "leosat/scenarios.hpp"

#include "leosat/errors.hpp"

namespace leosat {

ScenarioConfig scenario_config(std::string_view id) {
  ScenarioConfig cfg;
  if (id == "a") {
    cfg.num_antennas = 10;
    cfg.mean_user_distance = 100e3;
  } else if (id == "b") {
    cfg.num_antennas = 16;
    cfg.mean_user_distance = 100e3;
  } else if (id == "c") {
    cfg.num_antennas = 16;
    cfg.mean_user_distance = 10e3;
  } else if (id == "tiny") {
    cfg.num_antennas = 4;
    cfg.num_users = 2;
    cfg.mean_user_distance = 100e3;
  } else if (id != "custom") {
    throw ConfigError("unknown scenario '" + std::string(id) + "' (expected a, b, c, tiny or custom)");
  }
  return cfg;
}

std::vector<std::string> scenario_ids() { return {"a", "b", "c", "tiny", "custom"}; }

std::vector<double> default_error_bounds() { return {0.0, 0.01, 0.02, 0.03, 0.05, 0.075, 0.1}; }

SacOptions tiny_sac_options() {
  SacOptions o;
  o.actor_hidden = {128, 128};
  o.critic_hidden = {128, 128};
  o.batch_size = 256;
  o.buffer_capacity = 100'000;
  o.critic_lr = 1e-3;
  o.actor_lr = 1e-4;
  o.schedule_steps = 20'000;
  o.critic_l2 = 1e-4;
  o.actor_l2 = 1e-4;
  o.transform = InputTransform::real_imag;
  return o;
}

}  // namespace leosat
