#include "leosat/channel.hpp"

#include <cmath>
#include <numbers>

namespace leosat {

using std::numbers::pi;

double ChannelRealization::estimated_space_angle(int k) const {
  return users[static_cast<std::size_t>(k)].space_angle + angle_errors[static_cast<std::size_t>(k)];
}

double mean_ground_offset(int k, const ScenarioConfig& cfg) {
  return (static_cast<double>(k + 1) - (cfg.num_users + 1) / 2.0) * cfg.mean_user_distance;
}

double free_space_path_loss(double distance, const ScenarioConfig& cfg) {
  const double lambda = cfg.wavelength;
  return 16.0 * pi * pi * distance * distance /
         (lambda * lambda * cfg.user_gain() * cfg.sat_gain());
}

UserState make_user(double ground_offset, double fading_db, double phase, const ScenarioConfig& cfg) {
  UserState u;
  u.ground_offset = ground_offset;
  u.distance = std::hypot(cfg.altitude, ground_offset);
  u.space_angle = ground_offset / u.distance;
  u.aod = std::acos(u.space_angle);
  u.fading_db = fading_db;
  u.path_loss = free_space_path_loss(u.distance, cfg) * db_to_linear(fading_db);
  if (cfg.phase_mode == PhaseMode::distance) {
    u.phase = std::fmod(2.0 * pi * u.distance / cfg.wavelength, 2.0 * pi);
  } else {
    u.phase = phase;
  }
  return u;
}

std::vector<UserState> sample_user_positions(const ScenarioConfig& cfg, Rng& rng) {
  std::vector<UserState> users;
  users.reserve(static_cast<std::size_t>(cfg.num_users));
  const double half = cfg.mean_user_distance / 2.0;
  for (int k = 0; k < cfg.num_users; ++k) {
    // Every draw is taken even when unused so the stream layout does not
    // depend on the jitter/fading/phase settings.
    const double jitter = uniform(rng, -1.0, 1.0) * half;
    const double fading = standard_normal(rng) * cfg.fading_std_db;
    const double phase = uniform(rng, 0.0, 2.0 * pi);
    const double x = mean_ground_offset(k, cfg) + (cfg.position_jitter ? jitter : 0.0);
    users.push_back(make_user(x, fading, phase, cfg));
  }
  return users;
}

Eigen::RowVectorXcd steering_vector(double space_angle, const ScenarioConfig& cfg) {
  const int n_ant = cfg.num_antennas;
  const double ratio = cfg.antenna_spacing / cfg.wavelength;
  Eigen::RowVectorXcd v(n_ant);
  for (int n = 1; n <= n_ant; ++n) {
    const double arg = -pi * ratio * static_cast<double>(n_ant + 1 - 2 * n) * space_angle;
    v(n - 1) = std::polar(1.0, arg);
  }
  return v;
}

Eigen::RowVectorXcd channel_vector(const UserState& user, const ScenarioConfig& cfg) {
  const cd scale = std::polar(1.0 / std::sqrt(user.path_loss), -user.phase);
  return scale * steering_vector(user.space_angle, cfg);
}

Eigen::RowVectorXcd apply_aod_error(const Eigen::RowVectorXcd& h, double delta,
                                    const ScenarioConfig& cfg) {
  return h.cwiseProduct(steering_vector(delta, cfg));
}

ChannelRealization sample_realization(const ScenarioConfig& cfg, Rng& rng) {
  ChannelRealization r;
  r.users = sample_user_positions(cfg, rng);
  const int k_users = cfg.num_users;
  r.true_channel.resize(k_users, cfg.num_antennas);
  r.estimated_channel.resize(k_users, cfg.num_antennas);
  r.angle_errors.resize(static_cast<std::size_t>(k_users));
  for (int k = 0; k < k_users; ++k) {
    const auto& user = r.users[static_cast<std::size_t>(k)];
    const Eigen::RowVectorXcd h = channel_vector(user, cfg);
    const double delta = cfg.error_bound * uniform(rng, -1.0, 1.0);
    r.angle_errors[static_cast<std::size_t>(k)] = delta;
    r.true_channel.row(k) = h;
    r.estimated_channel.row(k) = delta == 0.0 ? h : apply_aod_error(h, delta, cfg);
  }
  return r;
}

}  // namespace leosat
