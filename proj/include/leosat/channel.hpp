#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "leosat/config.hpp"
#include "leosat/random.hpp"

namespace leosat {

using cd = std::complex<double>;

/// Geometry and large-scale channel state of one user for one simulation step.
struct UserState {
  double ground_offset = 0;  // m, signed, along the array axis
  double distance = 0;       // m
  double aod = 0;            // rad, angle of departure
  double space_angle = 0;    // cos(aod)
  double path_loss = 1;      // linear, FSPL combined with fading
  double fading_db = 0;
  double phase = 0;          // overall phase kappa, [0, 2pi)
};

/// True and estimated channels (K x N, one row per user) for one step.
struct ChannelRealization {
  Eigen::MatrixXcd true_channel;
  Eigen::MatrixXcd estimated_channel;
  std::vector<UserState> users;
  std::vector<double> angle_errors;

  /// Erroneous space angle cos(aod_k) + error_k as seen by the transmitter.
  double estimated_space_angle(int k) const;
};

/// Mean ground offset of user `k` (0-based): users are spaced by the mean
/// user distance and centered on the sub-satellite point.
double mean_ground_offset(int k, const ScenarioConfig& cfg);

/// Builds a user state at `ground_offset` with the given fading draw.
/// The overall phase follows cfg.phase_mode; `phase` is used only for
/// PhaseMode::uniform_random.
UserState make_user(double ground_offset, double fading_db, double phase, const ScenarioConfig& cfg);

std::vector<UserState> sample_user_positions(const ScenarioConfig& cfg, Rng& rng);

/// Linear free space path loss 16 pi^2 d^2 / (lambda^2 G_u G_s).
double free_space_path_loss(double distance, const ScenarioConfig& cfg);

/// ULA steering row; entry n (1-based) is exp(-j pi (d_a/lambda)(N+1-2n) x).
Eigen::RowVectorXcd steering_vector(double space_angle, const ScenarioConfig& cfg);

Eigen::RowVectorXcd channel_vector(const UserState& user, const ScenarioConfig& cfg);

/// Multiplicative space-angle error: h o steering_vector(delta).
Eigen::RowVectorXcd apply_aod_error(const Eigen::RowVectorXcd& h, double delta,
                                    const ScenarioConfig& cfg);

/// One simulation step: positions, true channel, per-user errors drawn as
/// error_bound * U(-1, 1) and the resulting estimate.
ChannelRealization sample_realization(const ScenarioConfig& cfg, Rng& rng);

}  // namespace leosat
