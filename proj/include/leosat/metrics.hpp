#pragma once

#include <Eigen/Dense>
#include <span>

#include "leosat/config.hpp"

namespace leosat {

/// N x K precoder; column k is user k's precoding vector.
struct PrecodingMatrix {
  Eigen::MatrixXcd w;
  double power_budget = 0;

  double total_power() const { return w.squaredNorm(); }
  int num_antennas() const { return static_cast<int>(w.rows()); }
  int num_users() const { return static_cast<int>(w.cols()); }
};

struct RateReport {
  Eigen::VectorXd sinr;  // linear
  Eigen::VectorXd rate;  // bit/s/Hz per user
  double sum_rate = 0;   // bit/s/Hz
};

/// Per-user SINR |h_k w_k|^2 / (noise + sum_{l != k} |h_k w_l|^2).
Eigen::VectorXd sinr(const Eigen::MatrixXcd& channel, const PrecodingMatrix& precoder,
                     double noise_power);

/// Per-user SLNR |h_k w_k|^2 / (noise + sum_{l != k} |h_l w_k|^2).
Eigen::VectorXd slnr(const Eigen::MatrixXcd& channel, const PrecodingMatrix& precoder,
                     double noise_power);

RateReport sum_rate(const Eigen::MatrixXcd& channel, const PrecodingMatrix& precoder,
                    double noise_power);

/// Gain |steering(cos aod) w_k| per user (rows) and grid point (columns);
/// linear scale, no path loss or antenna gains.
Eigen::MatrixXd beam_pattern(const PrecodingMatrix& precoder, const ScenarioConfig& cfg,
                             std::span<const double> aod_grid);

/// Width of the contiguous region around the peak where gain >= peak/sqrt(2),
/// measured in the grid's own units. Edges are linearly interpolated.
double half_power_beamwidth(std::span<const double> grid, std::span<const double> gain);

}  // namespace leosat
