#include "leosat/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "leosat/channel.hpp"
#include "leosat/errors.hpp"

namespace leosat {

namespace {

void check_shapes(const Eigen::MatrixXcd& channel, const PrecodingMatrix& precoder) {
  if (channel.cols() != precoder.w.rows() || channel.rows() != precoder.w.cols()) {
    throw Error("shape mismatch: channel is " + std::to_string(channel.rows()) + "x" +
                std::to_string(channel.cols()) + ", precoder is " +
                std::to_string(precoder.w.rows()) + "x" + std::to_string(precoder.w.cols()));
  }
}

}  // namespace

Eigen::VectorXd sinr(const Eigen::MatrixXcd& channel, const PrecodingMatrix& precoder,
                     double noise_power) {
  check_shapes(channel, precoder);
  // gains(k, l) = |h_k w_l|^2
  const Eigen::MatrixXd gains = (channel * precoder.w).cwiseAbs2();
  const auto k_users = gains.rows();
  Eigen::VectorXd out(k_users);
  for (Eigen::Index k = 0; k < k_users; ++k) {
    const double signal = gains(k, k);
    const double interference = gains.row(k).sum() - signal;
    out(k) = signal / (noise_power + interference);
  }
  return out;
}

Eigen::VectorXd slnr(const Eigen::MatrixXcd& channel, const PrecodingMatrix& precoder,
                     double noise_power) {
  check_shapes(channel, precoder);
  const Eigen::MatrixXd gains = (channel * precoder.w).cwiseAbs2();
  const auto k_users = gains.rows();
  Eigen::VectorXd out(k_users);
  for (Eigen::Index k = 0; k < k_users; ++k) {
    const double signal = gains(k, k);
    const double leakage = gains.col(k).sum() - signal;
    out(k) = signal / (noise_power + leakage);
  }
  return out;
}

RateReport sum_rate(const Eigen::MatrixXcd& channel, const PrecodingMatrix& precoder,
                    double noise_power) {
  RateReport report;
  report.sinr = sinr(channel, precoder, noise_power);
  report.rate = report.sinr.unaryExpr([](double g) { return std::log2(1.0 + g); });
  report.sum_rate = report.rate.sum();
  return report;
}

Eigen::MatrixXd beam_pattern(const PrecodingMatrix& precoder, const ScenarioConfig& cfg,
                             std::span<const double> aod_grid) {
  if (aod_grid.empty()) throw Error("beam_pattern: empty angle grid");
  if (precoder.w.rows() != cfg.num_antennas) throw Error("beam_pattern: antenna count mismatch");
  Eigen::MatrixXd out(precoder.w.cols(), static_cast<Eigen::Index>(aod_grid.size()));
  for (std::size_t i = 0; i < aod_grid.size(); ++i) {
    const Eigen::RowVectorXcd a = steering_vector(std::cos(aod_grid[i]), cfg);
    out.col(static_cast<Eigen::Index>(i)) = (a * precoder.w).cwiseAbs().transpose();
  }
  return out;
}

double half_power_beamwidth(std::span<const double> grid, std::span<const double> gain) {
  if (grid.size() != gain.size() || grid.size() < 2) {
    throw Error("half_power_beamwidth: grid and gain must have equal length >= 2");
  }
  const auto peak_it = std::max_element(gain.begin(), gain.end());
  const auto peak = static_cast<std::size_t>(peak_it - gain.begin());
  const double level = *peak_it / std::sqrt(2.0);

  auto crossing = [&](std::size_t inside, std::size_t outside) {
    const double g0 = gain[inside], g1 = gain[outside];
    const double t = (g0 - level) / (g0 - g1);
    return grid[inside] + t * (grid[outside] - grid[inside]);
  };

  std::size_t lo = peak;
  while (lo > 0 && gain[lo - 1] >= level) --lo;
  std::size_t hi = peak;
  while (hi + 1 < gain.size() && gain[hi + 1] >= level) ++hi;
  const double left = lo > 0 ? crossing(lo, lo - 1) : grid[0];
  const double right = hi + 1 < gain.size() ? crossing(hi, hi + 1) : grid[gain.size() - 1];
  return std::abs(right - left);
}

}  // namespace leosat
