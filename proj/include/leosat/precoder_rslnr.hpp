#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "leosat/channel.hpp"
#include "leosat/config.hpp"
#include "leosat/metrics.hpp"

namespace leosat {

/// E{v^H v} of the steering row at the erroneous space angle, together with
/// the user's inverse path loss.
struct SteeringAutocorrelation {
  Eigen::MatrixXcd r;
  double inverse_path_loss = 0;
};

/// What the transmitter knows about a user: the erroneous space angle and
/// the (error-free) path loss.
struct UserEstimate {
  double space_angle = 0;
  double path_loss = 1;
};

/// Characteristic function of U(-B, B) at t: sin(tB)/(tB), 1 at tB = 0.
double characteristic_uniform(double t, double error_bound);

SteeringAutocorrelation steering_autocorrelation(double estimated_space_angle, double error_bound,
                                                 const ScenarioConfig& cfg);

struct EigenOptions {
  double tolerance = 1e-10;
  int max_iterations = 10'000;
  bool dense_fallback = true;
};

struct DominantEigenpair {
  Eigen::VectorXcd vector;  // unit norm, largest-magnitude entry real positive
  double value = 0;
  int iterations = 0;
  bool used_fallback = false;
};

/// Dominant eigenpair of A^-1 B for Hermitian positive definite A and
/// Hermitian positive semidefinite B, by power iteration with a Cholesky
/// solve per step. Falls back to a dense generalized Hermitian solver when
/// the iteration budget runs out. Throws EigenFailure if neither converges
/// or the Rayleigh quotient carries an imaginary residue above 1e-8.
DominantEigenpair dominant_generalized_eigenpair(const Eigen::MatrixXcd& a,
                                                 const Eigen::MatrixXcd& b,
                                                 const EigenOptions& options = {});

/// Per-user matrices (interference-plus-noise, signal) whose generalized
/// dominant eigenvector defines user k's robust SLNR beam.
std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> rslnr_user_system(
    std::span<const SteeringAutocorrelation> autocorrelations, int k, const ScenarioConfig& cfg);

/// Robust mean-SLNR precoder: w_k = sqrt(P/K) psi_k with psi_k the dominant
/// eigenvector of (sum_{l!=k} R_l / L_l + noise K/P I)^-1 R_k / L_k.
PrecodingMatrix rslnr_precoder(std::span<const UserEstimate> estimates, double error_bound,
                               const ScenarioConfig& cfg, const EigenOptions& options = {});

/// Estimates taken from a realization: cos(aod_k) + error_k and the true path loss.
std::vector<UserEstimate> user_estimates(const ChannelRealization& realization);

}  // namespace leosat
