#include "leosat/precoder_rslnr.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "leosat/errors.hpp"

namespace leosat {

using std::numbers::pi;

double characteristic_uniform(double t, double error_bound) {
  const double x = t * error_bound;
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

SteeringAutocorrelation steering_autocorrelation(double estimated_space_angle, double error_bound,
                                                 const ScenarioConfig& cfg) {
  const int n_ant = cfg.num_antennas;
  const double k_spacing = 2.0 * pi / cfg.wavelength * cfg.antenna_spacing;
  SteeringAutocorrelation out;
  out.r.resize(n_ant, n_ant);
  for (int n = 0; n < n_ant; ++n) {
    out.r(n, n) = 1.0;
    for (int m = n + 1; m < n_ant; ++m) {
      const double t = k_spacing * static_cast<double>(n - m);
      const cd entry = std::polar(characteristic_uniform(t, error_bound), -t * estimated_space_angle);
      out.r(n, m) = entry;
      out.r(m, n) = std::conj(entry);
    }
  }
  return out;
}

namespace {

// Rotates v so that its largest-magnitude component is real positive.
void fix_phase(Eigen::VectorXcd& v) {
  Eigen::Index idx = 0;
  v.cwiseAbs2().maxCoeff(&idx);
  const double mag = std::abs(v(idx));
  if (mag > 0) {
    v *= std::conj(v(idx)) / mag;
    v(idx) = mag;
  }
}

}  // namespace

DominantEigenpair dominant_generalized_eigenpair(const Eigen::MatrixXcd& a,
                                                 const Eigen::MatrixXcd& b,
                                                 const EigenOptions& options) {
  const auto n = a.rows();
  if (a.cols() != n || b.rows() != n || b.cols() != n || n == 0) {
    throw EigenFailure("dominant_generalized_eigenpair: shape mismatch");
  }
  const Eigen::LLT<Eigen::MatrixXcd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw EigenFailure("dominant_generalized_eigenpair: left matrix not positive definite");
  }

  DominantEigenpair out;

  // Start from the column of B with the largest diagonal entry; for rank-1 B
  // this already spans the dominant direction.
  Eigen::Index start = 0;
  b.diagonal().real().maxCoeff(&start);
  Eigen::VectorXcd x = b.col(start);
  if (!(x.norm() > 0)) x = Eigen::VectorXcd::Ones(n);
  x.normalize();
  fix_phase(x);

  // Steps shrink geometrically at the ratio of the two leading eigenvalues.
  // Once that rate is measurable, give up early if it cannot reach the
  // tolerance inside the budget.
  constexpr int kRateWindow = 16;
  std::vector<double> steps;
  bool converged = false;
  for (int it = 1; it <= options.max_iterations; ++it) {
    Eigen::VectorXcd y = llt.solve(b * x);
    const double norm = y.norm();
    if (!(norm > 0) || !std::isfinite(norm)) break;
    y /= norm;
    fix_phase(y);
    const double step = (y - x).norm();
    x = std::move(y);
    out.iterations = it;
    if (step < options.tolerance) {
      converged = true;
      break;
    }
    steps.push_back(step);
    if (it >= 4 * kRateWindow && it % kRateWindow == 0) {
      const double earlier = steps[steps.size() - 1 - kRateWindow];
      const double rate = std::pow(step / earlier, 1.0 / kRateWindow);
      if (rate >= 1.0) break;
      const double needed = std::log(options.tolerance / step) / std::log(rate);
      if (it + needed > options.max_iterations) break;
    }
  }

  if (!converged) {
    if (!options.dense_fallback) {
      throw EigenFailure("power iteration did not converge within " +
                         std::to_string(options.max_iterations) + " iterations");
    }
    const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
        b, a, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success) {
      throw EigenFailure("dense generalized eigensolver failed");
    }
    x = solver.eigenvectors().col(n - 1).normalized();
    fix_phase(x);
    out.used_fallback = true;
  }

  // Rayleigh quotient of A^-1 B; real for this Hermitian pencil.
  const cd rayleigh = x.dot(llt.solve(b * x));
  if (std::abs(rayleigh.imag()) > 1e-8 * std::max(std::abs(rayleigh), 1e-300)) {
    throw EigenFailure("dominant eigenvalue has imaginary residue " +
                       std::to_string(rayleigh.imag()));
  }
  out.vector = std::move(x);
  out.value = rayleigh.real();
  return out;
}

std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> rslnr_user_system(
    std::span<const SteeringAutocorrelation> autocorrelations, int k, const ScenarioConfig& cfg) {
  const int n_ant = cfg.num_antennas;
  const auto k_users = static_cast<int>(autocorrelations.size());
  Eigen::MatrixXcd interference = Eigen::MatrixXcd::Identity(n_ant, n_ant) *
                                  (cfg.noise_power * k_users / cfg.transmit_power);
  for (int l = 0; l < k_users; ++l) {
    if (l == k) continue;
    const auto& ac = autocorrelations[static_cast<std::size_t>(l)];
    interference += ac.inverse_path_loss * ac.r;
  }
  const auto& own = autocorrelations[static_cast<std::size_t>(k)];
  return {std::move(interference), own.inverse_path_loss * own.r};
}

PrecodingMatrix rslnr_precoder(std::span<const UserEstimate> estimates, double error_bound,
                               const ScenarioConfig& cfg, const EigenOptions& options) {
  const auto k_users = static_cast<int>(estimates.size());
  if (k_users < 1) throw Error("rslnr_precoder: no users");

  std::vector<SteeringAutocorrelation> autocorrelations;
  autocorrelations.reserve(estimates.size());
  for (const auto& e : estimates) {
    if (!(e.path_loss > 0)) throw Error("rslnr_precoder: path loss must be positive");
    auto ac = steering_autocorrelation(e.space_angle, error_bound, cfg);
    ac.inverse_path_loss = 1.0 / e.path_loss;
    autocorrelations.push_back(std::move(ac));
  }

  const double column_scale = std::sqrt(cfg.transmit_power / k_users);
  PrecodingMatrix out{Eigen::MatrixXcd(cfg.num_antennas, k_users), cfg.transmit_power};
  for (int k = 0; k < k_users; ++k) {
    const auto [a, b] = rslnr_user_system(autocorrelations, k, cfg);
    out.w.col(k) = column_scale * dominant_generalized_eigenpair(a, b, options).vector;
  }
  return out;
}

std::vector<UserEstimate> user_estimates(const ChannelRealization& realization) {
  std::vector<UserEstimate> out;
  out.reserve(realization.users.size());
  for (std::size_t k = 0; k < realization.users.size(); ++k) {
    out.push_back({realization.estimated_space_angle(static_cast<int>(k)),
                   realization.users[k].path_loss});
  }
  return out;
}

}  // namespace leosat
