#include "leosat/precoder_mmse.hpp"

#include <cmath>

#include "leosat/errors.hpp"

namespace leosat {

PrecodingMatrix mmse_precoder(const Eigen::MatrixXcd& estimated_channel, double transmit_power,
                              double noise_power) {
  const auto k_users = estimated_channel.rows();
  const auto n_ant = estimated_channel.cols();
  if (k_users < 1 || n_ant < 1) throw Error("mmse_precoder: empty channel");
  if (!(transmit_power > 0) || !(noise_power > 0)) {
    throw Error("mmse_precoder: transmit and noise power must be positive");
  }

  const Eigen::MatrixXcd h_adj = estimated_channel.adjoint();
  Eigen::MatrixXcd gram = h_adj * estimated_channel;
  gram.diagonal().array() += noise_power * static_cast<double>(k_users) / transmit_power;

  const Eigen::LLT<Eigen::MatrixXcd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw SingularSystem("mmse_precoder: regularized Gram matrix is not positive definite");
  }
  Eigen::MatrixXcd w = llt.solve(h_adj);
  if (!w.allFinite()) throw SingularSystem("mmse_precoder: non-finite solution");

  const double power = w.squaredNorm();
  if (!(power > 0)) throw NormalizationOfZero("mmse_precoder: zero channel estimate");
  w *= std::sqrt(transmit_power / power);
  return {std::move(w), transmit_power};
}

}  // namespace leosat
