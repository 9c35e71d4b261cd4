#pragma once

#include <Eigen/Dense>

#include "leosat/metrics.hpp"

namespace leosat {

/// Regularized channel inversion W' = (H^H H + noise K/P I)^-1 H^H scaled to
/// total power exactly P.
///
/// Throws SingularSystem if the regularized Gram matrix fails to factor and
/// NormalizationOfZero if W' vanishes (zero channel estimate).
PrecodingMatrix mmse_precoder(const Eigen::MatrixXcd& estimated_channel, double transmit_power,
                              double noise_power);

}  // namespace leosat
