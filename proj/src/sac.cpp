#include "leosat/sac.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "leosat/channel.hpp"
#include "leosat/errors.hpp"

namespace leosat {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))
constexpr double kScaleFloor = 1e-12;

}  // namespace

std::string to_string(InputTransform t) {
  return t == InputTransform::magnitude_phase ? "magnitude-phase" : "real-imag";
}

InputTransform parse_input_transform(std::string_view s) {
  if (s == "magnitude-phase") return InputTransform::magnitude_phase;
  if (s == "real-imag") return InputTransform::real_imag;
  throw ConfigError("unknown input transform '" + std::string(s) + "'");
}

Eigen::VectorXd raw_state(const Eigen::MatrixXcd& h, InputTransform transform) {
  Eigen::VectorXd out(2 * h.size());
  Eigen::Index i = 0;
  for (Eigen::Index k = 0; k < h.rows(); ++k) {
    for (Eigen::Index n = 0; n < h.cols(); ++n) {
      const cd v = h(k, n);
      if (transform == InputTransform::magnitude_phase) {
        out(i++) = std::abs(v);
        out(i++) = std::arg(v);
      } else {
        out(i++) = v.real();
        out(i++) = v.imag();
      }
    }
  }
  return out;
}

Eigen::VectorXd state_from_estimate(const Eigen::MatrixXcd& h, const StandardizationStats& stats,
                                    InputTransform transform) {
  if (!stats.calibrated()) throw NotCalibrated("standardization statistics are not calibrated");
  if (stats.mean.size() != 2 * h.size()) {
    throw NotCalibrated("standardization statistics have length " +
                        std::to_string(stats.mean.size()) + ", state needs " +
                        std::to_string(2 * h.size()));
  }
  return (raw_state(h, transform) - stats.mean).cwiseQuotient(stats.scale);
}

StandardizationStats standardization_from_samples(const Eigen::MatrixXd& samples) {
  if (samples.rows() < 2) throw Error("standardization needs at least 2 samples");
  StandardizationStats stats;
  stats.mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centered = samples.rowwise() - stats.mean.transpose();
  stats.scale = (centered.array().square().colwise().mean()).sqrt().transpose();
  stats.scale = stats.scale.cwiseMax(kScaleFloor);
  stats.sample_count = static_cast<int>(samples.rows());
  return stats;
}

StandardizationStats calibrate_standardization(const ScenarioConfig& cfg, Rng& rng, int n_samples,
                                               InputTransform transform) {
  if (n_samples < 2) throw Error("calibrate_standardization: n_samples must be >= 2");
  const Eigen::Index dim = 2 * cfg.num_users * cfg.num_antennas;
  Eigen::MatrixXd samples(n_samples, dim);
  for (int i = 0; i < n_samples; ++i) {
    const auto r = sample_realization(cfg, rng);
    samples.row(i) = raw_state(r.estimated_channel, transform).transpose();
  }
  return standardization_from_samples(samples);
}

PolicyOutput split_policy_output(const Eigen::RowVectorXd& raw) {
  if (raw.size() % 2 != 0) throw Error("policy output width must be even");
  const Eigen::Index n = raw.size() / 2;
  PolicyOutput p{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    p.means(i) = raw(2 * i);
    p.log_scales(i) = std::clamp(raw(2 * i + 1), kMinLogScale, kMaxLogScale);
  }
  return p;
}

double gaussian_log_prob(const Eigen::VectorXd& a, const PolicyOutput& policy) {
  double lp = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double z = (a(i) - policy.means(i)) * std::exp(-policy.log_scales(i));
    lp += -0.5 * z * z - policy.log_scales(i) - kLogSqrt2Pi;
  }
  return lp;
}

ActionVector sample_action(const PolicyOutput& policy, Rng& rng, ActionMode mode) {
  ActionVector out;
  out.a = policy.means;
  if (mode == ActionMode::stochastic) {
    for (Eigen::Index i = 0; i < out.a.size(); ++i) {
      out.a(i) += std::exp(policy.log_scales(i)) * standard_normal(rng);
    }
  }
  out.log_prob = gaussian_log_prob(out.a, policy);
  return out;
}

ActionVector sample_action(const MlpNetwork& actor, const Eigen::VectorXd& state, Rng& rng,
                           ActionMode mode) {
  const Eigen::MatrixXd raw = actor.predict(state.transpose());
  if (raw.cols() != 2 * state.size()) {
    throw Error("actor output width " + std::to_string(raw.cols()) + " does not equal 2x state width");
  }
  return sample_action(split_policy_output(raw.row(0)), rng, mode);
}

PrecodingMatrix precoder_from_action(const Eigen::VectorXd& action, double transmit_power,
                                     int num_users, int num_antennas) {
  const Eigen::Index entries = static_cast<Eigen::Index>(num_users) * num_antennas;
  if (action.size() != 2 * entries) {
    throw Error("precoder_from_action: action length " + std::to_string(action.size()) +
                ", expected " + std::to_string(2 * entries));
  }
  const double norm = action.norm();
  if (!(norm > 0)) throw ZeroAction("precoder_from_action: action is all zeros");
  if (!std::isfinite(norm)) throw Error("precoder_from_action: non-finite action");
  PrecodingMatrix out{Eigen::MatrixXcd(num_antennas, num_users), transmit_power};
  const double scale = std::sqrt(transmit_power) / norm;
  for (int n = 0; n < num_antennas; ++n) {
    for (int k = 0; k < num_users; ++k) {
      const Eigen::Index j = static_cast<Eigen::Index>(n) * num_users + k;
      out.w(n, k) = scale * cd(action(2 * j), action(2 * j + 1));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd ExperienceBatch::critic_input() const {
  Eigen::MatrixXd x(states.rows(), states.cols() + actions.cols());
  x << states, actions;
  return x;
}

ExperienceBuffer::ExperienceBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error("ExperienceBuffer: capacity must be positive");
}

void ExperienceBuffer::push(Experience e) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(e));
    return;
  }
  items_[cursor_] = std::move(e);
  cursor_ = (cursor_ + 1) % capacity_;
}

const Experience& ExperienceBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw Error("ExperienceBuffer::at: index out of range");
  return items_[(cursor_ + i) % items_.size()];
}

ExperienceBatch ExperienceBuffer::gather(std::span<const std::size_t> indices) const {
  if (items_.empty()) throw Error("ExperienceBuffer: empty");
  const auto rows = static_cast<Eigen::Index>(indices.size());
  const auto& first = items_.front();
  ExperienceBatch batch{Eigen::MatrixXd(rows, first.state.size()),
                        Eigen::MatrixXd(rows, first.action.size()), Eigen::VectorXd(rows)};
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& e = items_.at(indices[static_cast<std::size_t>(r)]);
    batch.states.row(r) = e.state.transpose();
    batch.actions.row(r) = e.action.transpose();
    batch.rewards(r) = e.reward;
  }
  return batch;
}

ExperienceBatch ExperienceBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (items_.empty()) throw Error("ExperienceBuffer: cannot sample from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = pick(rng);
  return gather(idx);
}

// ---------------------------------------------------------------------------

double critic_loss(MlpNetwork& critic, const ExperienceBatch& batch, double l2_scale) {
  if (batch.size() == 0) throw Error("critic_loss: empty batch");
  const Eigen::MatrixXd q = critic.forward(batch.critic_input(), Mode::training);
  const Eigen::VectorXd residual = q.col(0) - batch.rewards;
  const double n = static_cast<double>(batch.size());
  const Eigen::VectorXd& theta = critic.parameters();
  const double loss = residual.squaredNorm() / n + l2_scale * theta.squaredNorm();
  critic.backward((2.0 / n) * residual);
  critic.gradients() += 2.0 * l2_scale * theta;
  return loss;
}

std::vector<double> critic_losses(std::span<MlpNetwork> critics, const ExperienceBatch& batch,
                                  double l2_scale) {
  std::vector<double> out;
  out.reserve(critics.size());
  for (auto& c : critics) out.push_back(critic_loss(c, batch, l2_scale));
  return out;
}

ActorLossTerms actor_loss(MlpNetwork& actor, std::span<MlpNetwork> critics,
                          const Eigen::MatrixXd& states, const Eigen::MatrixXd& noise,
                          double log_alpha, double l2_scale) {
  if (critics.empty()) throw Error("actor_loss: at least one critic is required");
  const Eigen::Index rows = states.rows();
  const Eigen::Index dim = states.cols();
  if (noise.rows() != rows || noise.cols() != dim) throw Error("actor_loss: noise shape mismatch");

  const Eigen::MatrixXd raw = actor.forward(states, Mode::training);
  if (raw.cols() != 2 * dim) throw Error("actor_loss: actor output width must be 2x state width");

  Eigen::MatrixXd means(rows, dim), log_scales(rows, dim);
  Eigen::MatrixXd scale_active(rows, dim);  // 1 where the clamp is inactive
  for (Eigen::Index j = 0; j < dim; ++j) {
    means.col(j) = raw.col(2 * j);
    for (Eigen::Index b = 0; b < rows; ++b) {
      const double ls = raw(b, 2 * j + 1);
      log_scales(b, j) = std::clamp(ls, kMinLogScale, kMaxLogScale);
      scale_active(b, j) = (ls > kMinLogScale && ls < kMaxLogScale) ? 1.0 : 0.0;
    }
  }
  const Eigen::MatrixXd scales = log_scales.array().exp();
  const Eigen::MatrixXd actions = means + scales.cwiseProduct(noise);

  Eigen::MatrixXd critic_in(rows, 2 * dim);
  critic_in << states, actions;

  // Per tuple keep the smallest estimate and the gradient of that critic.
  Eigen::VectorXd q_min = Eigen::VectorXd::Constant(rows, std::numeric_limits<double>::infinity());
  Eigen::MatrixXd dq_min(rows, dim);
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(rows, 1);
  for (auto& critic : critics) {
    const Eigen::MatrixXd q = critic.forward(critic_in, Mode::inference);
    const Eigen::MatrixXd dq = critic.backward(ones);
    for (Eigen::Index b = 0; b < rows; ++b) {
      if (q(b, 0) < q_min(b)) {
        q_min(b) = q(b, 0);
        dq_min.row(b) = dq.row(b).tail(dim);
      }
    }
  }

  const double n = static_cast<double>(rows);
  const double alpha = std::exp(log_alpha);
  const Eigen::VectorXd log_probs =
      (-log_scales.rowwise().sum().array() - 0.5 * noise.rowwise().squaredNorm().array() -
       static_cast<double>(dim) * kLogSqrt2Pi)
          .matrix();

  ActorLossTerms terms;
  terms.q_term = -q_min.sum() / n;
  terms.mean_log_prob = log_probs.mean();
  terms.entropy_term = alpha * terms.mean_log_prob;
  const Eigen::VectorXd& theta = actor.parameters();
  const double theta_norm = theta.norm();
  terms.l2_term = l2_scale * theta_norm;
  terms.loss = terms.q_term + terms.entropy_term + terms.l2_term;
  terms.actions = actions;

  const Eigen::MatrixXd d_actions = -dq_min / n;
  Eigen::MatrixXd upstream(rows, 2 * dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    upstream.col(2 * j) = d_actions.col(j);
    upstream.col(2 * j + 1) =
        ((d_actions.col(j).array() * scales.col(j).array() * noise.col(j).array() - alpha / n) *
         scale_active.col(j).array())
            .matrix();
  }
  actor.backward(upstream);
  if (l2_scale != 0.0 && theta_norm > 0) actor.gradients() += (l2_scale / theta_norm) * theta;
  return terms;
}

ActorLossTerms actor_loss(MlpNetwork& actor, std::span<MlpNetwork> critics,
                          const Eigen::MatrixXd& states, Rng& rng, double log_alpha,
                          double l2_scale) {
  Eigen::MatrixXd noise(states.rows(), states.cols());
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = standard_normal(rng);
  return actor_loss(actor, critics, states, noise, log_alpha, l2_scale);
}

double update_temperature(double log_alpha, double mean_log_prob, double target_entropy, double lr) {
  const double grad = -std::exp(log_alpha) * (mean_log_prob + target_entropy);
  return log_alpha - lr * grad;
}

}  // namespace leosat
