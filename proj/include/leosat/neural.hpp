#pragma once

#include <Eigen/Dense>
#include <vector>

#include "leosat/random.hpp"

namespace leosat {

enum class Mode { training, inference };

/// Architecture of a dense / batch-norm stack.
///
/// Each hidden width contributes Dense -> BatchNorm (optional) -> LeakyReLU;
/// a final Dense layer maps to `output_size` with no activation.
struct MlpOptions {
  int input_size = 1;
  std::vector<int> hidden = {512, 512, 512, 512};
  int output_size = 1;
  bool batch_norm = true;
  double leaky_slope = 0.01;
  double bn_momentum = 0.99;
  double bn_epsilon = 1e-5;
  // Multiplies the initial weights of the output layer.
  double output_init_scale = 1.0;

  bool operator==(const MlpOptions&) const = default;
};

struct BatchNormState {
  Eigen::VectorXd running_mean;
  Eigen::VectorXd running_var;
};

/// Fully connected network with all trainable parameters in one flat vector.
///
/// Dense weights are stored column-major as (in x out) followed by the bias;
/// batch-norm layers own (gamma, beta). `gradients()` mirrors the parameter
/// layout. Forward/backward are single-writer; a const copy can be shared for
/// read-only inference.
class MlpNetwork {
 public:
  enum class LayerKind { dense, batch_norm, leaky_relu };

  struct Layer {
    LayerKind kind;
    int in = 0;
    int out = 0;
    Eigen::Index offset = 0;  // into the parameter vector (dense / batch_norm)
    int bn_index = -1;        // into batch_norm_states()
  };

  MlpNetwork() = default;
  /// Layout only: weights zero, gamma one, running statistics (0, 1).
  explicit MlpNetwork(MlpOptions options);
  /// Uniform He initialisation of dense weights; biases zero.
  MlpNetwork(MlpOptions options, Rng& rng);

  /// Rows are samples. Training mode normalises with batch statistics, needs
  /// at least two rows and updates the running statistics; inference mode
  /// uses running statistics only.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& batch, Mode mode);

  /// Back-propagates dLoss/dOutput of the last forward call. Overwrites
  /// gradients() and returns dLoss/dInput. Throws CallOrder without a
  /// matching forward.
  Eigen::MatrixXd backward(const Eigen::MatrixXd& upstream);

  /// Inference forward without touching caches.
  Eigen::MatrixXd predict(const Eigen::MatrixXd& batch) const;

  const MlpOptions& options() const { return options_; }
  const std::vector<Layer>& layers() const { return layers_; }
  int input_size() const { return options_.input_size; }
  int output_size() const { return options_.output_size; }

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }
  Eigen::VectorXd& gradients() { return grads_; }
  const Eigen::VectorXd& gradients() const { return grads_; }

  std::vector<BatchNormState>& batch_norm_states() { return bn_states_; }
  const std::vector<BatchNormState>& batch_norm_states() const { return bn_states_; }

  Eigen::Map<Eigen::MatrixXd> dense_weight(std::size_t layer);
  Eigen::Map<Eigen::VectorXd> dense_bias(std::size_t layer);

 private:
  struct Cache {
    Eigen::MatrixXd input;     // dense / leaky_relu
    Eigen::MatrixXd xhat;      // batch_norm
    Eigen::RowVectorXd inv_std;
  };

  Eigen::MatrixXd run(const Eigen::MatrixXd& batch, Mode mode, bool record);

  MlpOptions options_;
  std::vector<Layer> layers_;
  Eigen::VectorXd params_;
  Eigen::VectorXd grads_;
  std::vector<BatchNormState> bn_states_;

  std::vector<Cache> cache_;
  Mode cached_mode_ = Mode::inference;
  Eigen::Index cached_rows_ = 0;
  bool has_cache_ = false;
};

}  // namespace leosat
