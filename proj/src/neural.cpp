#include "leosat/neural.hpp"

#include <cmath>

#include "leosat/errors.hpp"

namespace leosat {

MlpNetwork::MlpNetwork(MlpOptions options) : options_(std::move(options)) {
  if (options_.input_size < 1 || options_.output_size < 1) {
    throw Error("MlpNetwork: input and output sizes must be positive");
  }
  Eigen::Index offset = 0;
  int width = options_.input_size;
  auto add_dense = [&](int out) {
    layers_.push_back({LayerKind::dense, width, out, offset, -1});
    offset += static_cast<Eigen::Index>(width) * out + out;
    width = out;
  };
  for (int h : options_.hidden) {
    if (h < 1) throw Error("MlpNetwork: hidden widths must be positive");
    add_dense(h);
    if (options_.batch_norm) {
      layers_.push_back({LayerKind::batch_norm, h, h, offset, static_cast<int>(bn_states_.size())});
      offset += 2 * h;
      bn_states_.push_back({Eigen::VectorXd::Zero(h), Eigen::VectorXd::Ones(h)});
    }
    layers_.push_back({LayerKind::leaky_relu, h, h, 0, -1});
  }
  add_dense(options_.output_size);

  params_ = Eigen::VectorXd::Zero(offset);
  grads_ = Eigen::VectorXd::Zero(offset);
  for (const auto& layer : layers_) {
    if (layer.kind == LayerKind::batch_norm) params_.segment(layer.offset, layer.in).setOnes();
  }
}

MlpNetwork::MlpNetwork(MlpOptions options, Rng& rng) : MlpNetwork(std::move(options)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    if (layer.kind != LayerKind::dense) continue;
    double limit = std::sqrt(6.0 / layer.in);
    if (i + 1 == layers_.size()) limit *= options_.output_init_scale;
    auto w = dense_weight(i);
    for (Eigen::Index j = 0; j < w.size(); ++j) w.data()[j] = uniform(rng, -limit, limit);
  }
}

Eigen::Map<Eigen::MatrixXd> MlpNetwork::dense_weight(std::size_t layer) {
  const auto& l = layers_.at(layer);
  if (l.kind != LayerKind::dense) throw Error("dense_weight: layer is not dense");
  return {params_.data() + l.offset, l.in, l.out};
}

Eigen::Map<Eigen::VectorXd> MlpNetwork::dense_bias(std::size_t layer) {
  const auto& l = layers_.at(layer);
  if (l.kind != LayerKind::dense) throw Error("dense_bias: layer is not dense");
  return {params_.data() + l.offset + static_cast<Eigen::Index>(l.in) * l.out, l.out};
}

Eigen::MatrixXd MlpNetwork::forward(const Eigen::MatrixXd& batch, Mode mode) {
  return run(batch, mode, true);
}

Eigen::MatrixXd MlpNetwork::predict(const Eigen::MatrixXd& batch) const {
  // run() only mutates caches and running stats in training mode / when
  // recording, neither of which applies here.
  return const_cast<MlpNetwork*>(this)->run(batch, Mode::inference, false);
}

Eigen::MatrixXd MlpNetwork::run(const Eigen::MatrixXd& batch, Mode mode, bool record) {
  if (batch.cols() != options_.input_size) {
    throw Error("MlpNetwork::forward: expected " + std::to_string(options_.input_size) +
                " input columns, got " + std::to_string(batch.cols()));
  }
  const Eigen::Index rows = batch.rows();
  if (mode == Mode::training && options_.batch_norm && rows < 2) {
    throw BatchTooSmall("training-mode forward needs a batch of at least 2 samples");
  }
  if (record) {
    cache_.assign(layers_.size(), Cache{});
    has_cache_ = false;
  }

  Eigen::MatrixXd x = batch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    switch (layer.kind) {
      case LayerKind::dense: {
        const Eigen::Map<const Eigen::MatrixXd> w(params_.data() + layer.offset, layer.in, layer.out);
        const Eigen::Map<const Eigen::RowVectorXd> b(
            params_.data() + layer.offset + static_cast<Eigen::Index>(layer.in) * layer.out, layer.out);
        Eigen::MatrixXd y = x * w;
        y.rowwise() += b;
        if (record) cache_[i].input = std::move(x);
        x = std::move(y);
        break;
      }
      case LayerKind::batch_norm: {
        const Eigen::Map<const Eigen::RowVectorXd> gamma(params_.data() + layer.offset, layer.in);
        const Eigen::Map<const Eigen::RowVectorXd> beta(params_.data() + layer.offset + layer.in,
                                                        layer.in);
        auto& state = bn_states_[static_cast<std::size_t>(layer.bn_index)];
        Eigen::RowVectorXd mean, var;
        if (mode == Mode::training) {
          mean = x.colwise().mean();
          var = (x.rowwise() - mean).array().square().colwise().mean();
          const double unbias = static_cast<double>(rows) / static_cast<double>(rows - 1);
          const double m = options_.bn_momentum;
          state.running_mean = m * state.running_mean + (1.0 - m) * mean.transpose();
          state.running_var = m * state.running_var + (1.0 - m) * unbias * var.transpose();
        } else {
          mean = state.running_mean.transpose();
          var = state.running_var.transpose();
        }
        const Eigen::RowVectorXd inv_std = (var.array() + options_.bn_epsilon).rsqrt();
        Eigen::MatrixXd xhat = (x.rowwise() - mean).array().rowwise() * inv_std.array();
        x = (xhat.array().rowwise() * gamma.array()).rowwise() + beta.array();
        if (record) {
          cache_[i].xhat = std::move(xhat);
          cache_[i].inv_std = inv_std;
        }
        break;
      }
      case LayerKind::leaky_relu: {
        const double slope = options_.leaky_slope;
        Eigen::MatrixXd y = x.unaryExpr([slope](double v) { return v > 0 ? v : slope * v; });
        if (record) cache_[i].input = std::move(x);
        x = std::move(y);
        break;
      }
    }
  }
  if (record) {
    has_cache_ = true;
    cached_mode_ = mode;
    cached_rows_ = rows;
  }
  return x;
}

Eigen::MatrixXd MlpNetwork::backward(const Eigen::MatrixXd& upstream) {
  if (!has_cache_) throw CallOrder("MlpNetwork::backward called without a matching forward");
  if (upstream.rows() != cached_rows_ || upstream.cols() != options_.output_size) {
    throw CallOrder("MlpNetwork::backward: upstream gradient shape does not match last forward");
  }
  grads_.setZero();
  Eigen::MatrixXd g = upstream;
  for (std::size_t idx = layers_.size(); idx-- > 0;) {
    const auto& layer = layers_[idx];
    const auto& cache = cache_[idx];
    switch (layer.kind) {
      case LayerKind::dense: {
        const Eigen::Map<const Eigen::MatrixXd> w(params_.data() + layer.offset, layer.in, layer.out);
        Eigen::Map<Eigen::MatrixXd> dw(grads_.data() + layer.offset, layer.in, layer.out);
        Eigen::Map<Eigen::RowVectorXd> db(
            grads_.data() + layer.offset + static_cast<Eigen::Index>(layer.in) * layer.out, layer.out);
        dw.noalias() = cache.input.transpose() * g;
        db = g.colwise().sum();
        g = g * w.transpose();
        break;
      }
      case LayerKind::batch_norm: {
        const Eigen::Map<const Eigen::RowVectorXd> gamma(params_.data() + layer.offset, layer.in);
        Eigen::Map<Eigen::RowVectorXd> dgamma(grads_.data() + layer.offset, layer.in);
        Eigen::Map<Eigen::RowVectorXd> dbeta(grads_.data() + layer.offset + layer.in, layer.in);
        dgamma = (g.array() * cache.xhat.array()).colwise().sum();
        dbeta = g.colwise().sum();
        const Eigen::MatrixXd dxhat = g.array().rowwise() * gamma.array();
        if (cached_mode_ == Mode::training) {
          const double n = static_cast<double>(cached_rows_);
          const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
          const Eigen::RowVectorXd sum_dxhat_xhat = (dxhat.array() * cache.xhat.array()).colwise().sum();
          Eigen::MatrixXd centered = (n * dxhat).rowwise() - sum_dxhat;
          centered -= (cache.xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
          g = (centered.array().rowwise() * (cache.inv_std.array() / n)).matrix();
        } else {
          g = dxhat.array().rowwise() * cache.inv_std.array();
        }
        break;
      }
      case LayerKind::leaky_relu: {
        const double slope = options_.leaky_slope;
        g = g.array() * cache.input.array().unaryExpr([slope](double v) { return v > 0 ? 1.0 : slope; });
        break;
      }
    }
  }
  return g;
}

}  // namespace leosat
