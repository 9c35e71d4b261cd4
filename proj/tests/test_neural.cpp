#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "leosat/adam.hpp"
#include "leosat/binary_io.hpp"
#include "leosat/checkpoint.hpp"
#include "leosat/errors.hpp"
#include "leosat/neural.hpp"
#include "test_util.hpp"

using namespace leosat;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = standard_normal(rng);
  }
  return m;
}

MlpOptions small(bool bn, std::vector<int> hidden = {5, 4}) {
  MlpOptions o;
  o.input_size = 3;
  o.hidden = std::move(hidden);
  o.output_size = 2;
  o.batch_norm = bn;
  return o;
}

// Randomises every parameter (including gamma/beta) so the gradient check
// does not sit at the initial gamma = 1, beta = 0 point.
void scramble(MlpNetwork& net, Rng& rng) {
  for (Eigen::Index i = 0; i < net.parameters().size(); ++i) net.parameters()(i) = 0.5 * standard_normal(rng);
}

// Independent straight-line forward pass for a Dense-BN-LReLU stack in
// training mode, written element by element.
Eigen::MatrixXd reference_forward(const MlpNetwork& net, const Eigen::MatrixXd& x0, bool training) {
  Eigen::MatrixXd x = x0;
  const auto& o = net.options();
  const double* p = net.parameters().data();
  std::size_t bn = 0;
  for (const auto& layer : net.layers()) {
    if (layer.kind == MlpNetwork::LayerKind::dense) {
      Eigen::MatrixXd y(x.rows(), layer.out);
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (int j = 0; j < layer.out; ++j) {
          double acc = p[layer.offset + static_cast<Eigen::Index>(layer.in) * layer.out + j];
          for (int i = 0; i < layer.in; ++i) acc += x(r, i) * p[layer.offset + j * layer.in + i];
          y(r, j) = acc;
        }
      }
      x = y;
    } else if (layer.kind == MlpNetwork::LayerKind::batch_norm) {
      const auto& st = net.batch_norm_states()[bn++];
      for (int j = 0; j < layer.in; ++j) {
        double mean = 0, var = 0;
        if (training) {
          for (Eigen::Index r = 0; r < x.rows(); ++r) mean += x(r, j);
          mean /= double(x.rows());
          for (Eigen::Index r = 0; r < x.rows(); ++r) var += (x(r, j) - mean) * (x(r, j) - mean);
          var /= double(x.rows());
        } else {
          mean = st.running_mean(j);
          var = st.running_var(j);
        }
        const double gamma = p[layer.offset + j];
        const double beta = p[layer.offset + layer.in + j];
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
          x(r, j) = gamma * (x(r, j) - mean) / std::sqrt(var + o.bn_epsilon) + beta;
        }
      }
    } else {
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
          if (x(r, j) <= 0) x(r, j) *= o.leaky_slope;
        }
      }
    }
  }
  return x;
}

// Scalar loss sum(upstream .* forward(x)) in training mode without touching
// the running statistics of `net`.
double probe_loss(const MlpNetwork& net, const Eigen::VectorXd& params, const Eigen::MatrixXd& x,
                  const Eigen::MatrixXd& upstream) {
  MlpNetwork copy = net;
  copy.parameters() = params;
  return (copy.forward(x, Mode::training).array() * upstream.array()).sum();
}

}  // namespace

TEST_SUITE("neural") {
  TEST_CASE("layout: dense / batch-norm / activation chain and parameter count") {
    const MlpNetwork net(small(true));
    REQUIRE(net.layers().size() == 7);
    CHECK(net.layers()[0].kind == MlpNetwork::LayerKind::dense);
    CHECK(net.layers()[1].kind == MlpNetwork::LayerKind::batch_norm);
    CHECK(net.layers()[2].kind == MlpNetwork::LayerKind::leaky_relu);
    CHECK(net.layers()[6].out == 2);
    CHECK(net.parameters().size() == (3 * 5 + 5) + 10 + (5 * 4 + 4) + 8 + (4 * 2 + 2));
    CHECK(net.gradients().size() == net.parameters().size());
    const MlpNetwork plain(small(false));
    CHECK(plain.layers().size() == 5);
  }

  TEST_CASE("identity dense layer passes input through") {
    MlpOptions o;
    o.input_size = 3;
    o.hidden = {};
    o.output_size = 3;
    MlpNetwork net(o);
    net.dense_weight(0) = Eigen::MatrixXd::Identity(3, 3);
    Rng rng(1);
    const auto x = random_matrix(4, 3, rng);
    CHECK(net.forward(x, Mode::inference) == x);
    CHECK(net.predict(x) == x);
  }

  TEST_CASE("training batch norm standardises each feature") {
    // Identity dense layers and a unit-slope activation expose the
    // batch-norm output directly.
    MlpOptions o;
    o.input_size = 4;
    o.hidden = {4};
    o.output_size = 4;
    o.leaky_slope = 1.0;
    MlpNetwork net(o);
    net.dense_weight(0) = Eigen::MatrixXd::Identity(4, 4);
    net.dense_weight(3) = Eigen::MatrixXd::Identity(4, 4);
    Rng rng(2);
    Eigen::MatrixXd x = random_matrix(64, 4, rng) * 3.0;
    x.col(1).array() += 10.0;
    const Eigen::MatrixXd y = net.forward(x, Mode::training);
    for (int j = 0; j < 4; ++j) {
      const double mean = y.col(j).mean();
      const double var = (y.col(j).array() - mean).square().mean();
      CHECK(std::abs(mean) < 1e-6);
      CHECK(var == doctest::Approx(1).epsilon(1e-4));
    }
  }

  TEST_CASE("forward matches the straight-line reimplementation") {
    Rng rng(3);
    for (bool bn : {false, true}) {
      MlpNetwork net(small(bn), rng);
      scramble(net, rng);
      const auto x = random_matrix(6, 3, rng);
      const Eigen::MatrixXd ref = reference_forward(net, x, true);
      CHECK((net.forward(x, Mode::training) - ref).cwiseAbs().maxCoeff() < 1e-12);
      const Eigen::MatrixXd ref_inf = reference_forward(net, x, false);
      CHECK((net.forward(x, Mode::inference) - ref_inf).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("parameter gradients match central differences") {
    Rng rng(4);
    for (bool bn : {false, true}) {
      for (const auto& hidden : {std::vector<int>{6}, std::vector<int>{5, 4}, std::vector<int>{4, 3, 5}}) {
        MlpNetwork net(small(bn, hidden), rng);
        scramble(net, rng);
        const auto x = random_matrix(7, 3, rng);
        const auto upstream = random_matrix(7, 2, rng);
        net.forward(x, Mode::training);
        const Eigen::MatrixXd dx = net.backward(upstream);
        const Eigen::VectorXd analytic = net.gradients();
        const Eigen::VectorXd numeric = testutil::numeric_gradient(
            [&](const Eigen::VectorXd& p) { return probe_loss(net, p, x, upstream); }, net.parameters());
        CHECK(testutil::max_rel_err(analytic, numeric, 1e-5) < 1e-4);

        // Input gradient.
        Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
        const Eigen::VectorXd num_dx = testutil::numeric_gradient(
            [&](const Eigen::VectorXd& v) {
              const Eigen::MatrixXd xm = Eigen::Map<const Eigen::MatrixXd>(v.data(), x.rows(), x.cols());
              return probe_loss(net, net.parameters(), xm, upstream);
            },
            flat);
        const Eigen::VectorXd ana_dx = Eigen::Map<const Eigen::VectorXd>(dx.data(), dx.size());
        CHECK(testutil::max_rel_err(ana_dx, num_dx, 1e-5) < 1e-4);
      }
    }
  }

  TEST_CASE("inference-mode backward matches central differences") {
    Rng rng(5);
    MlpNetwork net(small(true), rng);
    scramble(net, rng);
    for (auto& s : net.batch_norm_states()) {
      s.running_mean = Eigen::VectorXd::Random(s.running_mean.size());
      s.running_var = Eigen::VectorXd::Random(s.running_var.size()).cwiseAbs().array() + 0.5;
    }
    const auto x = random_matrix(3, 3, rng);
    const auto upstream = random_matrix(3, 2, rng);
    net.forward(x, Mode::inference);
    net.backward(upstream);
    const Eigen::VectorXd numeric = testutil::numeric_gradient(
        [&](const Eigen::VectorXd& p) {
          MlpNetwork copy = net;
          copy.parameters() = p;
          return (copy.predict(x).array() * upstream.array()).sum();
        },
        net.parameters());
    CHECK(testutil::max_rel_err(net.gradients(), numeric, 1e-5) < 1e-4);
  }

  TEST_CASE("linear network under squared loss has the least-squares gradient") {
    MlpOptions o;
    o.input_size = 4;
    o.hidden = {};
    o.output_size = 1;
    Rng rng(6);
    MlpNetwork net(o, rng);
    const auto x = random_matrix(20, 4, rng);
    const Eigen::VectorXd y = random_matrix(20, 1, rng);
    const Eigen::VectorXd pred = net.forward(x, Mode::training);
    const Eigen::VectorXd residual = pred - y;
    net.backward(2.0 * residual / 20.0);
    const Eigen::VectorXd gw = 2.0 / 20.0 * x.transpose() * residual;
    const double gb = 2.0 / 20.0 * residual.sum();
    CHECK((net.gradients().head(4) - gw).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(net.gradients()(4) - gb) < 1e-10);
  }

  TEST_CASE("zero upstream gives zero gradients") {
    Rng rng(7);
    MlpNetwork net(small(true), rng);
    const auto x = random_matrix(5, 3, rng);
    net.forward(x, Mode::training);
    net.backward(Eigen::MatrixXd::Zero(5, 2));
    CHECK(net.gradients().cwiseAbs().maxCoeff() == 0);
  }

  TEST_CASE("call-order and batch-size errors") {
    Rng rng(8);
    MlpNetwork net(small(true), rng);
    CHECK_THROWS_AS(net.backward(Eigen::MatrixXd::Zero(2, 2)), CallOrder);
    CHECK_THROWS_AS(net.forward(Eigen::MatrixXd::Zero(1, 3), Mode::training), BatchTooSmall);
    CHECK_NOTHROW(net.forward(Eigen::MatrixXd::Zero(1, 3), Mode::inference));
    net.forward(Eigen::MatrixXd::Zero(4, 3), Mode::training);
    CHECK_THROWS_AS(net.backward(Eigen::MatrixXd::Zero(3, 2)), CallOrder);
    CHECK_THROWS_AS(net.forward(Eigen::MatrixXd::Zero(4, 2), Mode::training), Error);
  }

  TEST_CASE("inference is bit-reproducible and leaves running statistics alone") {
    Rng rng(9);
    MlpNetwork net(small(true), rng);
    const auto x = random_matrix(5, 3, rng);
    const auto before = net.batch_norm_states()[0].running_mean;
    const Eigen::MatrixXd a = net.forward(x, Mode::inference);
    const Eigen::MatrixXd b = net.predict(x);
    CHECK(a == b);
    CHECK(net.batch_norm_states()[0].running_mean == before);
  }

  TEST_CASE("running statistics converge to the batch statistics") {
    MlpOptions o;
    o.input_size = 2;
    o.hidden = {2};
    o.output_size = 1;
    MlpNetwork net(o);
    net.dense_weight(0) = Eigen::MatrixXd::Identity(2, 2);
    Rng rng(10);
    for (int i = 0; i < 10'000; ++i) {
      Eigen::MatrixXd x = random_matrix(32, 2, rng);
      x.col(0) = x.col(0) * 2.0 + Eigen::VectorXd::Constant(32, 3.0);
      x.col(1) = x.col(1) * 0.5 - Eigen::VectorXd::Constant(32, 1.0);
      net.forward(x, Mode::training);
    }
    const auto& s = net.batch_norm_states()[0];
    CHECK(testutil::rel_err(s.running_mean(0), 3.0) < 0.05);
    CHECK(testutil::rel_err(s.running_mean(1), -1.0) < 0.05);
    CHECK(testutil::rel_err(s.running_var(0), 4.0) < 0.05);
    CHECK(testutil::rel_err(s.running_var(1), 0.25) < 0.05);
  }

  TEST_CASE("network and optimizer state round-trip bit-exactly") {
    Rng rng(11);
    MlpNetwork net(small(true), rng);
    net.forward(random_matrix(6, 3, rng), Mode::training);
    Adam opt(net.parameters().size(), {1e-3, 0.01, 100});
    net.gradients() = Eigen::VectorXd::Random(net.parameters().size());
    opt.step(net.parameters(), net.gradients());
    std::stringstream buffer(std::ios::in | std::ios::out | std::ios::binary);
    BinaryWriter w(buffer);
    write_network(w, net);
    write_adam(w, opt);
    BinaryReader r(buffer);
    const MlpNetwork back = read_network(r);
    const Adam opt_back = read_adam(r);
    CHECK(back.parameters() == net.parameters());
    CHECK(back.options() == net.options());
    CHECK(back.batch_norm_states()[1].running_var == net.batch_norm_states()[1].running_var);
    CHECK(opt_back.first_moment() == opt.first_moment());
    CHECK(opt_back.second_moment() == opt.second_moment());
    CHECK(opt_back.step_count() == opt.step_count());
    CHECK(opt_back.schedule() == opt.schedule());
  }
}

TEST_SUITE("adam") {
  TEST_CASE("cosine schedule endpoints and midpoint") {
    const CosineDecay s{1e-3, 0.01, 100};
    CHECK(s.at(0) == doctest::Approx(1e-3).epsilon(1e-15));
    CHECK(s.at(50) == doctest::Approx(1e-5 + (1e-3 - 1e-5) * 0.5).epsilon(1e-12));
    CHECK(s.at(100) == doctest::Approx(1e-5).epsilon(1e-12));
    CHECK(s.at(1000) == s.at(100));
    CHECK(CosineDecay{1e-3, 0.01, 0}.at(0) == doctest::Approx(1e-5).epsilon(1e-12));
    for (int t = 1; t <= 100; ++t) CHECK(s.at(t) <= s.at(t - 1));
  }

  TEST_CASE("zero gradients leave parameters unchanged") {
    Adam opt(3, {1e-2, 0.01, 10});
    Eigen::VectorXd p(3);
    p << 1, -2, 3;
    const Eigen::VectorXd keep = p;
    for (int i = 0; i < 5; ++i) opt.step(p, Eigen::VectorXd::Zero(3));
    CHECK(p == keep);
    CHECK(opt.step_count() == 5);
  }

  TEST_CASE("first step moves by about the learning rate") {
    Adam opt(1, {1e-3, 0.01, 1000});
    Eigen::VectorXd p = Eigen::VectorXd::Constant(1, 0.5);
    opt.step(p, Eigen::VectorXd::Constant(1, 4.0));
    // m_hat = g, v_hat = g^2: step = lr g / (|g| + eps).
    CHECK(p(0) == doctest::Approx(0.5 - 1e-3 * 4.0 / (4.0 + 1e-8)).epsilon(1e-14));
  }

  TEST_CASE("matches a scalar reference over many steps") {
    const CosineDecay sched{5e-2, 0.01, 40};
    Adam opt(1, sched);
    Eigen::VectorXd p = Eigen::VectorXd::Constant(1, 1.0);
    double x = 1.0, m = 0, v = 0;
    for (int t = 1; t <= 60; ++t) {
      const double g = 2 * x - std::sin(t);
      m = 0.9 * m + 0.1 * g;
      v = 0.999 * v + 0.001 * g * g;
      const double mh = m / (1 - std::pow(0.9, t));
      const double vh = v / (1 - std::pow(0.999, t));
      x -= sched.at(t - 1) * mh / (std::sqrt(vh) + 1e-8);
      opt.step(p, Eigen::VectorXd::Constant(1, 2 * p(0) - std::sin(t)));
      CHECK(p(0) == doctest::Approx(x).epsilon(1e-12));
    }
  }

  TEST_CASE("non-finite gradients abort the update") {
    Adam opt(2, {1e-3, 0.01, 10});
    Eigen::VectorXd p = Eigen::VectorXd::Ones(2);
    Eigen::VectorXd g(2);
    g << 1.0, std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(opt.step(p, g), NonFiniteGradient);
    CHECK(p == Eigen::VectorXd::Ones(2));
    CHECK(opt.step_count() == 0);
    g << std::numeric_limits<double>::infinity(), 0.0;
    CHECK_THROWS_AS(opt.step(p, g), NonFiniteGradient);
  }
}
