#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <vector>

#include "leosat/channel.hpp"
#include "leosat/errors.hpp"
#include "leosat/metrics.hpp"
#include "leosat/precoder_mmse.hpp"
#include "leosat/precoder_rslnr.hpp"
#include "test_util.hpp"

using namespace leosat;
using std::numbers::pi;

namespace {

Eigen::MatrixXcd random_complex(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = cd(standard_normal(rng), standard_normal(rng));
  }
  return m;
}

// Straight-line SINR: loops over users and interferers.
std::vector<double> sinr_oracle(const Eigen::MatrixXcd& h, const Eigen::MatrixXcd& w, double noise) {
  std::vector<double> out;
  for (Eigen::Index k = 0; k < h.rows(); ++k) {
    double interference = 0;
    for (Eigen::Index l = 0; l < w.cols(); ++l) {
      cd acc = 0;
      for (Eigen::Index n = 0; n < h.cols(); ++n) acc += h(k, n) * w(n, l);
      if (l == k) continue;
      interference += std::norm(acc);
    }
    cd s = 0;
    for (Eigen::Index n = 0; n < h.cols(); ++n) s += h(k, n) * w(n, k);
    out.push_back(std::norm(s) / (noise + interference));
  }
  return out;
}

std::vector<UserEstimate> estimates_at(const std::vector<double>& angles, double path_loss) {
  std::vector<UserEstimate> out;
  for (double a : angles) out.push_back({a, path_loss});
  return out;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("orthogonal two-user example") {
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Identity(2, 2);
    const PrecodingMatrix w{Eigen::MatrixXcd::Identity(2, 2) * std::sqrt(2.0 / 2.0), 2.0};
    const auto g = sinr(h, w, 1.0);
    CHECK(g(0) == doctest::Approx(1));
    CHECK(g(1) == doctest::Approx(1));
    const auto s = slnr(h, w, 1.0);
    CHECK(s(0) == doctest::Approx(1));
    CHECK(s(1) == doctest::Approx(1));
    CHECK(sum_rate(h, w, 1.0).sum_rate == doctest::Approx(2));
  }

  TEST_CASE("single user: SINR equals SLNR equals |hw|^2 / noise") {
    Rng rng(1);
    const auto h = random_complex(1, 5, rng);
    const PrecodingMatrix w{random_complex(5, 1, rng), 1.0};
    const double expected = std::norm((h * w.w)(0, 0)) / 0.3;
    CHECK(sinr(h, w, 0.3)(0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(slnr(h, w, 0.3)(0) == sinr(h, w, 0.3)(0));
  }

  TEST_CASE("zero precoder") {
    Rng rng(2);
    const auto h = random_complex(3, 4, rng);
    const PrecodingMatrix w{Eigen::MatrixXcd::Zero(4, 3), 1.0};
    CHECK(sinr(h, w, 1.0).maxCoeff() == 0);
    CHECK(sum_rate(h, w, 1.0).sum_rate == 0);
    ScenarioConfig cfg;
    cfg.num_antennas = 4;
    const std::vector<double> grid = {1.0, 1.5, 2.0};
    CHECK(beam_pattern(w, cfg, grid).maxCoeff() == 0);
  }

  TEST_CASE("SINR matches the loop oracle; sum rate is the log sum") {
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
      const auto h = random_complex(3, 6, rng);
      const PrecodingMatrix w{random_complex(6, 3, rng), 1.0};
      const auto g = sinr(h, w, 0.7);
      const auto oracle = sinr_oracle(h, w.w, 0.7);
      double r = 0;
      for (int k = 0; k < 3; ++k) {
        CHECK(g(k) == doctest::Approx(oracle[k]).epsilon(1e-12));
        r += std::log2(1 + oracle[k]);
      }
      const auto report = sum_rate(h, w, 0.7);
      CHECK(report.sum_rate == doctest::Approx(r).epsilon(1e-12));
      CHECK(report.rate.sum() == doctest::Approx(report.sum_rate).epsilon(1e-14));
    }
  }

  TEST_CASE("total interference equals total leakage") {
    Rng rng(4);
    const auto h = random_complex(4, 5, rng);
    const PrecodingMatrix w{random_complex(5, 4, rng), 1.0};
    const Eigen::MatrixXcd hw = h * w.w;
    const double noise = 0.5;
    const auto g = sinr(h, w, noise);
    const auto s = slnr(h, w, noise);
    double interference = 0, leakage = 0;
    for (int k = 0; k < 4; ++k) {
      const double signal = std::norm(hw(k, k));
      interference += signal / g(k) - noise;
      leakage += signal / s(k) - noise;
    }
    CHECK(interference == doctest::Approx(leakage).epsilon(1e-10));
  }

  TEST_CASE("sum rate grows with precoder scale and ignores column phases") {
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
      const auto h = random_complex(3, 4, rng);
      const Eigen::MatrixXcd w = random_complex(4, 3, rng);
      double previous = -1;
      for (double c : {0.1, 0.5, 1.0, 2.0, 4.0}) {
        const double r = sum_rate(h, {c * w, 1.0}, 1.0).sum_rate;
        CHECK(r > previous);
        previous = r;
      }
      Eigen::MatrixXcd rotated = w;
      for (int k = 0; k < 3; ++k) rotated.col(k) *= std::polar(1.0, uniform(rng, 0, 2 * pi));
      CHECK(sum_rate(h, {rotated, 1.0}, 1.0).sum_rate ==
            doctest::Approx(sum_rate(h, {w, 1.0}, 1.0).sum_rate).epsilon(1e-12));
    }
  }

  TEST_CASE("shape mismatch is reported") {
    const PrecodingMatrix w{Eigen::MatrixXcd::Zero(4, 2), 1.0};
    CHECK_THROWS_AS(sinr(Eigen::MatrixXcd::Zero(3, 4), w, 1.0), Error);
    CHECK_THROWS_AS(slnr(Eigen::MatrixXcd::Zero(2, 5), w, 1.0), Error);
  }

  TEST_CASE("matched beam peaks coherently and is symmetric in space angle") {
    ScenarioConfig cfg;
    const double p = cfg.transmit_power, k_users = 3;
    const double x0 = 0.12;
    const double eps0 = std::acos(x0);
    Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(cfg.num_antennas, 3);
    w.col(0) = steering_vector(x0, cfg).adjoint() / std::sqrt(double(cfg.num_antennas)) * std::sqrt(p / k_users);
    const PrecodingMatrix pm{w, p};
    const std::vector<double> at = {eps0};
    CHECK(beam_pattern(pm, cfg, at)(0, 0) ==
          doctest::Approx(std::sqrt(double(cfg.num_antennas)) * std::sqrt(p / k_users)).epsilon(1e-12));

    std::vector<double> grid;
    for (int i = 1; i <= 50; ++i) {
      const double d = 0.002 * i;
      grid.push_back(std::acos(x0 + d));
      grid.push_back(std::acos(x0 - d));
    }
    const auto g = beam_pattern(pm, cfg, grid);
    for (std::size_t i = 0; i < grid.size(); i += 2) {
      CHECK(g(0, Eigen::Index(i)) == doctest::Approx(g(0, Eigen::Index(i + 1))).epsilon(1e-10));
    }
  }

  TEST_CASE("beam pattern ignores the channel phase convention") {
    ScenarioConfig a;
    ScenarioConfig b = a;
    b.phase_mode = PhaseMode::uniform_random;
    Rng rng(6);
    const PrecodingMatrix w{random_complex(16, 3, rng), 1.0};
    const std::vector<double> grid = {1.4, 1.5, 1.6};
    CHECK(beam_pattern(w, a, grid) == beam_pattern(w, b, grid));
  }

  TEST_CASE("half-power beamwidth of a sampled triangle") {
    std::vector<double> grid, gain;
    for (int i = 0; i <= 200; ++i) {
      grid.push_back(i * 0.01);
      gain.push_back(std::max(0.0, 1.0 - std::abs(i * 0.01 - 1.0)));
    }
    CHECK(half_power_beamwidth(grid, gain) == doctest::Approx(2 * (1 - 1 / std::sqrt(2.0))).epsilon(1e-9));
  }
}

TEST_SUITE("precoder_mmse") {
  TEST_CASE("scalar channel gives a phase-aligned full-power weight") {
    const cd c(0.3, -1.7);
    Eigen::MatrixXcd h(1, 1);
    h(0, 0) = c;
    const auto w = mmse_precoder(h, 5.0, 0.1);
    CHECK(std::abs(w.w(0, 0) - std::sqrt(5.0) * std::conj(c) / std::abs(c)) < 1e-12);
  }

  TEST_CASE("zero estimate is an error") {
    CHECK_THROWS_AS(mmse_precoder(Eigen::MatrixXcd::Zero(2, 4), 1.0, 1.0), NormalizationOfZero);
  }

  TEST_CASE("orthogonal equal-norm rows give scaled conjugate columns with equal power") {
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2, 3);
    h(0, 0) = cd(0, 2);
    h(1, 2) = cd(2, 0);
    const auto w = mmse_precoder(h, 4.0, 0.5);
    CHECK(w.w.col(0).squaredNorm() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(w.w.col(1).squaredNorm() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(testutil::direction_cosine(w.w.col(0), h.row(0).adjoint()) == doctest::Approx(1).epsilon(1e-12));
    CHECK(testutil::direction_cosine(w.w.col(1), h.row(1).adjoint()) == doctest::Approx(1).epsilon(1e-12));
  }

  TEST_CASE("matches a brute-force solve, holds power, permutes with users") {
    Rng rng(7);
    for (int t = 0; t < 30; ++t) {
      const auto h = random_complex(3, 8, rng);
      const double p = 2.0, noise = 0.3;
      const auto w = mmse_precoder(h, p, noise);
      const Eigen::MatrixXcd gram = h.adjoint() * h + noise * 3 / p * Eigen::MatrixXcd::Identity(8, 8);
      Eigen::MatrixXcd raw = gram.fullPivLu().solve(h.adjoint());
      raw *= std::sqrt(p / raw.squaredNorm());
      CHECK((w.w - raw).norm() <= 1e-10 * raw.norm());
      CHECK(testutil::rel_err(w.total_power(), p) < 1e-9);

      Eigen::PermutationMatrix<Eigen::Dynamic> perm(3);
      perm.indices() << 2, 0, 1;
      const auto wp = mmse_precoder(perm * h, p, noise);
      CHECK((wp.w - w.w * perm.transpose()).norm() <= 1e-10 * w.w.norm());

      const cd phase = std::polar(1.0, 0.7);
      const auto wr = mmse_precoder(phase * h, p, noise);
      CHECK(sum_rate(h, wr, noise).sum_rate == doctest::Approx(sum_rate(h, w, noise).sum_rate).epsilon(1e-10));
    }
  }

  TEST_CASE("heavy regularisation tends to matched filtering") {
    Rng rng(8);
    for (int t = 0; t < 10; ++t) {
      const auto h = random_complex(3, 6, rng);
      const auto w = mmse_precoder(h, 1.0, 1e8);
      for (int k = 0; k < 3; ++k) {
        CHECK(testutil::direction_cosine(w.w.col(k), h.row(k).adjoint()) > 0.999);
      }
    }
  }
}

TEST_SUITE("precoder_rslnr") {
  TEST_CASE("characteristic function of the uniform error") {
    CHECK(characteristic_uniform(0, 0.05) == 1);
    CHECK(characteristic_uniform(37.2, 0) == 1);
    CHECK(std::abs(characteristic_uniform(pi / 0.1, 0.1)) < 1e-15);
    CHECK(characteristic_uniform(84.82300164692441, 0.05) == doctest::Approx(-0.21008606318771428).epsilon(1e-12));
    CHECK(characteristic_uniform(1e-12, 1.0) == doctest::Approx(1).epsilon(1e-15));
    CHECK(characteristic_uniform(-10, 0.05) == characteristic_uniform(10, 0.05));
  }

  TEST_CASE("autocorrelation invariants and reference entry") {
    ScenarioConfig cfg;
    cfg.num_antennas = 10;
    const auto ac = steering_autocorrelation(0.0, 0.05, cfg);
    CHECK(ac.r(0, 9).real() == doctest::Approx(-0.21008606318771428).epsilon(1e-12));
    CHECK(std::abs(ac.r(0, 9).imag()) < 1e-15);
    for (double phi : {-0.3, 0.0, 0.164}) {
      for (double b : {0.0, 0.02, 0.1}) {
        const auto r = steering_autocorrelation(phi, b, cfg).r;
        for (int n = 0; n < 10; ++n) {
          CHECK(r(n, n) == cd(1, 0));
          for (int m = 0; m < 10; ++m) CHECK(r(n, m) == std::conj(r(m, n)));
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
      }
    }
  }

  TEST_CASE("zero error bound gives the rank-one steering outer product") {
    ScenarioConfig cfg;
    const double phi = 0.0731;
    const auto r = steering_autocorrelation(phi, 0.0, cfg).r;
    const auto v = steering_vector(phi, cfg);
    const Eigen::MatrixXcd outer = v.adjoint() * v;
    CHECK((r - outer).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("dominant generalized eigenpair agrees with a dense solver") {
    Rng rng(9);
    for (int t = 0; t < 20; ++t) {
      const auto m = random_complex(6, 6, rng);
      const Eigen::MatrixXcd a = m * m.adjoint() + Eigen::MatrixXcd::Identity(6, 6);
      const auto q = random_complex(6, 2, rng);
      const Eigen::MatrixXcd b = q * q.adjoint();
      const auto pair = dominant_generalized_eigenpair(a, b);
      const Eigen::ComplexEigenSolver<Eigen::MatrixXcd> dense(a.inverse() * b);
      Eigen::Index best = 0;
      dense.eigenvalues().cwiseAbs().maxCoeff(&best);
      CHECK(testutil::direction_cosine(pair.vector, dense.eigenvectors().col(best)) > 1 - 1e-8);
      CHECK(pair.value == doctest::Approx(std::abs(dense.eigenvalues()(best))).epsilon(1e-8));
      Eigen::Index top = 0;
      pair.vector.cwiseAbs().maxCoeff(&top);
      CHECK(pair.vector(top).imag() == 0);
      CHECK(pair.vector(top).real() > 0);
      CHECK(pair.vector.norm() == doctest::Approx(1).epsilon(1e-12));
    }
  }

  TEST_CASE("fallback path and failure reporting") {
    Rng rng(10);
    const auto m = random_complex(5, 5, rng);
    const Eigen::MatrixXcd a = m * m.adjoint() + Eigen::MatrixXcd::Identity(5, 5);
    const auto q = random_complex(5, 5, rng);
    const Eigen::MatrixXcd b = q * q.adjoint();
    EigenOptions tight;
    tight.max_iterations = 1;
    const auto fallback = dominant_generalized_eigenpair(a, b, tight);
    CHECK(fallback.used_fallback);
    const auto full = dominant_generalized_eigenpair(a, b);
    CHECK(testutil::direction_cosine(fallback.vector, full.vector) > 1 - 1e-8);
    tight.dense_fallback = false;
    CHECK_THROWS_AS(dominant_generalized_eigenpair(a, b, tight), EigenFailure);
    CHECK_THROWS_AS(dominant_generalized_eigenpair(-a, b), EigenFailure);
    CHECK_THROWS_AS(dominant_generalized_eigenpair(a, Eigen::MatrixXcd::Zero(4, 4)), EigenFailure);
  }

  TEST_CASE("single user at zero error is a full-power matched beam") {
    ScenarioConfig cfg;
    cfg.num_users = 1;
    const double phi = -0.08;
    const auto w = rslnr_precoder(estimates_at({phi}, 2.5e13), 0.0, cfg);
    const auto v = steering_vector(phi, cfg);
    CHECK(std::abs((v * w.w)(0, 0)) == doctest::Approx(std::sqrt(cfg.num_antennas * cfg.transmit_power)).epsilon(1e-9));
  }

  TEST_CASE("every column carries P/K and the total is P") {
    ScenarioConfig cfg;
    Rng rng(11);
    for (int t = 0; t < 10; ++t) {
      cfg.error_bound = uniform(rng, 0, 0.1);
      const auto r = sample_realization(cfg, rng);
      const auto w = rslnr_precoder(user_estimates(r), cfg.error_bound, cfg);
      for (int k = 0; k < cfg.num_users; ++k) {
        CHECK(testutil::rel_err(w.w.col(k).squaredNorm(), cfg.transmit_power / cfg.num_users) < 1e-9);
      }
      CHECK(testutil::rel_err(w.total_power(), cfg.transmit_power) < 1e-9);
    }
  }

  TEST_CASE("small perfect-CSI scenario: comparable to MMSE") {
    ScenarioConfig cfg;
    cfg.num_users = 2;
    cfg.num_antennas = 4;
    Rng rng(12);
    for (int t = 0; t < 10; ++t) {
      const auto r = sample_realization(cfg, rng);
      const double rs = sum_rate(r.true_channel, rslnr_precoder(user_estimates(r), 0.0, cfg), cfg.noise_power).sum_rate;
      const double mm = sum_rate(r.true_channel, mmse_precoder(r.estimated_channel, cfg.transmit_power, cfg.noise_power),
                                 cfg.noise_power).sum_rate;
      CHECK(std::abs(rs - mm) / mm < 0.10);
    }
  }

  TEST_CASE("joint rescaling of path loss, noise and power leaves the beams unchanged") {
    ScenarioConfig cfg;
    cfg.error_bound = 0.03;
    Rng rng(13);
    const auto r = sample_realization(cfg, rng);
    const auto est = user_estimates(r);
    const auto w = rslnr_precoder(est, cfg.error_bound, cfg);

    // Multiplying P and every L_k by c scales both matrices of each user's
    // system by 1/c. Columns scale by sqrt(c) only.
    const double c = 7.5;
    ScenarioConfig scaled = cfg;
    scaled.transmit_power *= c;
    auto est2 = est;
    for (auto& e : est2) e.path_loss *= c;
    const auto w2 = rslnr_precoder(est2, cfg.error_bound, scaled);
    CHECK((w2.w / std::sqrt(c) - w.w).norm() <= 1e-9 * w.w.norm());
    const PrecodingMatrix back{w2.w / std::sqrt(c), cfg.transmit_power};
    CHECK(sum_rate(r.true_channel, back, cfg.noise_power).sum_rate ==
          doctest::Approx(sum_rate(r.true_channel, w, cfg.noise_power).sum_rate).epsilon(1e-9));
  }

  TEST_CASE("at small bounds each beam peaks at its estimated direction") {
    ScenarioConfig cfg;
    const std::vector<double> angles = {-0.16, 0.0, 0.16};
    const auto w = rslnr_precoder(estimates_at(angles, 2.5e13), 1e-4, cfg);
    std::vector<double> grid;
    const double step = 1e-4;
    for (double x = -0.3; x <= 0.3; x += step) grid.push_back(std::acos(x));
    const auto g = beam_pattern(w, cfg, grid);
    for (int k = 0; k < 3; ++k) {
      Eigen::Index peak = 0;
      g.row(k).maxCoeff(&peak);
      // Leakage suppression pulls the peak slightly; 1e-3 is about 1% of the main lobe.
      CHECK(std::abs(std::cos(grid[std::size_t(peak)]) - angles[std::size_t(k)]) <= 1e-3);
    }
  }

  TEST_CASE("single-user beam widens with the error bound") {
    ScenarioConfig cfg;
    cfg.num_users = 1;
    std::vector<double> grid_deg, grid;
    for (double d = 70; d <= 110; d += 0.002) {
      grid_deg.push_back(d);
      grid.push_back(d * pi / 180);
    }
    double previous = 0;
    for (double b : {0.0, 0.025, 0.05, 0.1}) {
      const auto w = rslnr_precoder(estimates_at({0.05}, 2.5e13), b, cfg);
      const auto g = beam_pattern(w, cfg, grid);
      Eigen::VectorXd rv = g.row(0).transpose();
      const double width = half_power_beamwidth(grid_deg, std::vector<double>(rv.data(), rv.data() + rv.size()));
      CHECK(width >= previous);
      previous = width;
    }
  }
}
