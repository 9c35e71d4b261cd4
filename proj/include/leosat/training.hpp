#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "leosat/config.hpp"
#include "leosat/sac_trainer.hpp"

namespace leosat {

struct TrainingSpec {
  std::string scenario = "custom";
  ScenarioConfig config;  // config.error_bound is the training error bound
  SacOptions options;
  std::int64_t total_steps = 0;  // simulation (inference) steps
  std::uint64_t seed = 0;

  std::int64_t eval_every = 10'000;  // simulation steps between evaluations; 0 = only at the end
  int eval_iters = 200;
  std::uint64_t eval_seed = 0x5eed'e7a1;  // held out: training draws from derive_seed(seed, .)
  double eval_error_bound = 0;

  std::string checkpoint_path;   // final checkpoint; the best one goes to "<path>.best"
  std::string diagnostics_path;  // optional CSV, one row per train step
  std::string evaluation_path;   // optional CSV, one row per evaluation

  void validate() const;
};

struct EvaluationPoint {
  std::int64_t step = 0;
  double mean_sum_rate = 0;
};

struct TrainingResult {
  std::vector<EvaluationPoint> evaluations;
  EvaluationPoint best;
  EvaluationPoint last;
  std::int64_t learning_steps = 0;
};

/// Mean-action sum rate of `agent` on iterations 0..iters-1 of a sweep with
/// `seed` at `error_bound`; one entry per iteration.
std::vector<double> evaluate_agent(const SacAgent& agent, const ScenarioConfig& cfg, double error_bound,
                                   std::uint64_t seed, int iters);

using TrainingObserver = std::function<void(const StepDiagnostics&)>;

/// Calibrates standardisation, then runs train_step() until total_steps
/// simulation steps have been taken. On NonFiniteGradient the trainer state
/// is written to "<checkpoint_path>.nonfinite" (when a path is set) before
/// the error propagates.
TrainingResult run_training(const TrainingSpec& spec, SacTrainer& trainer,
                            const TrainingObserver& observer = {});
TrainingResult run_training(const TrainingSpec& spec, const TrainingObserver& observer = {});

}  // namespace leosat
