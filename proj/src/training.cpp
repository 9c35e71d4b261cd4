#include "leosat/training.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "leosat/checkpoint.hpp"
#include "leosat/errors.hpp"
#include "leosat/sweep.hpp"

namespace leosat {
namespace {

std::string prefixed(const std::string& text) {
  std::ostringstream os;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) os << "# " << line << '\n';
  return os.str();
}

std::string training_header(const TrainingSpec& spec) {
  std::ostringstream os;
  os << "# leosat train\n";
  os << "# config_hash=" << std::hex << spec.config.hash() << std::dec << '\n';
  os << "# seed=" << spec.seed << '\n';
  os << "# scenario=" << spec.scenario << '\n';
  os << "# total_steps=" << spec.total_steps << '\n';
  os << "# eval_every=" << spec.eval_every << '\n';
  os << "# eval_iters=" << spec.eval_iters << '\n';
  os << "# eval_seed=" << spec.eval_seed << '\n';
  os << "# eval_error_bound=" << format_double(spec.eval_error_bound) << '\n';
  os << prefixed(spec.config.to_text()) << prefixed(spec.options.to_text());
  return os.str();
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

void TrainingSpec::validate() const {
  config.validate();
  if (total_steps < 0) throw ConfigError("total_steps must be >= 0");
  if (eval_every < 0) throw ConfigError("eval_every must be >= 0");
  if (eval_iters < 1) throw ConfigError("eval_iters must be >= 1");
  if (!std::isfinite(eval_error_bound) || eval_error_bound < 0) {
    throw ConfigError("eval_error_bound must be finite and >= 0");
  }
}

std::vector<double> evaluate_agent(const SacAgent& agent, const ScenarioConfig& cfg, double error_bound,
                                   std::uint64_t seed, int iters) {
  if (agent.num_users() != cfg.num_users || agent.num_antennas() != cfg.num_antennas) {
    throw CheckpointMismatch("agent shape does not match the evaluation scenario");
  }
  std::vector<double> rates;
  rates.reserve(static_cast<std::size_t>(iters));
  Rng unused(0);
  for (int i = 0; i < iters; ++i) {
    const ChannelRealization r = iteration_realization(cfg, error_bound, seed, i);
    const PrecodingMatrix w = agent.precode(r.estimated_channel, unused, ActionMode::mean);
    rates.push_back(sum_rate(r.true_channel, w, cfg.noise_power).sum_rate);
  }
  return rates;
}

TrainingResult run_training(const TrainingSpec& spec, SacTrainer& trainer, const TrainingObserver& observer) {
  spec.validate();
  if (!trainer.agent().stats.calibrated()) trainer.calibrate();
  SacAgent& agent = trainer.agent();

  std::ofstream diag;
  if (!spec.diagnostics_path.empty()) {
    diag = open_output(spec.diagnostics_path);
    diag << training_header(spec);
    diag << "step,learning_step,learned";
    for (std::size_t c = 0; c < agent.critics.size(); ++c) diag << ",critic_loss_" << c + 1;
    diag << ",actor_loss,alpha,mean_log_prob,mean_reward,critic_lr,actor_lr\n";
  }
  std::ofstream evals;
  if (!spec.evaluation_path.empty()) {
    evals = open_output(spec.evaluation_path);
    evals << training_header(spec);
    evals << "step,mean_sum_rate,best\n";
  }

  TrainingResult result;
  bool have_best = false;
  auto evaluate = [&](std::int64_t step) {
    const auto rates = evaluate_agent(agent, spec.config, spec.eval_error_bound, spec.eval_seed, spec.eval_iters);
    const EvaluationPoint point{step, mean_and_stddev(rates).first};
    result.evaluations.push_back(point);
    const bool improved = !have_best || point.mean_sum_rate > result.best.mean_sum_rate;
    if (improved) {
      result.best = point;
      have_best = true;
      if (!spec.checkpoint_path.empty()) save_checkpoint(agent, spec.checkpoint_path + ".best");
    }
    if (evals.is_open()) {
      evals << step << ',' << format_double(point.mean_sum_rate) << ',' << (improved ? 1 : 0) << '\n';
    }
    return point;
  };

  std::int64_t next_eval = spec.eval_every > 0 ? agent.inference_steps + spec.eval_every : -1;
  try {
    while (agent.inference_steps < spec.total_steps) {
      const StepDiagnostics d = trainer.train_step();
      if (diag.is_open()) {
        diag << d.step << ',' << agent.learning_steps << ',' << (d.learned ? 1 : 0);
        for (std::size_t c = 0; c < agent.critics.size(); ++c) {
          diag << ',' << (c < d.critic_losses.size() ? format_double(d.critic_losses[c]) : std::string("nan"));
        }
        diag << ',' << format_double(d.actor_loss) << ',' << format_double(d.alpha) << ','
             << format_double(d.mean_log_prob) << ',' << format_double(d.mean_reward) << ','
             << format_double(d.critic_lr) << ',' << format_double(d.actor_lr) << '\n';
      }
      if (observer) observer(d);
      if (next_eval >= 0 && agent.inference_steps >= next_eval && agent.inference_steps < spec.total_steps) {
        evaluate(agent.inference_steps);
        next_eval += spec.eval_every;
      }
    }
  } catch (const NonFiniteGradient&) {
    if (!spec.checkpoint_path.empty()) {
      try {
        save_checkpoint(agent, spec.checkpoint_path + ".nonfinite");
      } catch (const Error&) {
      }
    }
    throw;
  }

  result.last = evaluate(agent.inference_steps);
  result.learning_steps = agent.learning_steps;
  if (!spec.checkpoint_path.empty()) save_checkpoint(agent, spec.checkpoint_path);
  if (diag.is_open() && !diag) throw Error("failed writing '" + spec.diagnostics_path + "'");
  if (evals.is_open() && !evals) throw Error("failed writing '" + spec.evaluation_path + "'");
  return result;
}

TrainingResult run_training(const TrainingSpec& spec, const TrainingObserver& observer) {
  spec.validate();
  SacTrainer trainer(spec.config, spec.options, spec.seed);
  return run_training(spec, trainer, observer);
}

}  // namespace leosat
