// Command-line front end: train, sweep, beampattern, calibrate,
// inspect-checkpoint. Any surfaced error exits with status 1.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "leosat/beam_pattern.hpp"
#include "leosat/checkpoint.hpp"
#include "leosat/errors.hpp"
#include "leosat/scenarios.hpp"
#include "leosat/sweep.hpp"
#include "leosat/training.hpp"

namespace {

using namespace leosat;

std::vector<std::string> keys_of(const std::string& text) {
  std::vector<std::string> keys;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) keys.push_back(line.substr(0, eq));
  }
  return keys;
}

std::string flag_name(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return "--" + key;
}

/// Scenario selection: registry entry, then config file, then per-key flags.
struct ScenarioArgs {
  std::string scenario = "b";
  std::string config_file;
  std::map<std::string, std::string> overrides;

  void add(CLI::App& app) {
    app.add_option("--scenario", scenario, "Scenario id: a, b, c, tiny or custom")
        ->check(CLI::IsMember(scenario_ids()))
        ->capture_default_str();
    app.add_option("--config", config_file, "Scenario config file (key=value lines)")->check(CLI::ExistingFile);
    for (const auto& key : keys_of(ScenarioConfig{}.to_text())) {
      app.add_option_function<std::string>(
             flag_name(key), [this, key](const std::string& v) { overrides[key] = v; },
             "Scenario field " + key)
          ->group("Scenario fields");
    }
  }

  ScenarioConfig build() const {
    ScenarioConfig cfg = scenario_config(scenario);
    if (!config_file.empty()) cfg = load_config_file(config_file, cfg);
    for (const auto& [key, value] : overrides) set_config_value(cfg, key, value);
    cfg.validate();
    return cfg;
  }
};

struct LearnerArgs {
  std::string options_file;
  std::map<std::string, std::string> overrides;

  void add(CLI::App& app) {
    app.add_option("--learner-config", options_file, "Learner options file (key=value lines)")
        ->check(CLI::ExistingFile);
    for (const auto& key : keys_of(SacOptions{}.to_text())) {
      app.add_option_function<std::string>(
             flag_name(key), [this, key](const std::string& v) { overrides[key] = v; },
             "Learner option " + key)
          ->group("Learner options");
    }
  }

  SacOptions build(const std::string& scenario) const {
    SacOptions o = scenario == "tiny" ? tiny_sac_options() : SacOptions{};
    if (!options_file.empty()) {
      std::ifstream in(options_file);
      std::stringstream ss;
      ss << in.rdbuf();
      o = parse_sac_options(ss.str(), o);
    }
    for (const auto& [key, value] : overrides) set_sac_option(o, key, value);
    return o;
  }
};

std::vector<double> parse_bounds(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto next = text.find(',', pos);
    if (next == std::string::npos) next = text.size();
    if (next > pos) out.push_back(parse_double_value("error_bounds", text.substr(pos, next - pos)));
    pos = next + 1;
  }
  return out;
}

std::vector<PrecoderEntry> parse_precoders(const std::vector<std::string>& specs) {
  std::vector<PrecoderEntry> out;
  for (const auto& s : specs) out.push_back(parse_precoder(s));
  return out;
}

// --------------------------------------------------------------------------

struct TrainCommand {
  ScenarioArgs scenario;
  LearnerArgs learner;
  std::int64_t steps = 200'000;
  std::optional<std::uint64_t> seed;
  std::int64_t eval_every = 10'000;
  int eval_iters = 200;
  std::uint64_t eval_seed = TrainingSpec{}.eval_seed;
  std::optional<double> eval_error_bound;
  std::string out;
  std::string diagnostics;
  std::string evaluation;
  std::int64_t progress_every = 0;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("train", "Train a SAC precoder and write checkpoints");
    scenario.add(*app);
    learner.add(*app);
    app->add_option("--steps", steps, "Simulation steps")->capture_default_str();
    app->add_option("--seed", seed, "Training seed (default: the scenario's rng_seed)");
    app->add_option("--eval-every", eval_every, "Simulation steps between evaluations (0: end only)")
        ->capture_default_str();
    app->add_option("--eval-iters", eval_iters, "Held-out realizations per evaluation")->capture_default_str();
    app->add_option("--eval-seed", eval_seed, "Held-out evaluation seed")->capture_default_str();
    app->add_option("--eval-error-bound", eval_error_bound, "Evaluation error bound (default: training bound)");
    app->add_option("--out", out, "Final checkpoint path; the best one is written to <out>.best")->required();
    app->add_option("--diagnostics", diagnostics, "Per-step diagnostics CSV");
    app->add_option("--evaluation", evaluation, "Evaluation history CSV");
    app->add_option("--progress-every", progress_every, "Report progress on stderr every n train steps");
    app->callback([this] { run(); });
  }

  void run() {
    TrainingSpec spec;
    spec.scenario = scenario.scenario;
    spec.config = scenario.build();
    spec.options = learner.build(scenario.scenario);
    spec.total_steps = steps;
    spec.seed = seed.value_or(spec.config.rng_seed);
    spec.eval_every = eval_every;
    spec.eval_iters = eval_iters;
    spec.eval_seed = eval_seed;
    spec.eval_error_bound = eval_error_bound.value_or(spec.config.error_bound);
    spec.checkpoint_path = out;
    spec.diagnostics_path = diagnostics;
    spec.evaluation_path = evaluation;
    std::int64_t calls = 0;
    const auto result = run_training(spec, [&](const StepDiagnostics& d) {
      if (progress_every > 0 && ++calls % progress_every == 0) {
        std::fprintf(stderr, "step %lld reward %.4f alpha %.3g\n", static_cast<long long>(d.step), d.mean_reward,
                     d.alpha);
      }
    });
    std::printf("final_step=%lld\nfinal_mean_sum_rate=%.6f\nbest_step=%lld\nbest_mean_sum_rate=%.6f\n",
                static_cast<long long>(result.last.step), result.last.mean_sum_rate,
                static_cast<long long>(result.best.step), result.best.mean_sum_rate);
  }
};

struct SweepCommand {
  ScenarioArgs scenario;
  std::string bounds;
  int iters = 1000;
  std::vector<std::string> precoders = {"mmse", "rslnr"};
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out;
  std::string summary;
  std::string svg;
  std::string from_header;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("sweep", "Paired Monte Carlo sweep over error bounds");
    scenario.add(*app);
    app->add_option("--error-bounds", bounds, "Comma-separated ascending bounds (default 0,0.01,...,0.1)");
    app->add_option("--iters", iters, "Monte Carlo iterations per bound")->capture_default_str();
    app->add_option("--precoder", precoders, "mmse, rslnr, random or sac:<checkpoint>; repeatable")
        ->capture_default_str();
    app->add_option("--seed", seed, "Sweep seed (default: the scenario's rng_seed)");
    app->add_option("--threads", threads, "Worker lanes (output does not depend on it)")->capture_default_str();
    app->add_option("--out", out, "Per-iteration records CSV")->required();
    app->add_option("--summary", summary, "Per-cell summary CSV");
    app->add_option("--svg", svg, "Mean sum rate plot");
    app->add_option("--from-header", from_header, "Rerun the sweep recorded in a CSV header")
        ->check(CLI::ExistingFile);
    app->callback([this] { run(); });
  }

  void run() {
    SweepSpec spec;
    if (!from_header.empty()) {
      spec = sweep_spec_from_header(from_header);
    } else {
      spec.scenario = scenario.scenario;
      spec.config = scenario.build();
      spec.error_bounds = bounds.empty() ? default_error_bounds() : parse_bounds(bounds);
      spec.monte_carlo_iters = iters;
      spec.precoders = parse_precoders(precoders);
      spec.seed = seed.value_or(spec.config.rng_seed);
    }
    spec.threads = threads;
    const SweepResult result = run_sweep(spec);
    write_sweep_records_csv(spec, result, out);
    if (!summary.empty()) write_sweep_summary_csv(spec, result, summary);
    if (!svg.empty()) write_sweep_svg(spec, result, svg);
    for (const auto& c : result.cells) {
      std::printf("%s B=%g mean=%.6f std=%.6f\n", c.precoder.c_str(), c.error_bound, c.mean, c.stddev);
    }
  }
};

struct BeamPatternCommand {
  ScenarioArgs scenario;
  std::vector<std::string> precoders = {"mmse", "rslnr"};
  std::optional<std::uint64_t> seed;
  double aod_min = 60, aod_max = 120, aod_step = 0.05;
  std::string out;
  std::string svg;
  std::string from_header;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("beampattern", "Beam patterns of one realization at --error-bound");
    scenario.add(*app);
    app->add_option("--precoder", precoders, "mmse, rslnr, random or sac:<checkpoint>; repeatable")
        ->capture_default_str();
    app->add_option("--seed", seed, "Realization seed (default: the scenario's rng_seed)");
    app->add_option("--aod-min", aod_min, "Grid start [deg]")->capture_default_str();
    app->add_option("--aod-max", aod_max, "Grid end [deg]")->capture_default_str();
    app->add_option("--aod-step", aod_step, "Grid step [deg]")->capture_default_str();
    app->add_option("--out", out, "Beam pattern CSV")->required();
    app->add_option("--svg", svg, "Beam pattern plot");
    app->add_option("--from-header", from_header, "Rerun the beam pattern recorded in a CSV header")
        ->check(CLI::ExistingFile);
    app->callback([this] { run(); });
  }

  void run() {
    BeamPatternSpec spec;
    if (!from_header.empty()) {
      spec = beam_pattern_spec_from_header(from_header);
    } else {
      spec.scenario = scenario.scenario;
      spec.config = scenario.build();
      spec.error_bound = spec.config.error_bound;
      spec.seed = seed.value_or(spec.config.rng_seed);
      spec.precoders = parse_precoders(precoders);
      spec.aod_min_deg = aod_min;
      spec.aod_max_deg = aod_max;
      spec.aod_step_deg = aod_step;
    }
    const BeamPatternResult result = run_beam_pattern(spec);
    write_beam_pattern_csv(spec, result, out);
    if (!svg.empty()) write_beam_pattern_svg(spec, result, svg);
    for (const auto& c : result.curves) std::printf("%s sum_rate=%.6f\n", c.precoder.c_str(), c.sum_rate);
  }
};

struct CalibrateCommand {
  ScenarioArgs scenario;
  int samples = 100;
  std::string transform = "magnitude-phase";
  std::optional<std::uint64_t> seed;
  std::string out;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("calibrate", "Fit input standardisation statistics");
    scenario.add(*app);
    app->add_option("--samples", samples, "Channel estimates to fit on")->capture_default_str();
    app->add_option("--transform", transform, "magnitude-phase or real-imag")->capture_default_str();
    app->add_option("--seed", seed, "Sampling seed (default: the scenario's rng_seed)");
    app->add_option("--out", out, "Statistics CSV (index,mean,scale)")->required();
    app->callback([this] { run(); });
  }

  void run() {
    const ScenarioConfig cfg = scenario.build();
    const InputTransform t = parse_input_transform(transform);
    const std::uint64_t s = seed.value_or(cfg.rng_seed);
    Rng rng(s);
    const StandardizationStats stats = calibrate_standardization(cfg, rng, samples, t);
    std::ofstream csv(out, std::ios::binary | std::ios::trunc);
    if (!csv) throw Error("cannot open '" + out + "' for writing");
    csv << "# leosat calibrate\n# config_hash=" << std::hex << cfg.hash() << std::dec << "\n# seed=" << s
        << "\n# samples=" << samples << "\n# transform=" << to_string(t) << '\n';
    std::istringstream text(cfg.to_text());
    for (std::string line; std::getline(text, line);) csv << "# " << line << '\n';
    csv << "index,mean,scale\n";
    for (Eigen::Index i = 0; i < stats.mean.size(); ++i) {
      csv << i << ',' << format_double(stats.mean(i)) << ',' << format_double(stats.scale(i)) << '\n';
    }
    if (!csv) throw Error("failed writing '" + out + "'");
  }
};

struct InspectCommand {
  std::string path;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("inspect-checkpoint", "Print a checkpoint summary");
    app->add_option("checkpoint", path, "Checkpoint file")->required()->check(CLI::ExistingFile);
    app->callback([this] { std::cout << describe_checkpoint(load_checkpoint(path)); });
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LEO satellite SDMA downlink precoding simulator"};
  app.require_subcommand(1);
  TrainCommand train;
  SweepCommand sweep;
  BeamPatternCommand beam;
  CalibrateCommand calibrate;
  InspectCommand inspect;
  train.add(app);
  sweep.add(app);
  beam.add(app);
  calibrate.add(app);
  inspect.add(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const leosat::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
