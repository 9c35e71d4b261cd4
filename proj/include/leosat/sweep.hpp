#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "leosat/channel.hpp"
#include "leosat/config.hpp"
#include "leosat/metrics.hpp"
#include "leosat/sac_trainer.hpp"

namespace leosat {

enum class PrecoderKind { mmse, rslnr, sac, random };

/// One precoder taking part in an evaluation. `name` is its column label.
struct PrecoderEntry {
  std::string name;
  PrecoderKind kind = PrecoderKind::mmse;
  std::shared_ptr<const SacAgent> agent;  // kind == sac
  std::string checkpoint_path;
  std::uint64_t checkpoint_id = 0;  // checksum of the checkpoint bytes

  static PrecoderEntry mmse();
  static PrecoderEntry rslnr();
  static PrecoderEntry random();
  /// Loads the checkpoint; name defaults to "sac:<file stem>".
  static PrecoderEntry sac(const std::string& path, std::string name = {});
  static PrecoderEntry sac(std::shared_ptr<const SacAgent> agent, std::string name);
};

/// Parses "mmse", "rslnr", "random" or "sac:<path>".
PrecoderEntry parse_precoder(const std::string& spec);
std::string precoder_spec(const PrecoderEntry& entry);

/// Precoder for one realization. The rSLNR precoder uses the realization's
/// error bound (cfg.error_bound); SAC uses its mean action; `rng` feeds the
/// random baseline only.
PrecodingMatrix apply_precoder(const PrecoderEntry& entry, const ChannelRealization& realization,
                               const ScenarioConfig& cfg, Rng& rng);

/// Throws CheckpointMismatch if a learned precoder was trained for another
/// (K, N).
void check_compatible(const PrecoderEntry& entry, const ScenarioConfig& cfg);

struct SweepSpec {
  std::string scenario = "custom";
  ScenarioConfig config;
  std::vector<double> error_bounds = {0.0};
  int monte_carlo_iters = 1000;
  std::vector<PrecoderEntry> precoders;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

struct SweepRecord {
  int iteration = 0;
  std::uint64_t seed = 0;  // seed of this iteration's realization
  Eigen::VectorXd sinr;
  double sum_rate = 0;
};

struct SweepCell {
  std::string precoder;
  double error_bound = 0;
  std::vector<SweepRecord> records;
  double mean = 0;
  double stddev = 0;  // sample standard deviation (n - 1)
};

struct SweepResult {
  std::vector<SweepCell> cells;  // bound-major, precoders in spec order
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> checkpoint_ids;

  const SweepCell& cell(const std::string& precoder, double error_bound) const;
};

/// Realization seed of iteration `i`; shared by every precoder and bound.
std::uint64_t iteration_seed(std::uint64_t root, int iteration);

/// Realization of iteration `i` at `error_bound` (positions and error draws
/// are common across bounds; only the error magnitude scales).
ChannelRealization iteration_realization(const ScenarioConfig& cfg, double error_bound,
                                         std::uint64_t root, int iteration);

/// Paired Monte Carlo evaluation. Iterations are split over `threads`
/// lanes; results are stored by iteration index so output does not depend
/// on the lane count.
SweepResult run_sweep(const SweepSpec& spec);

struct PairedComparison {
  double mean_difference = 0;  // mean(a - b)
  double standard_error = 0;
  std::size_t count = 0;
};

PairedComparison compare_paired(const SweepCell& a, const SweepCell& b);

/// Mean and sample standard deviation of sum rates.
std::pair<double, double> mean_and_stddev(const std::vector<double>& values);

/// Header lines ("# key=value") that reproduce the sweep.
std::string sweep_header(const SweepSpec& spec, const SweepResult& result);

/// Columns: precoder,error_bound,iteration,seed,sinr_1..sinr_K,sum_rate
void write_sweep_records_csv(const SweepSpec& spec, const SweepResult& result, const std::string& path);
/// Columns: precoder,error_bound,mean_sum_rate,std_sum_rate,iterations
void write_sweep_summary_csv(const SweepSpec& spec, const SweepResult& result, const std::string& path);
void write_sweep_svg(const SweepSpec& spec, const SweepResult& result, const std::string& path);

/// Rebuilds a SweepSpec from a CSV written by write_sweep_*_csv.
SweepSpec sweep_spec_from_header(const std::string& csv_path);

}  // namespace leosat
