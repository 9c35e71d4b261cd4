#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "leosat/sweep.hpp"

namespace leosat {

struct BeamPatternSpec {
  std::string scenario = "custom";
  ScenarioConfig config;
  double error_bound = 0;
  std::uint64_t seed = 0;  // the realization is iteration 0 of a sweep with this seed
  std::vector<PrecoderEntry> precoders;
  double aod_min_deg = 60;
  double aod_max_deg = 120;
  double aod_step_deg = 0.05;

  void validate() const;
  std::vector<double> grid_deg() const;
};

struct BeamPatternCurve {
  std::string precoder;
  Eigen::MatrixXd gain;  // K x grid
  double sum_rate = 0;   // on the true channel of the realization
};

struct BeamPatternResult {
  std::vector<double> grid_deg;
  ChannelRealization realization;
  std::vector<double> true_aod_deg;
  std::vector<double> estimated_aod_deg;  // arccos of the erroneous space angle
  std::vector<BeamPatternCurve> curves;
  std::uint64_t config_hash = 0;
};

BeamPatternResult run_beam_pattern(const BeamPatternSpec& spec);

/// Columns: aod_deg, then <precoder>_user<k> for every precoder and user.
void write_beam_pattern_csv(const BeamPatternSpec& spec, const BeamPatternResult& result,
                            const std::string& path);
void write_beam_pattern_svg(const BeamPatternSpec& spec, const BeamPatternResult& result,
                            const std::string& path);

BeamPatternSpec beam_pattern_spec_from_header(const std::string& csv_path);

}  // namespace leosat
