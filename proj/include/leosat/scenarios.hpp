#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "leosat/config.hpp"
#include "leosat/sac_trainer.hpp"

namespace leosat {

/// Registered scenarios:
///   a     N = 10, K = 3, mean user distance 100 km
///   b     N = 16, K = 3, mean user distance 100 km
///   c     N = 16, K = 3, mean user distance 10 km
///   tiny  N = 4,  K = 2, mean user distance 100 km (desk-scale training)
///   custom  defaults only, to be filled from a config file / flags
/// All other constants are the library defaults.
ScenarioConfig scenario_config(std::string_view id);
std::vector<std::string> scenario_ids();

/// Default evaluation grid of error bounds.
std::vector<double> default_error_bounds();

/// Learner settings used for desk-scale runs on the tiny scenario.
SacOptions tiny_sac_options();

}  // namespace leosat
