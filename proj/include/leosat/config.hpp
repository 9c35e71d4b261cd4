#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace leosat {

enum class PhaseMode { distance, uniform_random };

/// Physical and geometric constants of one downlink scenario.
///
/// Gains are held in dBi (the unit of the config file) so a config written
/// out and read back is bit-identical; the linear values used by the channel
/// model come from `sat_gain()` / `user_gain()`.
struct ScenarioConfig {
  int num_antennas = 16;
  int num_users = 3;
  double altitude = 600e3;            // m
  double wavelength = 0.15;           // m
  double antenna_spacing = 0.225;     // m, 3/2 wavelength
  double transmit_power = 100.0;      // W
  double noise_power = 6e-13;         // W
  double sat_gain_dbi = 20.0;
  double user_gain_dbi = 0.0;
  double mean_user_distance = 100e3;  // m
  double fading_std_db = 1.0;
  double error_bound = 0.0;           // space-angle units
  std::uint64_t rng_seed = 0;
  PhaseMode phase_mode = PhaseMode::distance;
  bool position_jitter = true;

  double sat_gain() const;
  double user_gain() const;

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;

  /// Canonical `key=value` text, one line per key, fixed key order.
  std::string to_text() const;

  /// FNV-1a hash of `to_text()`.
  std::uint64_t hash() const;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Applies a single `key=value` assignment. Unknown keys throw ConfigError.
void set_config_value(ScenarioConfig& cfg, std::string_view key, std::string_view value);

/// True if `key` names a ScenarioConfig field.
bool is_config_key(std::string_view key);

/// Parses `key=value` lines; blank lines and lines starting with '#' are
/// skipped. Starts from `base` so files may override a subset of keys.
ScenarioConfig parse_config(std::string_view text, ScenarioConfig base = {});

ScenarioConfig load_config_file(const std::string& path, ScenarioConfig base = {});

/// Splits text into an ordered key/value map (used for CSV headers that
/// carry both config and run parameters). Lines may carry a leading "# ".
std::map<std::string, std::string> parse_key_values(std::string_view text);

std::string format_double(double value);

// Strict scalar parsers; the key only feeds the error message.
double parse_double_value(std::string_view key, std::string_view value);
std::int64_t parse_int_value(std::string_view key, std::string_view value);
bool parse_bool_value(std::string_view key, std::string_view value);

std::string to_string(PhaseMode mode);
std::uint64_t fnv1a64(std::string_view bytes);

double db_to_linear(double db);
double linear_to_db(double linear);

}  // namespace leosat
