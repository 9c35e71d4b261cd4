#include "leosat/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "leosat/errors.hpp"

namespace leosat {

namespace {

constexpr std::array<std::string_view, 15> kKeys = {
    "num_antennas",   "num_users",       "altitude",           "wavelength",
    "antenna_spacing", "transmit_power", "noise_power",        "sat_gain_dbi",
    "user_gain_dbi",  "mean_user_distance", "fading_std_db",   "error_bound",
    "rng_seed",       "phase_mode",      "position_jitter"};

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError("invalid integer for '" + std::string(key) + "': '" + std::string(v) + "'");
  }
  return out;
}

}  // namespace

double parse_double_value(std::string_view key, std::string_view v) {
  // strtod accepts exponents and inf/nan spellings; nan/inf are rejected by validate().
  std::string buf(v);
  char* end = nullptr;
  const double out = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size()) {
    throw ConfigError("invalid number for '" + std::string(key) + "': '" + buf + "'");
  }
  return out;
}

bool parse_bool_value(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("invalid boolean for '" + std::string(key) + "': '" + std::string(v) + "'");
}

std::int64_t parse_int_value(std::string_view key, std::string_view v) {
  return parse_int<std::int64_t>(key, v);
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

double ScenarioConfig::sat_gain() const { return db_to_linear(sat_gain_dbi); }
double ScenarioConfig::user_gain() const { return db_to_linear(user_gain_dbi); }

void ScenarioConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid scenario config: ") + what);
  };
  require(num_antennas >= 1, "num_antennas must be >= 1");
  require(num_users >= 1, "num_users must be >= 1");
  require(std::isfinite(altitude) && altitude > 0, "altitude must be > 0");
  require(std::isfinite(wavelength) && wavelength > 0, "wavelength must be > 0");
  require(std::isfinite(antenna_spacing) && antenna_spacing > 0, "antenna_spacing must be > 0");
  require(std::isfinite(transmit_power) && transmit_power > 0, "transmit_power must be > 0");
  require(std::isfinite(noise_power) && noise_power > 0, "noise_power must be > 0");
  require(std::isfinite(sat_gain_dbi), "sat_gain_dbi must be finite");
  require(std::isfinite(user_gain_dbi), "user_gain_dbi must be finite");
  require(std::isfinite(mean_user_distance) && mean_user_distance >= 0,
          "mean_user_distance must be >= 0");
  require(std::isfinite(fading_std_db) && fading_std_db >= 0, "fading_std_db must be >= 0");
  require(std::isfinite(error_bound) && error_bound >= 0, "error_bound must be >= 0");
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string to_string(PhaseMode mode) {
  return mode == PhaseMode::distance ? "distance" : "uniform-random";
}

std::string ScenarioConfig::to_text() const {
  std::ostringstream os;
  os << "num_antennas=" << num_antennas << '\n'
     << "num_users=" << num_users << '\n'
     << "altitude=" << format_double(altitude) << '\n'
     << "wavelength=" << format_double(wavelength) << '\n'
     << "antenna_spacing=" << format_double(antenna_spacing) << '\n'
     << "transmit_power=" << format_double(transmit_power) << '\n'
     << "noise_power=" << format_double(noise_power) << '\n'
     << "sat_gain_dbi=" << format_double(sat_gain_dbi) << '\n'
     << "user_gain_dbi=" << format_double(user_gain_dbi) << '\n'
     << "mean_user_distance=" << format_double(mean_user_distance) << '\n'
     << "fading_std_db=" << format_double(fading_std_db) << '\n'
     << "error_bound=" << format_double(error_bound) << '\n'
     << "rng_seed=" << rng_seed << '\n'
     << "phase_mode=" << to_string(phase_mode) << '\n'
     << "position_jitter=" << (position_jitter ? "true" : "false") << '\n';
  return os.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t ScenarioConfig::hash() const { return fnv1a64(to_text()); }

bool is_config_key(std::string_view key) {
  for (auto k : kKeys) {
    if (k == key) return true;
  }
  return false;
}

void set_config_value(ScenarioConfig& cfg, std::string_view key, std::string_view raw) {
  const auto v = trim(raw);
  if (key == "num_antennas") cfg.num_antennas = parse_int<int>(key, v);
  else if (key == "num_users") cfg.num_users = parse_int<int>(key, v);
  else if (key == "altitude") cfg.altitude = parse_double_value(key, v);
  else if (key == "wavelength") cfg.wavelength = parse_double_value(key, v);
  else if (key == "antenna_spacing") cfg.antenna_spacing = parse_double_value(key, v);
  else if (key == "transmit_power") cfg.transmit_power = parse_double_value(key, v);
  else if (key == "noise_power") cfg.noise_power = parse_double_value(key, v);
  else if (key == "sat_gain_dbi") cfg.sat_gain_dbi = parse_double_value(key, v);
  else if (key == "user_gain_dbi") cfg.user_gain_dbi = parse_double_value(key, v);
  else if (key == "mean_user_distance") cfg.mean_user_distance = parse_double_value(key, v);
  else if (key == "fading_std_db") cfg.fading_std_db = parse_double_value(key, v);
  else if (key == "error_bound") cfg.error_bound = parse_double_value(key, v);
  else if (key == "rng_seed") cfg.rng_seed = parse_int<std::uint64_t>(key, v);
  else if (key == "phase_mode") {
    if (v == "distance") cfg.phase_mode = PhaseMode::distance;
    else if (v == "uniform-random") cfg.phase_mode = PhaseMode::uniform_random;
    else throw ConfigError("invalid phase_mode '" + std::string(v) + "'");
  } else if (key == "position_jitter") cfg.position_jitter = parse_bool_value(key, v);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.starts_with('#')) line = trim(line.substr(1));
    const auto eq = line.find('=');
    if (line.empty() || eq == std::string_view::npos) continue;
    out[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
  }
  return out;
}

ScenarioConfig parse_config(std::string_view text, ScenarioConfig base) {
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.starts_with('#')) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    }
    set_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  base.validate();
  return base;
}

ScenarioConfig load_config_file(const std::string& path, ScenarioConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

}  // namespace leosat
