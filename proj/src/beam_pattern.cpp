#include "leosat/beam_pattern.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "leosat/errors.hpp"
#include "leosat/svg.hpp"

namespace leosat {
namespace {

double to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
double to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

std::string header(const BeamPatternSpec& spec, const BeamPatternResult& result) {
  std::ostringstream os;
  os << "# leosat beampattern\n";
  os << "# config_hash=" << hex64(result.config_hash) << '\n';
  os << "# seed=" << spec.seed << '\n';
  os << "# scenario=" << spec.scenario << '\n';
  os << "# beam_error_bound=" << format_double(spec.error_bound) << '\n';
  os << "# aod_min_deg=" << format_double(spec.aod_min_deg) << '\n';
  os << "# aod_max_deg=" << format_double(spec.aod_max_deg) << '\n';
  os << "# aod_step_deg=" << format_double(spec.aod_step_deg) << '\n';
  os << "# precoders=";
  for (std::size_t i = 0; i < spec.precoders.size(); ++i) {
    const auto& p = spec.precoders[i];
    os << (i ? ";" : "") << (p.kind == PrecoderKind::sac && p.checkpoint_path.empty() ? p.name : precoder_spec(p));
  }
  os << '\n';
  for (std::size_t k = 0; k < result.true_aod_deg.size(); ++k) {
    os << "# true_aod_deg_" << k + 1 << '=' << format_double(result.true_aod_deg[k]) << '\n';
    os << "# estimated_aod_deg_" << k + 1 << '=' << format_double(result.estimated_aod_deg[k]) << '\n';
  }
  for (const auto& c : result.curves) os << "# sum_rate_" << c.precoder << '=' << format_double(c.sum_rate) << '\n';
  std::istringstream cfg(spec.config.to_text());
  for (std::string line; std::getline(cfg, line);) os << "# " << line << '\n';
  return os.str();
}

}  // namespace

void BeamPatternSpec::validate() const {
  config.validate();
  if (!std::isfinite(error_bound) || error_bound < 0) throw ConfigError("error bound must be finite and >= 0");
  if (!(aod_step_deg > 0) || !(aod_max_deg > aod_min_deg) || aod_min_deg < 0 || aod_max_deg > 180) {
    throw ConfigError("AoD grid must satisfy 0 <= min < max <= 180 with a positive step");
  }
  if ((aod_max_deg - aod_min_deg) / aod_step_deg > 1e6) throw ConfigError("AoD grid exceeds 1e6 points");
  if (precoders.empty()) throw ConfigError("at least one precoder is required");
  for (const auto& p : precoders) check_compatible(p, config);
}

std::vector<double> BeamPatternSpec::grid_deg() const {
  const auto n = static_cast<std::size_t>(std::floor((aod_max_deg - aod_min_deg) / aod_step_deg + 1e-9)) + 1;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = aod_min_deg + static_cast<double>(i) * aod_step_deg;
  return grid;
}

BeamPatternResult run_beam_pattern(const BeamPatternSpec& spec) {
  spec.validate();
  ScenarioConfig cfg = spec.config;
  cfg.error_bound = spec.error_bound;

  BeamPatternResult result;
  result.config_hash = spec.config.hash();
  result.grid_deg = spec.grid_deg();
  result.realization = iteration_realization(spec.config, spec.error_bound, spec.seed, 0);
  for (int k = 0; k < cfg.num_users; ++k) {
    result.true_aod_deg.push_back(to_deg(result.realization.users[static_cast<std::size_t>(k)].aod));
    const double x = std::clamp(result.realization.estimated_space_angle(k), -1.0, 1.0);
    result.estimated_aod_deg.push_back(to_deg(std::acos(x)));
  }

  std::vector<double> grid_rad(result.grid_deg.size());
  std::transform(result.grid_deg.begin(), result.grid_deg.end(), grid_rad.begin(), to_rad);

  const std::uint64_t seed = iteration_seed(spec.seed, 0);
  for (const auto& p : spec.precoders) {
    Rng rng(derive_seed(seed, 0x72616e64));
    const PrecodingMatrix w = apply_precoder(p, result.realization, cfg, rng);
    BeamPatternCurve curve;
    curve.precoder = p.name;
    curve.gain = beam_pattern(w, cfg, grid_rad);
    curve.sum_rate = sum_rate(result.realization.true_channel, w, cfg.noise_power).sum_rate;
    result.curves.push_back(std::move(curve));
  }
  return result;
}

void write_beam_pattern_csv(const BeamPatternSpec& spec, const BeamPatternResult& result,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << header(spec, result);
  out << "aod_deg";
  for (const auto& c : result.curves) {
    for (Eigen::Index k = 0; k < c.gain.rows(); ++k) out << ',' << c.precoder << "_user" << k + 1;
  }
  out << '\n';
  for (std::size_t g = 0; g < result.grid_deg.size(); ++g) {
    out << format_double(result.grid_deg[g]);
    for (const auto& c : result.curves) {
      for (Eigen::Index k = 0; k < c.gain.rows(); ++k) {
        out << ',' << format_double(c.gain(k, static_cast<Eigen::Index>(g)));
      }
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

void write_beam_pattern_svg(const BeamPatternSpec& spec, const BeamPatternResult& result,
                            const std::string& path) {
  LinePlot plot;
  plot.title = "Beam patterns, scenario " + spec.scenario + ", error bound " + format_double(spec.error_bound);
  plot.x_label = "AoD [deg]";
  plot.y_label = "gain |v(cos e) w_k|";
  for (const auto& c : result.curves) {
    for (Eigen::Index k = 0; k < c.gain.rows(); ++k) {
      PlotSeries s;
      char rate[32];
      std::snprintf(rate, sizeof rate, "%.2f", c.sum_rate);
      s.label = c.precoder + " u" + std::to_string(k + 1) + " (" + rate + ")";
      s.x = result.grid_deg;
      s.y.resize(result.grid_deg.size());
      for (std::size_t g = 0; g < s.y.size(); ++g) s.y[g] = c.gain(k, static_cast<Eigen::Index>(g));
      plot.series.push_back(std::move(s));
    }
  }
  for (std::size_t k = 0; k < result.true_aod_deg.size(); ++k) {
    plot.markers.push_back({result.true_aod_deg[k], "u" + std::to_string(k + 1), false});
    plot.markers.push_back({result.estimated_aod_deg[k], "", true});
  }
  write_svg(plot, path);
}

BeamPatternSpec beam_pattern_spec_from_header(const std::string& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw Error("cannot open '" + csv_path + "'");
  std::string text;
  for (std::string line; std::getline(in, line) && line.starts_with('#');) text += line + '\n';
  const auto kv = parse_key_values(text);
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("'" + csv_path + "' header lacks '" + key + "'");
    return it->second;
  };
  BeamPatternSpec spec;
  spec.scenario = get("scenario");
  for (const auto& [key, value] : kv) {
    if (is_config_key(key)) set_config_value(spec.config, key, value);
  }
  spec.config.validate();
  if (hex64(spec.config.hash()) != get("config_hash")) {
    throw FormatError("'" + csv_path + "' header config does not match its config_hash");
  }
  spec.seed = static_cast<std::uint64_t>(std::stoull(get("seed")));
  spec.error_bound = parse_double_value("beam_error_bound", get("beam_error_bound"));
  spec.aod_min_deg = parse_double_value("aod_min_deg", get("aod_min_deg"));
  spec.aod_max_deg = parse_double_value("aod_max_deg", get("aod_max_deg"));
  spec.aod_step_deg = parse_double_value("aod_step_deg", get("aod_step_deg"));
  const std::string& list = get("precoders");
  std::size_t pos = 0;
  while (pos <= list.size()) {
    auto next = list.find(';', pos);
    if (next == std::string::npos) next = list.size();
    if (next > pos) spec.precoders.push_back(parse_precoder(list.substr(pos, next - pos)));
    pos = next + 1;
  }
  return spec;
}

}  // namespace leosat
