#include "leosat/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "leosat/checkpoint.hpp"
#include "leosat/errors.hpp"
#include "leosat/precoder_mmse.hpp"
#include "leosat/precoder_rslnr.hpp"
#include "leosat/scenarios.hpp"
#include "leosat/svg.hpp"

namespace leosat {
namespace {

// Stream index for the random baseline, derived from the iteration seed so
// every bound of one iteration sees the same random draw.
constexpr std::uint64_t kRandomPrecoderStream = 0x72616e64;

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

std::string join_bounds(const std::vector<double>& bounds) {
  std::string s;
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    if (i) s += ',';
    s += format_double(bounds[i]);
  }
  return s;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto next = text.find(sep, pos);
    if (next == std::string_view::npos) next = text.size();
    if (next > pos) out.emplace_back(text.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

PrecodingMatrix random_precoder(const ScenarioConfig& cfg, Rng& rng) {
  Eigen::MatrixXcd w(cfg.num_antennas, cfg.num_users);
  for (Eigen::Index k = 0; k < w.cols(); ++k) {
    for (Eigen::Index n = 0; n < w.rows(); ++n) {
      const double re = standard_normal(rng);
      const double im = standard_normal(rng);
      w(n, k) = cd(re, im);
    }
  }
  const double norm = w.norm();
  if (norm == 0.0) throw NormalizationOfZero("random precoder drew an all-zero matrix");
  w *= std::sqrt(cfg.transmit_power) / norm;
  return {std::move(w), cfg.transmit_power};
}

}  // namespace

PrecoderEntry PrecoderEntry::mmse() { return {"mmse", PrecoderKind::mmse, nullptr, {}, 0}; }
PrecoderEntry PrecoderEntry::rslnr() { return {"rslnr", PrecoderKind::rslnr, nullptr, {}, 0}; }
PrecoderEntry PrecoderEntry::random() { return {"random", PrecoderKind::random, nullptr, {}, 0}; }

PrecoderEntry PrecoderEntry::sac(const std::string& path, std::string name) {
  const std::string bytes = read_file(path);
  auto agent = std::make_shared<const SacAgent>(decode_checkpoint(bytes));
  if (name.empty()) name = "sac:" + std::filesystem::path(path).stem().string();
  PrecoderEntry e{std::move(name), PrecoderKind::sac, std::move(agent), path, fnv1a64(bytes)};
  return e;
}

PrecoderEntry PrecoderEntry::sac(std::shared_ptr<const SacAgent> agent, std::string name) {
  if (!agent) throw Error("PrecoderEntry::sac: null agent");
  const std::uint64_t id = fnv1a64(encode_checkpoint(*agent));
  return {std::move(name), PrecoderKind::sac, std::move(agent), {}, id};
}

PrecoderEntry parse_precoder(const std::string& spec) {
  if (spec == "mmse") return PrecoderEntry::mmse();
  if (spec == "rslnr") return PrecoderEntry::rslnr();
  if (spec == "random") return PrecoderEntry::random();
  if (spec.starts_with("sac:") && spec.size() > 4) return PrecoderEntry::sac(spec.substr(4));
  throw ConfigError("unknown precoder '" + spec + "' (expected mmse, rslnr, random or sac:<checkpoint>)");
}

std::string precoder_spec(const PrecoderEntry& entry) {
  switch (entry.kind) {
    case PrecoderKind::mmse: return "mmse";
    case PrecoderKind::rslnr: return "rslnr";
    case PrecoderKind::random: return "random";
    case PrecoderKind::sac:
      if (entry.checkpoint_path.empty()) throw Error("in-memory agent '" + entry.name + "' has no checkpoint path");
      return "sac:" + entry.checkpoint_path;
  }
  return {};
}

void check_compatible(const PrecoderEntry& entry, const ScenarioConfig& cfg) {
  if (entry.kind != PrecoderKind::sac) return;
  if (!entry.agent) throw Error("precoder '" + entry.name + "' has no agent");
  if (entry.agent->num_users() != cfg.num_users || entry.agent->num_antennas() != cfg.num_antennas) {
    throw CheckpointMismatch("checkpoint '" + entry.name + "' was trained for K=" +
                             std::to_string(entry.agent->num_users()) +
                             ", N=" + std::to_string(entry.agent->num_antennas()) +
                             " but the scenario has K=" + std::to_string(cfg.num_users) +
                             ", N=" + std::to_string(cfg.num_antennas));
  }
}

PrecodingMatrix apply_precoder(const PrecoderEntry& entry, const ChannelRealization& realization,
                               const ScenarioConfig& cfg, Rng& rng) {
  switch (entry.kind) {
    case PrecoderKind::mmse:
      return mmse_precoder(realization.estimated_channel, cfg.transmit_power, cfg.noise_power);
    case PrecoderKind::rslnr:
      return rslnr_precoder(user_estimates(realization), cfg.error_bound, cfg);
    case PrecoderKind::random:
      return random_precoder(cfg, rng);
    case PrecoderKind::sac: {
      check_compatible(entry, cfg);
      const SacAgent& agent = *entry.agent;
      const Eigen::VectorXd s = state_from_estimate(realization.estimated_channel, agent.stats,
                                                    agent.options.transform);
      const ActionVector a = sample_action(agent.actor, s, rng, ActionMode::mean);
      return precoder_from_action(a.a, cfg.transmit_power, cfg.num_users, cfg.num_antennas);
    }
  }
  throw Error("unknown precoder kind");
}

void SweepSpec::validate() const {
  config.validate();
  if (monte_carlo_iters < 1) throw ConfigError("monte_carlo_iters must be >= 1");
  if (error_bounds.empty()) throw ConfigError("error_bounds must not be empty");
  for (std::size_t i = 0; i < error_bounds.size(); ++i) {
    if (!std::isfinite(error_bounds[i]) || error_bounds[i] < 0) {
      throw ConfigError("error bounds must be finite and >= 0");
    }
    if (i > 0 && error_bounds[i] <= error_bounds[i - 1]) {
      throw ConfigError("error bounds must be strictly ascending");
    }
  }
  if (precoders.empty()) throw ConfigError("at least one precoder is required");
  for (std::size_t i = 0; i < precoders.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (precoders[i].name == precoders[j].name) {
        throw ConfigError("duplicate precoder name '" + precoders[i].name + "'");
      }
    }
    check_compatible(precoders[i], config);
  }
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

const SweepCell& SweepResult::cell(const std::string& precoder, double error_bound) const {
  for (const auto& c : cells) {
    if (c.precoder == precoder && c.error_bound == error_bound) return c;
  }
  throw Error("no sweep cell for precoder '" + precoder + "' at bound " + format_double(error_bound));
}

std::uint64_t iteration_seed(std::uint64_t root, int iteration) {
  return derive_seed(root, static_cast<std::uint64_t>(iteration));
}

ChannelRealization iteration_realization(const ScenarioConfig& cfg, double error_bound,
                                         std::uint64_t root, int iteration) {
  ScenarioConfig c = cfg;
  c.error_bound = error_bound;
  Rng rng(iteration_seed(root, iteration));
  return sample_realization(c, rng);
}

std::pair<double, double> mean_and_stddev(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double sum = 0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  const std::size_t nb = spec.error_bounds.size();
  const std::size_t np = spec.precoders.size();
  const int iters = spec.monte_carlo_iters;

  SweepResult result;
  result.config_hash = spec.config.hash();
  result.seed = spec.seed;
  for (const auto& p : spec.precoders) {
    if (p.kind == PrecoderKind::sac) result.checkpoint_ids.push_back(hex64(p.checkpoint_id));
  }
  for (double b : spec.error_bounds) {
    for (const auto& p : spec.precoders) {
      SweepCell cell;
      cell.precoder = p.name;
      cell.error_bound = b;
      cell.records.resize(static_cast<std::size_t>(iters));
      result.cells.push_back(std::move(cell));
    }
  }

  auto run_iteration = [&](int i) {
    const std::uint64_t seed = iteration_seed(spec.seed, i);
    for (std::size_t bi = 0; bi < nb; ++bi) {
      ScenarioConfig cfg = spec.config;
      cfg.error_bound = spec.error_bounds[bi];
      Rng world(seed);
      const ChannelRealization realization = sample_realization(cfg, world);
      for (std::size_t pi = 0; pi < np; ++pi) {
        Rng rng(derive_seed(seed, kRandomPrecoderStream));
        const PrecodingMatrix w = apply_precoder(spec.precoders[pi], realization, cfg, rng);
        const RateReport report = sum_rate(realization.true_channel, w, cfg.noise_power);
        SweepRecord& rec = result.cells[bi * np + pi].records[static_cast<std::size_t>(i)];
        rec.iteration = i;
        rec.seed = seed;
        rec.sinr = report.sinr;
        rec.sum_rate = report.sum_rate;
      }
    }
  };

  const int lanes = std::min(spec.threads, iters);
  if (lanes <= 1) {
    for (int i = 0; i < iters; ++i) run_iteration(i);
  } else {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(lanes));
    std::vector<std::thread> workers;
    for (int lane = 0; lane < lanes; ++lane) {
      workers.emplace_back([&, lane] {
        try {
          for (int i = lane; i < iters; i += lanes) run_iteration(i);
        } catch (...) {
          errors[static_cast<std::size_t>(lane)] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (auto& cell : result.cells) {
    std::vector<double> rates;
    rates.reserve(cell.records.size());
    for (const auto& r : cell.records) rates.push_back(r.sum_rate);
    std::tie(cell.mean, cell.stddev) = mean_and_stddev(rates);
  }
  return result;
}

PairedComparison compare_paired(const SweepCell& a, const SweepCell& b) {
  if (a.records.size() != b.records.size()) throw Error("paired comparison needs equal record counts");
  std::vector<double> diff;
  diff.reserve(a.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    if (a.records[i].seed != b.records[i].seed) throw Error("paired comparison over unmatched seeds");
    diff.push_back(a.records[i].sum_rate - b.records[i].sum_rate);
  }
  const auto [mean, sd] = mean_and_stddev(diff);
  PairedComparison out;
  out.mean_difference = mean;
  out.count = diff.size();
  out.standard_error = diff.empty() ? 0.0 : sd / std::sqrt(static_cast<double>(diff.size()));
  return out;
}

std::string sweep_header(const SweepSpec& spec, const SweepResult& result) {
  std::ostringstream os;
  os << "# leosat sweep\n";
  os << "# config_hash=" << hex64(result.config_hash) << '\n';
  os << "# seed=" << result.seed << '\n';
  os << "# scenario=" << spec.scenario << '\n';
  os << "# error_bounds=" << join_bounds(spec.error_bounds) << '\n';
  os << "# monte_carlo_iters=" << spec.monte_carlo_iters << '\n';
  os << "# precoders=";
  for (std::size_t i = 0; i < spec.precoders.size(); ++i) {
    if (i) os << ';';
    os << (spec.precoders[i].kind == PrecoderKind::sac && spec.precoders[i].checkpoint_path.empty()
               ? spec.precoders[i].name
               : precoder_spec(spec.precoders[i]));
  }
  os << '\n';
  os << "# checkpoint_ids=";
  for (std::size_t i = 0; i < result.checkpoint_ids.size(); ++i) os << (i ? "," : "") << result.checkpoint_ids[i];
  os << '\n';
  std::istringstream cfg(spec.config.to_text());
  for (std::string line; std::getline(cfg, line);) os << "# " << line << '\n';
  return os.str();
}

void write_sweep_records_csv(const SweepSpec& spec, const SweepResult& result, const std::string& path) {
  auto out = open_output(path);
  out << sweep_header(spec, result);
  out << "precoder,error_bound,iteration,seed";
  for (int k = 1; k <= spec.config.num_users; ++k) out << ",sinr_" << k;
  out << ",sum_rate\n";
  for (const auto& cell : result.cells) {
    for (const auto& r : cell.records) {
      out << cell.precoder << ',' << format_double(cell.error_bound) << ',' << r.iteration << ',' << r.seed;
      for (Eigen::Index k = 0; k < r.sinr.size(); ++k) out << ',' << format_double(r.sinr(k));
      out << ',' << format_double(r.sum_rate) << '\n';
    }
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

void write_sweep_summary_csv(const SweepSpec& spec, const SweepResult& result, const std::string& path) {
  auto out = open_output(path);
  out << sweep_header(spec, result);
  out << "precoder,error_bound,mean_sum_rate,std_sum_rate,iterations\n";
  for (const auto& cell : result.cells) {
    out << cell.precoder << ',' << format_double(cell.error_bound) << ',' << format_double(cell.mean) << ','
        << format_double(cell.stddev) << ',' << cell.records.size() << '\n';
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

void write_sweep_svg(const SweepSpec& spec, const SweepResult& result, const std::string& path) {
  LinePlot plot;
  plot.title = "Mean sum rate vs error bound (scenario " + spec.scenario + ", " +
               std::to_string(spec.monte_carlo_iters) + " iterations)";
  plot.x_label = "error bound";
  plot.y_label = "sum rate [bit/s/Hz]";
  for (const auto& p : spec.precoders) {
    PlotSeries s;
    s.label = p.name;
    for (double b : spec.error_bounds) {
      const auto& c = result.cell(p.name, b);
      s.x.push_back(b);
      s.y.push_back(c.mean);
      s.spread.push_back(c.stddev);
    }
    plot.series.push_back(std::move(s));
  }
  write_svg(plot, path);
}

SweepSpec sweep_spec_from_header(const std::string& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw Error("cannot open '" + csv_path + "'");
  std::string header;
  for (std::string line; std::getline(in, line) && line.starts_with('#');) header += line + '\n';
  const auto kv = parse_key_values(header);
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("'" + csv_path + "' header lacks '" + key + "'");
    return it->second;
  };

  SweepSpec spec;
  spec.scenario = get("scenario");
  for (const auto& [key, value] : kv) {
    if (is_config_key(key)) set_config_value(spec.config, key, value);
  }
  spec.config.validate();
  std::ostringstream hash;
  hash << std::hex << spec.config.hash();
  if (hash.str() != get("config_hash")) {
    throw FormatError("'" + csv_path + "' header config does not match its config_hash");
  }
  spec.seed = static_cast<std::uint64_t>(std::stoull(get("seed")));
  spec.monte_carlo_iters = static_cast<int>(parse_int_value("monte_carlo_iters", get("monte_carlo_iters")));
  spec.error_bounds.clear();
  for (const auto& b : split(get("error_bounds"), ',')) spec.error_bounds.push_back(parse_double_value("error_bounds", b));
  for (const auto& p : split(get("precoders"), ';')) spec.precoders.push_back(parse_precoder(p));
  const auto ids = split(kv.count("checkpoint_ids") ? kv.at("checkpoint_ids") : std::string{}, ',');
  std::size_t next_id = 0;
  for (const auto& p : spec.precoders) {
    if (p.kind != PrecoderKind::sac) continue;
    if (next_id >= ids.size() || ids[next_id] != hex64(p.checkpoint_id)) {
      throw CheckpointMismatch("checkpoint '" + p.checkpoint_path + "' differs from the one recorded in '" +
                               csv_path + "'");
    }
    ++next_id;
  }
  return spec;
}

}  // namespace leosat
