#include "leosat/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "leosat/errors.hpp"

namespace leosat {

void write_network(BinaryWriter& out, const MlpNetwork& net) {
  const auto& o = net.options();
  out.u32(static_cast<std::uint32_t>(o.input_size));
  out.u32(static_cast<std::uint32_t>(o.output_size));
  out.u32(static_cast<std::uint32_t>(o.hidden.size()));
  for (int h : o.hidden) out.u32(static_cast<std::uint32_t>(h));
  out.u32(o.batch_norm ? 1 : 0);
  out.f64(o.leaky_slope);
  out.f64(o.bn_momentum);
  out.f64(o.bn_epsilon);
  out.f64(o.output_init_scale);
  out.u32(static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& l : net.layers()) {
    out.u32(static_cast<std::uint32_t>(l.kind));
    out.u32(static_cast<std::uint32_t>(l.in));
    out.u32(static_cast<std::uint32_t>(l.out));
  }
  out.vector(net.parameters());
  out.u32(static_cast<std::uint32_t>(net.batch_norm_states().size()));
  for (const auto& s : net.batch_norm_states()) {
    out.vector(s.running_mean);
    out.vector(s.running_var);
  }
}

MlpNetwork read_network(BinaryReader& in) {
  MlpOptions o;
  o.input_size = static_cast<int>(in.u32());
  o.output_size = static_cast<int>(in.u32());
  const auto hidden = in.u32();
  if (hidden > 1024) throw FormatError("implausible hidden layer count");
  o.hidden.clear();
  for (std::uint32_t i = 0; i < hidden; ++i) o.hidden.push_back(static_cast<int>(in.u32()));
  o.batch_norm = in.u32() != 0;
  o.leaky_slope = in.f64();
  o.bn_momentum = in.f64();
  o.bn_epsilon = in.f64();
  o.output_init_scale = in.f64();

  MlpNetwork net(o);
  const auto layer_count = in.u32();
  if (layer_count != net.layers().size()) throw FormatError("network layer count mismatch");
  for (const auto& l : net.layers()) {
    const auto kind = in.u32();
    const auto lin = in.u32();
    const auto lout = in.u32();
    if (kind != static_cast<std::uint32_t>(l.kind) || lin != static_cast<std::uint32_t>(l.in) ||
        lout != static_cast<std::uint32_t>(l.out)) {
      throw FormatError("network layer shape mismatch");
    }
  }
  Eigen::VectorXd params = in.vector();
  if (params.size() != net.parameters().size()) throw FormatError("network parameter count mismatch");
  net.parameters() = std::move(params);
  const auto bn_count = in.u32();
  if (bn_count != net.batch_norm_states().size()) throw FormatError("batch-norm layer count mismatch");
  for (auto& s : net.batch_norm_states()) {
    Eigen::VectorXd mean = in.vector();
    Eigen::VectorXd var = in.vector();
    if (mean.size() != s.running_mean.size() || var.size() != s.running_var.size()) {
      throw FormatError("batch-norm statistics size mismatch");
    }
    s.running_mean = std::move(mean);
    s.running_var = std::move(var);
  }
  return net;
}

void write_adam(BinaryWriter& out, const Adam& opt) {
  out.f64(opt.schedule().base_lr);
  out.f64(opt.schedule().final_fraction);
  out.i64(opt.schedule().total_steps);
  out.f64(opt.options().beta1);
  out.f64(opt.options().beta2);
  out.f64(opt.options().epsilon);
  out.i64(opt.step_count());
  out.vector(opt.first_moment());
  out.vector(opt.second_moment());
}

Adam read_adam(BinaryReader& in) {
  CosineDecay schedule;
  schedule.base_lr = in.f64();
  schedule.final_fraction = in.f64();
  schedule.total_steps = in.i64();
  AdamOptions options;
  options.beta1 = in.f64();
  options.beta2 = in.f64();
  options.epsilon = in.f64();
  const auto steps = in.i64();
  Eigen::VectorXd m = in.vector();
  Eigen::VectorXd v = in.vector();
  Adam opt(m.size(), schedule, options);
  opt.restore(std::move(m), std::move(v), steps);
  return opt;
}

std::string encode_checkpoint(const SacAgent& agent) {
  std::ostringstream os(std::ios::binary);
  BinaryWriter out(os);
  out.raw({kCheckpointMagic, sizeof kCheckpointMagic});
  out.u32(kCheckpointVersion);
  out.string(agent.config.to_text());
  out.string(agent.options.to_text());
  out.i64(agent.stats.sample_count);
  out.vector(agent.stats.mean);
  out.vector(agent.stats.scale);
  out.f64(agent.log_alpha);
  out.i64(agent.inference_steps);
  out.i64(agent.learning_steps);
  write_network(out, agent.actor);
  write_adam(out, agent.actor_opt);
  out.u32(static_cast<std::uint32_t>(agent.critics.size()));
  for (std::size_t c = 0; c < agent.critics.size(); ++c) {
    write_network(out, agent.critics[c]);
    write_adam(out, agent.critic_opts[c]);
  }
  std::string bytes = os.str();
  std::ostringstream trailer(std::ios::binary);
  BinaryWriter(trailer).u64(fnv1a64(bytes));
  return bytes + trailer.str();
}

SacAgent decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kCheckpointMagic + 12) throw FormatError("checkpoint too short");
  const std::string body = bytes.substr(0, bytes.size() - 8);
  {
    std::istringstream ts(bytes.substr(bytes.size() - 8), std::ios::binary);
    if (BinaryReader(ts).u64() != fnv1a64(body)) throw FormatError("checkpoint checksum mismatch");
  }
  std::istringstream is(body, std::ios::binary);
  BinaryReader in(is);
  if (in.raw(sizeof kCheckpointMagic) != std::string(kCheckpointMagic, sizeof kCheckpointMagic)) {
    throw FormatError("not a checkpoint file (bad magic)");
  }
  if (const auto version = in.u32(); version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  SacAgent agent;
  agent.config = parse_config(in.string());
  agent.options = parse_sac_options(in.string());
  agent.stats.sample_count = static_cast<int>(in.i64());
  agent.stats.mean = in.vector();
  agent.stats.scale = in.vector();
  agent.log_alpha = in.f64();
  agent.inference_steps = in.i64();
  agent.learning_steps = in.i64();
  agent.actor = read_network(in);
  agent.actor_opt = read_adam(in);
  const auto critics = in.u32();
  if (critics > 64) throw FormatError("implausible critic count");
  for (std::uint32_t c = 0; c < critics; ++c) {
    agent.critics.push_back(read_network(in));
    agent.critic_opts.push_back(read_adam(in));
  }
  if (agent.actor.input_size() != agent.state_size()) {
    throw FormatError("actor input width does not match the stored scenario");
  }
  return agent;
}

void save_checkpoint(const SacAgent& agent, const std::string& path) {
  const std::string bytes = encode_checkpoint(agent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing checkpoint '" + path + "'");
}

SacAgent load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

std::string describe_checkpoint(const SacAgent& agent) {
  std::ostringstream os;
  os << "format_version=" << kCheckpointVersion << '\n'
     << "num_users=" << agent.num_users() << '\n'
     << "num_antennas=" << agent.num_antennas() << '\n'
     << "inference_steps=" << agent.inference_steps << '\n'
     << "learning_steps=" << agent.learning_steps << '\n'
     << "log_alpha=" << format_double(agent.log_alpha) << '\n'
     << "actor_parameters=" << agent.actor.parameters().size() << '\n'
     << "critics=" << agent.critics.size() << '\n'
     << "standardization_samples=" << agent.stats.sample_count << '\n'
     << "actor_lr_next=" << format_double(agent.actor_opt.current_lr()) << '\n'
     << "checksum=" << std::hex << fnv1a64(encode_checkpoint(agent)) << std::dec << '\n'
     << "[scenario]\n"
     << agent.config.to_text() << "[learner]\n"
     << agent.options.to_text();
  return os.str();
}

}  // namespace leosat
