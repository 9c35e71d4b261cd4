#pragma once

#include <iosfwd>
#include <string>

#include "leosat/adam.hpp"
#include "leosat/binary_io.hpp"
#include "leosat/neural.hpp"
#include "leosat/sac_trainer.hpp"

namespace leosat {

// Checkpoint container, version 1. All integers little-endian; f64 is the
// IEEE-754 bit pattern; string = u64 length + bytes; vec = u64 count + f64s.
//
//   bytes[8]  magic "LEOSATCK"
//   u32       format version (1)
//   string    scenario config (ScenarioConfig::to_text)
//   string    learner options (SacOptions::to_text, includes the transform)
//   i64       standardisation sample count
//   vec       standardisation mean (2KN)
//   vec       standardisation scale (2KN)
//   f64       log entropy scale
//   i64       inference steps taken
//   i64       learning steps taken
//   network   actor
//   adam      actor optimizer
//   u32       number of critics C
//   C x (network, adam)
//   u64       FNV-1a 64 of every preceding byte
//
// network:
//   u32 input, u32 output, u32 hidden count, u32 x hidden widths,
//   u32 batch_norm flag, f64 leaky slope, f64 bn momentum, f64 bn epsilon,
//   f64 output init scale,
//   u32 layer count, per layer (u32 kind [0 dense, 1 batch_norm, 2 leaky_relu],
//   u32 in, u32 out),
//   vec parameters,
//   u32 batch-norm layer count, per layer (vec running mean, vec running var)
//
// adam:
//   f64 base lr, f64 final fraction, i64 schedule steps,
//   f64 beta1, f64 beta2, f64 epsilon, i64 step count,
//   vec first moment, vec second moment

inline constexpr char kCheckpointMagic[8] = {'L', 'E', 'O', 'S', 'A', 'T', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_network(BinaryWriter& out, const MlpNetwork& net);
MlpNetwork read_network(BinaryReader& in);

void write_adam(BinaryWriter& out, const Adam& opt);
Adam read_adam(BinaryReader& in);

/// Serialises an agent to a byte string in the format above.
std::string encode_checkpoint(const SacAgent& agent);
SacAgent decode_checkpoint(const std::string& bytes);

void save_checkpoint(const SacAgent& agent, const std::string& path);
/// Throws FormatError on a bad magic, version, or checksum.
SacAgent load_checkpoint(const std::string& path);

/// Human-readable summary used by `inspect-checkpoint`.
std::string describe_checkpoint(const SacAgent& agent);

}  // namespace leosat
