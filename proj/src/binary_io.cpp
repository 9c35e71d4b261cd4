#include "leosat/binary_io.hpp"

#include <bit>
#include <istream>
#include <ostream>

#include "leosat/errors.hpp"

namespace leosat {

namespace {

// Upper bound on any length prefix; guards against reading garbage sizes.
constexpr std::uint64_t kMaxLength = std::uint64_t{1} << 34;

template <typename T>
void put_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw FormatError("unexpected end of checkpoint data");
  }
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void BinaryWriter::u32(std::uint32_t v) { put_le(out_, v); }
void BinaryWriter::u64(std::uint64_t v) { put_le(out_, v); }
void BinaryWriter::i64(std::int64_t v) { put_le(out_, static_cast<std::uint64_t>(v)); }
void BinaryWriter::f64(double v) { put_le(out_, std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::string(std::string_view s) {
  u64(s.size());
  out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BinaryWriter::vector(const Eigen::VectorXd& v) {
  u64(static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
}

void BinaryWriter::raw(std::string_view bytes) {
  out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::uint32_t BinaryReader::u32() { return get_le<std::uint32_t>(in_); }
std::uint64_t BinaryReader::u64() { return get_le<std::uint64_t>(in_); }
std::int64_t BinaryReader::i64() { return static_cast<std::int64_t>(get_le<std::uint64_t>(in_)); }
double BinaryReader::f64() { return std::bit_cast<double>(get_le<std::uint64_t>(in_)); }

std::string BinaryReader::string() {
  const auto n = u64();
  if (n > kMaxLength) throw FormatError("string length out of range");
  return raw(static_cast<std::size_t>(n));
}

Eigen::VectorXd BinaryReader::vector() {
  const auto n = u64();
  if (n > kMaxLength) throw FormatError("vector length out of range");
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = f64();
  return v;
}

std::string BinaryReader::raw(std::size_t n) {
  std::string s(n, '\0');
  if (n > 0 && !in_.read(s.data(), static_cast<std::streamsize>(n))) {
    throw FormatError("unexpected end of checkpoint data");
  }
  return s;
}

}  // namespace leosat
