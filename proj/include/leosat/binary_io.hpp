#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace leosat {

// Little-endian primitive encoding shared by all checkpoint sections:
//   u32/u64/i64  fixed width, little-endian
//   f64          IEEE-754 binary64 bit pattern as u64
//   string       u64 byte length, then raw bytes
//   vector       u64 element count, then f64 elements

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v);
  void f64(double v);
  void string(std::string_view s);
  void vector(const Eigen::VectorXd& v);
  void raw(std::string_view bytes);

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}

  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64();
  double f64();
  std::string string();
  Eigen::VectorXd vector();
  std::string raw(std::size_t n);

 private:
  std::istream& in_;
};

}  // namespace leosat
