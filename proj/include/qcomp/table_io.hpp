#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qcomp/score_table.hpp"

namespace qcomp {

// Binary table layout, little-endian:
//   "ACTB" | u32 version=1 | u32 dims=7
//   6 x { u32 n | n x f32 cutpoint }     rho, theta, psi, v_own, v_int, tau
//   u32 actions=5 | f32 scores, action index fastest

inline constexpr char kTableMagic[4] = {'A', 'C', 'T', 'B'};
inline constexpr std::uint32_t kTableVersion = 1;

enum class DecodeErrorKind { BadMagic, BadVersion, BadShape, Truncated, NonFinite, TrailingBytes };

const char* to_string(DecodeErrorKind k);

class DecodeError : public Error {
 public:
  DecodeError(DecodeErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  DecodeErrorKind kind() const { return kind_; }

 private:
  DecodeErrorKind kind_;
};

class EncodeError : public Error {
 public:
  using Error::Error;
};

/// Header bytes for a grid: magic, version, dims, cutpoint lists, action count.
std::size_t table_header_bytes(const GridSpec& grid);

std::vector<std::uint8_t> encode_table(const GridSpec& grid, std::span<const float> scores);
std::vector<std::uint8_t> encode_table(const ScoreTable& table);
ScoreTable decode_table(std::span<const std::uint8_t> bytes);

void save_table(const ScoreTable& table, const std::filesystem::path& path);
ScoreTable load_table(const std::filesystem::path& path);

// Little-endian helpers shared by the binary formats.
namespace le {
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_f32(std::vector<std::uint8_t>& out, float v);

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint32_t u32();
  float f32();
  std::uint8_t u8();
  void expect(std::size_t n) const;
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};
}  // namespace le

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace qcomp
