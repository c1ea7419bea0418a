#include "qcomp/table_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace qcomp {

const char* to_string(DecodeErrorKind k) {
  switch (k) {
    case DecodeErrorKind::BadMagic: return "bad magic";
    case DecodeErrorKind::BadVersion: return "unsupported version";
    case DecodeErrorKind::BadShape: return "bad shape";
    case DecodeErrorKind::Truncated: return "truncated payload";
    case DecodeErrorKind::NonFinite: return "non-finite value";
    case DecodeErrorKind::TrailingBytes: return "trailing bytes";
  }
  return "?";
}

namespace le {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xffu));
}

void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

void Reader::expect(std::size_t n) const {
  if (remaining() < n) {
    throw DecodeError(DecodeErrorKind::Truncated, "decode: truncated payload at byte " + std::to_string(pos_) +
                                                      ", need " + std::to_string(n) + " more");
  }
}

std::uint32_t Reader::u32() {
  expect(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

float Reader::f32() { return std::bit_cast<float>(u32()); }

std::uint8_t Reader::u8() {
  expect(1);
  return bytes_[pos_++];
}

}  // namespace le

std::size_t table_header_bytes(const GridSpec& grid) {
  std::size_t n = 4 + 4 + 4 + 4;
  for (const auto& c : grid.all_cuts()) n += 4 + 4 * c.size();
  return n;
}

std::vector<std::uint8_t> encode_table(const GridSpec& grid, std::span<const float> scores) {
  for (std::size_t k = 0; k < kNumContinuousDims; ++k) {
    if (grid.all_cuts()[k].empty()) {
      throw EncodeError(std::string("encode: dimension ") + dim_name(static_cast<Dim>(k)) + " has no cutpoints");
    }
  }
  if (scores.size() != grid.num_states() * kNumAdvisories) {
    throw EncodeError("encode: score count does not match grid");
  }
  std::vector<std::uint8_t> out;
  out.reserve(table_header_bytes(grid) + 4 * scores.size());
  out.insert(out.end(), std::begin(kTableMagic), std::end(kTableMagic));
  le::put_u32(out, kTableVersion);
  le::put_u32(out, static_cast<std::uint32_t>(kNumContinuousDims + 1));
  for (const auto& c : grid.all_cuts()) {
    le::put_u32(out, static_cast<std::uint32_t>(c.size()));
    for (double v : c) {
      const float f = static_cast<float>(v);
      if (static_cast<double>(f) != v) throw EncodeError("encode: cutpoint not representable as f32");
      le::put_f32(out, f);
    }
  }
  le::put_u32(out, static_cast<std::uint32_t>(kNumAdvisories));
  for (float s : scores) le::put_f32(out, s);
  return out;
}

std::vector<std::uint8_t> encode_table(const ScoreTable& table) { return encode_table(table.grid(), table.scores()); }

ScoreTable decode_table(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kTableMagic, 4) != 0) {
    throw DecodeError(DecodeErrorKind::BadMagic, "decode: missing ACTB magic");
  }
  le::Reader r(bytes.subspan(4));
  if (const auto version = r.u32(); version != kTableVersion) {
    throw DecodeError(DecodeErrorKind::BadVersion, "decode: unsupported table version " + std::to_string(version));
  }
  if (const auto dims = r.u32(); dims != kNumContinuousDims + 1) {
    throw DecodeError(DecodeErrorKind::BadShape, "decode: expected 7 dimensions, got " + std::to_string(dims));
  }
  std::array<std::vector<double>, kNumContinuousDims> cuts;
  for (auto& c : cuts) {
    const std::uint32_t n = r.u32();
    r.expect(4ull * n);
    c.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      const float f = r.f32();
      if (!std::isfinite(f)) throw DecodeError(DecodeErrorKind::NonFinite, "decode: non-finite cutpoint");
      c.push_back(f);
    }
  }
  if (const auto actions = r.u32(); actions != kNumAdvisories) {
    throw DecodeError(DecodeErrorKind::BadShape, "decode: expected 5 actions, got " + std::to_string(actions));
  }
  GridSpec grid(std::move(cuts));
  try {
    grid.validate();
  } catch (const std::invalid_argument& e) {
    throw DecodeError(DecodeErrorKind::BadShape, std::string("decode: ") + e.what());
  }
  const std::size_t count = grid.num_states() * kNumAdvisories;
  r.expect(4 * count);
  std::vector<float> scores(count);
  for (std::size_t i = 0; i < count; ++i) {
    scores[i] = r.f32();
    if (!std::isfinite(scores[i])) {
      throw DecodeError(DecodeErrorKind::NonFinite, "decode: non-finite score at flat index " + std::to_string(i));
    }
  }
  if (r.remaining() != 0) {
    throw DecodeError(DecodeErrorKind::TrailingBytes, "decode: " + std::to_string(r.remaining()) + " trailing bytes");
  }
  return ScoreTable(std::move(grid), std::move(scores));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

void save_table(const ScoreTable& table, const std::filesystem::path& path) {
  write_file_bytes(path, encode_table(table));
}

ScoreTable load_table(const std::filesystem::path& path) { return decode_table(read_file_bytes(path)); }

}  // namespace qcomp
