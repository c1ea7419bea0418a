#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "qcomp/mlp.hpp"
#include "qcomp/train.hpp"

namespace qcomp {

// Text network format, one record per line:
//   // comment lines (any number, only before the header)
//   number of weight layers
//   layer sizes, comma separated
//   input means
//   input ranges
//   output mean,output range
//   per layer: one weight row per output neuron, then the bias row
// Values use 9 significant digits, enough to round-trip any f32.

class NetFormatError : public Error {
 public:
  NetFormatError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::string encode_net(const Mlp& net, const std::vector<std::string>& comments = {});
/// Normalization constants are rounded to f32 on read.
Mlp decode_net(std::string_view text);
/// Comment lines of an encoded network, without the leading "//".
std::vector<std::string> net_comments(std::string_view text);

void save_net(const Mlp& net, const std::filesystem::path& path, const std::vector<std::string>& comments = {});
Mlp load_net(const std::filesystem::path& path);

inline constexpr const char* kManifestName = "manifest.csv";

/// File name of the member for (tau index, a_prev).
std::string member_filename(std::size_t tau_index, Advisory a_prev);

/// Writes one file per member plus manifest.csv into dir. Returns the total
/// bytes written.
std::size_t save_array(const NetworkArray& array, const std::filesystem::path& dir,
                       const std::vector<std::string>& comments = {});
NetworkArray load_array(const std::filesystem::path& dir);

/// Bytes of every file save_array would write.
std::size_t array_serialized_bytes(const NetworkArray& array, const std::vector<std::string>& comments = {});

}  // namespace qcomp
