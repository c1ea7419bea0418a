#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "qcomp/baselines.hpp"
#include "qcomp/evaluate.hpp"
#include "qcomp/mdp.hpp"
#include "qcomp/simulate.hpp"
#include "qcomp/train.hpp"

namespace qcomp {

/// A key was not recognized or its value did not parse.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& what) : Error(what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Flat key=value configuration with section prefixes (mdp.discount=0.97).
/// Every key has a default; setting an unknown key throws ConfigError.
class Config {
 public:
  /// Defaults for "desk" or "paper".
  static Config profile(const std::string& name);

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  /// Reads key=value lines; blank lines and lines starting with '#' or '//'
  /// are skipped.
  void merge_file(const std::filesystem::path& path);
  /// "key=value" override.
  void merge_assignment(const std::string& assignment);

  /// Canonical text: sorted key=value lines. The thread count is left out
  /// because it never changes results.
  std::string canonical() const;
  /// FNV-1a of canonical(), 16 hex digits.
  std::string hash() const;

  double number(const std::string& key) const;
  std::uint64_t integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
  Advisory advisory(const std::string& key) const;

  std::uint64_t seed() const { return integer("seed"); }
  std::size_t threads() const { return static_cast<std::size_t>(integer("threads")); }

  GridSpec grid() const;
  MdpConfig mdp() const;
  TreeFitOptions tree() const;
  LinearFitOptions linear() const;
  TrainConfig train() const;
  PolicyAdjustments policy() const;
  SliceSpec slice() const;
  SimConfig sim() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace qcomp
