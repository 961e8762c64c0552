#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "htclt/ensembles.hpp"
#include "htclt/fixedpoint.hpp"
#include "htclt/mcstats.hpp"

namespace htclt {

/// "2i", "1+1i", "-0.5-2i", "3", "1e-3i". Throws ConfigError.
cplx parse_complex(const std::string& text);
std::vector<cplx> parse_complex_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);
/// "x:w, x:w"
std::vector<Atom> parse_atoms(const std::string& text);

/// INI configuration with sections [run], [ensemble], [experiment], [solver],
/// [covariance], [verify]. Unknown keys are rejected.
class AppConfig {
 public:
  AppConfig() = default;
  static AppConfig load(const std::string& path);
  static AppConfig parse(const std::string& text, const std::string& origin = "<string>");

  const std::string& origin() const noexcept { return origin_; }
  const boost::property_tree::ptree& tree() const noexcept { return tree_; }

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Command-line overrides of [run] seed and threads.
  void set(const std::string& key, const std::string& value);

  EnsembleSpec ensemble() const;
  ExperimentConfig experiment() const;
  SolverOptions solver() const;
  CovarianceOptions covariance() const;
  std::uint64_t seed() const { return get_u64("run.seed", 0); }
  int threads() const { return get_int("run.threads", 0); }

  /// Flat sorted key=value text of every setting.
  std::string snapshot() const;

 private:
  void check_keys() const;

  std::string origin_;
  boost::property_tree::ptree tree_;
};

}  // namespace htclt
