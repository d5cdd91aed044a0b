#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "socising/fk.hpp"
#include "socising/ising.hpp"

namespace socising::experiments {

inline constexpr int kCsvSchemaVersion = 1;

/// One documented configuration key.
struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string description;
};

/// The full schema, in the order keys are printed and serialized.
const std::vector<ConfigKey>& config_schema();
const std::vector<std::string>& command_names();

/// Bad configuration; key() names the offending key (empty for syntax errors).
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::invalid_argument(message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Flat key = value configuration. Every schema key is always present;
/// set() rejects keys outside the schema.
class ExperimentConfig {
 public:
  ExperimentConfig();

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;

  /// Parses "key = value" lines; '#' starts a comment.
  void merge_text(std::string_view text);
  void merge_file(const std::filesystem::path& path);

  long get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_real(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;
  /// Comma list of reals; the literals "Tc" and "pc" resolve to the critical
  /// temperature and to p_c(q) for the configured q.
  std::vector<double> get_real_list(const std::string& key) const;

  /// Parses every key and checks ranges and enumerations.
  void validate() const;

  /// The effective configuration as "key = value" lines, schema order.
  std::string to_text() const;
  std::string to_json() const;

 private:
  std::map<std::string, std::string> values_;
};

struct RunOutcome {
  std::filesystem::path directory;
  std::size_t row_count = 0;
  std::string summary_json;  // contents of summary.json
};

/// Runs config's command and writes metadata.json, rows.csv and
/// summary.json under the "out" directory. tail-fit adds tail.csv; soc-run,
/// soc-compare and fk-sample add final_configs.jsonl with the last state of
/// each chain.
/// On failure every file this run created is removed before rethrowing.
RunOutcome run_experiment(const ExperimentConfig& config);

/// Wilson score interval at 95%.
struct Interval {
  double low = 0.0;
  double high = 0.0;
};
Interval wilson_interval(std::size_t successes, std::size_t trials);

/// One-line JSON: {n, a (if given), T, seed, vertex_order, spins: [±1 ...]}.
std::string serialize_spins(const SpinConfig& sigma, double temperature, std::optional<double> a,
                            std::uint64_t seed);
SpinConfig deserialize_spins(std::string_view text);

/// One-line JSON: {n, p, q, bc, seed, edge_order, bonds: "0110..."} with
/// one character per edge in edge order.
std::string serialize_bonds(const BondConfig& omega, const FKParams& params, std::uint64_t seed);
BondConfig deserialize_bonds(std::string_view text);

/// Shortest decimal that round-trips, as used in every CSV cell.
std::string format_real(double x);

}  // namespace socising::experiments
