#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "perplab/data_io.hpp"
#include "perplab/jump_engine.hpp"
#include "perplab/market_sim.hpp"
#include "perplab/payoffs.hpp"
#include "perplab/perp_engine.hpp"

namespace perplab::cli {

enum class Command { funding, replicate, jump, backtest };

const char* to_string(Command c) noexcept;

/// Invalid configuration. The message starts with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct GridConfig {
  double horizon = 1.0;
  std::size_t steps = 252;
};

struct ExperimentConfig {
  std::size_t n_paths = 1;
  std::uint64_t seed = 0;
  std::vector<std::size_t> grid_sizes;
  RateKind kind = RateKind::funding;
  RateMode mode = RateMode::model;
  // jump command
  std::optional<std::vector<double>> hedge_powers;
  double condition_threshold = 1e12;
  std::optional<double> maturity;
  std::optional<double> roll_interval;
  std::size_t inner_paths = 10000;
};

struct OutputConfig {
  std::string directory = "perplab_out";
  bool csv = true;
  bool txt = true;
  bool json = true;
  /// Write per-step CSVs for every path instead of path 0 only.
  bool per_path = false;
};

struct DataConfig {
  std::string path;
  std::optional<RateSource> rate;
  CsvSchema schema;
  DiscountOptions discount;
};

struct RunConfig {
  Command command = Command::funding;
  DiffusionSpec diffusion;
  JumpSpec jump;
  Payoff payoff = payoffs::linear(0.0, 1.0);
  std::string payoff_label;
  GridConfig grid;
  ExperimentConfig experiment;
  OutputConfig output;
  DataConfig data;
};

/// Parses and validates a JSON config for `command`. Unknown keys, wrong
/// types and out-of-range values raise ConfigError naming the field.
RunConfig parse_config(const std::string& json_text, Command command);
RunConfig load_config(const std::string& path, Command command);

/// Builds a payoff from its config name and parameters.
Payoff make_payoff(const std::string& name, const std::vector<std::pair<std::string, double>>& params);

}  // namespace perplab::cli
