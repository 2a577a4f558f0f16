#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcm/ensemble.hpp"
#include "rcm/observable.hpp"

namespace rcm {

// Configuration problems exit with status 2 and name the offending path.
struct ConfigError : Error { using Error::Error; };

struct ExperimentConfig {
  nlohmann::json raw;
  std::string name = "default";
  std::optional<Ensemble> ensemble;
  int grid = 4096;
  double alpha = 0.5;
  std::optional<double> K;  // empty = auto (<B>/(1-<A>) + 2)
  double K_dprime = 1.0;
  std::uint64_t seed = 1;
  std::optional<Observable> observable;

  const Ensemble& require_ensemble() const;
  const Observable& require_observable() const;

  // subcommand knobs with defaults
  double num(const char* key, double dflt) const;
  std::size_t count(const char* key, std::size_t dflt) const;

  std::string hash() const;
};

ExperimentConfig config_from_json(nlohmann::json j);

// Reads the file, applies key=value overrides (values parsed as JSON when
// possible), then parses. Explicit seeds only; there is no wall-clock default.
ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides);

}  // namespace rcm
