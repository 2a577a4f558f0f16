#include "rcm/config.hpp"

#include <fstream>

#include "rcm/io.hpp"

namespace rcm {

const Ensemble& ExperimentConfig::require_ensemble() const {
  if (!ensemble) throw ConfigError("config error at /ensemble: missing ensemble");
  return *ensemble;
}

const Observable& ExperimentConfig::require_observable() const {
  if (!observable) throw ConfigError("config error at /observable: missing observable");
  return *observable;
}

double ExperimentConfig::num(const char* key, double dflt) const {
  if (!raw.contains(key)) return dflt;
  if (!raw.at(key).is_number())
    throw ConfigError(std::string("config error at /") + key + ": expected a number");
  return raw.at(key).get<double>();
}

std::size_t ExperimentConfig::count(const char* key, std::size_t dflt) const {
  if (!raw.contains(key)) return dflt;
  if (!raw.at(key).is_number_unsigned() && !raw.at(key).is_number_integer())
    throw ConfigError(std::string("config error at /") + key +
                      ": expected a nonnegative integer");
  const auto v = raw.at(key).get<long long>();
  if (v < 0)
    throw ConfigError(std::string("config error at /") + key +
                      ": expected a nonnegative integer");
  return static_cast<std::size_t>(v);
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(raw.dump())); }

ExperimentConfig config_from_json(nlohmann::json j) {
  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.name = j.value("name", std::string("default"));
  if (j.contains("ensemble")) {
    try {
      cfg.ensemble = Ensemble::from_json(j.at("ensemble"));
    } catch (const Error& e) {
      throw ConfigError(std::string("config error at /ensemble: ") + e.what());
    }
  }
  cfg.grid = static_cast<int>(cfg.count("grid", 4096));
  if (cfg.grid < 8 || (cfg.grid & (cfg.grid - 1)) != 0)
    throw ConfigError("config error at /grid: grid size must be a power of two >= 8");
  cfg.alpha = cfg.num("alpha", 0.5);
  if (cfg.alpha <= 0.0 || cfg.alpha > 1.0)
    throw ConfigError("config error at /alpha: alpha must lie in (0,1]");
  if (j.contains("K") && j.at("K").is_number()) cfg.K = j.at("K").get<double>();
  cfg.K_dprime = cfg.num("K_dprime", 1.0);
  if (!j.contains("seed"))
    throw ConfigError("config error at /seed: explicit seed required");
  cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("observable")) {
    try {
      cfg.observable = Observable::from_json(j.at("observable"), cfg.grid);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config error at /observable: ") + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config error: cannot open " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config error: invalid JSON in ") + path + ": " + e.what());
  }
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config error: override must be key=value, got " + ov);
    const std::string key = ov.substr(0, eq);
    const std::string val = ov.substr(eq + 1);
    try {
      j[key] = nlohmann::json::parse(val);
    } catch (...) {
      j[key] = val;  // plain string
    }
  }
  return config_from_json(std::move(j));
}

}  // namespace rcm
