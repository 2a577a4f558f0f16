#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "rcm/ensemble.hpp"

namespace rcm::accept {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  std::string data_csv;
  nlohmann::json summary;  // no timings: must be byte-stable across reruns
};

struct Options {
  std::uint64_t seed = 0x5eed2025;
  int grid_n = 4096;
  bool run_determinism = true;  // criterion 11 re-runs 1-10 and compares bytes
};

// benchmark ensembles
Ensemble doubling_ensemble();
Ensemble mix_a();

std::vector<CriterionResult> run_criteria(const Options& opt);

// Runs everything, prints one pass/fail line per criterion, writes
// data.csv + summary.json per criterion under out_dir.
std::vector<CriterionResult> run_all(const Options& opt, const std::string& out_dir);

bool all_passed(const std::vector<CriterionResult>& rs);

}  // namespace rcm::accept
