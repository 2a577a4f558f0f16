#pragma once

#include <string>
#include <vector>

#include "rcm/config.hpp"

namespace rcm {

extern const std::vector<std::string> kSubcommands;

// Executes one subcommand, writing <out>/<subcommand>/<name>/{data.csv,
// summary.json, manifest.json}. Returns the process exit status: 0 ok,
// 1 acceptance failure, 2 config error (thrown as ConfigError by callers
// of load_config; this function reports internal failures as exceptions).
int run_subcommand(const std::string& cmd, const ExperimentConfig& cfg,
                   const std::string& out_root, int threads);

// Aggregates every manifest under dir into a pass/fail table, failures first.
std::string report_dir(const std::string& dir);

}  // namespace rcm
