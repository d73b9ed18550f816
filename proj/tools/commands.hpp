#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "cli_config.hpp"

namespace faseg::cli {

/// Deterministic end-to-end run; writes report.json and, when enabled, one
/// graymap per (block, query) into out_dir. Returns a process exit code.
int run_demo(const CliConfig& cfg, const std::string& out_dir, std::ostream& os);

/// Full gradient suite; prints one line per check. Exit 0 iff all pass.
/// Requires dtype f64 (exit 2 otherwise).
int run_gradcheck(const CliConfig& cfg, bool inject_fault, std::ostream& os);

/// Dense vs omega-restricted cost reports at the configured sizes.
int run_flops(const CliConfig& cfg, std::ostream& os);

/// Median-of-repeats forward timing, dense vs omega-restricted; writes
/// bench.json into out_dir.
int run_bench(const CliConfig& cfg, const std::string& out_dir, std::ostream& os);

/// JSON forms used by run_demo / run_flops (exposed for tests).
nlohmann::json demo_report_json(const CliConfig& cfg);
nlohmann::json flops_report_json(const CliConfig& cfg);

}  // namespace faseg::cli
