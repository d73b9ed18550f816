#pragma once

#include <string>

#include <json.hpp>

#include "faseg/decoder.hpp"

namespace faseg::cli {

struct BenchConfig {
  int repeats = 5;
  int warmup = 2;
};

struct CliConfig {
  DecoderConfig decoder;
  std::string dtype = "f64";  // "f64" | "f32" (f32 serves the benchmark path)
  std::string out_dir = "out";
  bool export_attention = false;
  BenchConfig bench;
};

/// Strict parse: unknown keys are rejected, type errors name the key, and
/// the resulting decoder config is validated. Missing keys keep defaults.
CliConfig parse_cli_config(const nlohmann::json& j);

/// Load and parse a config file; throws ConfigError for unreadable or
/// invalid content.
CliConfig load_cli_config(const std::string& path);

/// Full config echo with every default materialized.
nlohmann::json echo_config(const CliConfig& c);

int bytes_per_elem(const std::string& dtype);  // 8 for f64, 4 for f32

}  // namespace faseg::cli
