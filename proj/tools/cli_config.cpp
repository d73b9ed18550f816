#include "cli_config.hpp"

#include <fstream>
#include <set>

namespace faseg::cli {

namespace {

template <typename T>
void take(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                    const std::string& scope) {
  if (!j.is_object()) throw ConfigError("config" + scope + " must be a JSON object");
  for (const auto& item : j.items())
    if (known.find(item.key()) == known.end())
      throw ConfigError("unknown config key '" + scope + item.key() + "'");
}

}  // namespace

CliConfig parse_cli_config(const nlohmann::json& j) {
  static const std::set<std::string> kTop = {
      "seed",          "dtype",          "base_height",       "base_width",
      "num_queries",   "channels",       "heads",             "rounds",
      "scale_divisors", "hrca_enabled",  "hrca_divisor",      "omega_divisor",
      "omega_source_divisor", "pq_variant", "attn_variant",   "pe_kind",
      "dfpq_start_round", "mask_threshold", "noise_sigma",    "mlp_hidden",
      "out_dir",       "export_attention", "bench"};
  static const std::set<std::string> kBench = {"repeats", "warmup"};

  reject_unknown(j, kTop, "");
  CliConfig c;
  DecoderConfig& d = c.decoder;
  take(j, "seed", d.seed);
  take(j, "dtype", c.dtype);
  if (c.dtype != "f64" && c.dtype != "f32")
    throw ConfigError("config key 'dtype' must be \"f64\" or \"f32\"");
  take(j, "base_height", d.base_h);
  take(j, "base_width", d.base_w);
  take(j, "num_queries", d.num_queries);
  take(j, "channels", d.channels);
  take(j, "heads", d.heads);
  take(j, "rounds", d.rounds);
  take(j, "scale_divisors", d.scale_divisors);
  take(j, "hrca_enabled", d.hrca_enabled);
  take(j, "hrca_divisor", d.hrca_divisor);
  take(j, "omega_divisor", d.omega_divisor);
  take(j, "omega_source_divisor", d.omega_source_divisor);
  if (j.contains("pq_variant")) {
    std::string s;
    take(j, "pq_variant", s);
    d.pq_variant = parse_pq_variant(s);
  }
  if (j.contains("attn_variant")) {
    std::string s;
    take(j, "attn_variant", s);
    d.attn_variant = parse_attn_variant(s);
  }
  if (j.contains("pe_kind")) {
    std::string s;
    take(j, "pe_kind", s);
    d.pe_kind = parse_pe_kind(s);
  }
  take(j, "dfpq_start_round", d.dfpq_start_round);
  take(j, "mask_threshold", d.mask_threshold);
  take(j, "noise_sigma", d.noise_sigma);
  take(j, "mlp_hidden", d.mlp_hidden);
  take(j, "out_dir", c.out_dir);
  take(j, "export_attention", c.export_attention);
  if (j.contains("bench")) {
    const auto& b = j.at("bench");
    reject_unknown(b, kBench, "bench.");
    take(b, "repeats", c.bench.repeats);
    take(b, "warmup", c.bench.warmup);
  }
  if (c.bench.repeats < 3) throw ConfigError("config key 'bench.repeats' must be >= 3");
  if (c.bench.warmup < 0) throw ConfigError("config key 'bench.warmup' must be >= 0");
  d.validate();
  return c;
}

CliConfig load_cli_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_cli_config(j);
}

nlohmann::json echo_config(const CliConfig& c) {
  const DecoderConfig& d = c.decoder;
  nlohmann::json j;
  j["seed"] = d.seed;
  j["dtype"] = c.dtype;
  j["base_height"] = d.base_h;
  j["base_width"] = d.base_w;
  j["num_queries"] = d.num_queries;
  j["channels"] = d.channels;
  j["heads"] = d.heads;
  j["rounds"] = d.rounds;
  j["scale_divisors"] = d.scale_divisors;
  j["hrca_enabled"] = d.hrca_enabled;
  j["hrca_divisor"] = d.hrca_divisor;
  j["omega_divisor"] = d.omega_divisor;
  j["omega_source_divisor"] = d.omega_source_divisor;
  j["pq_variant"] = to_string(d.pq_variant);
  j["attn_variant"] = to_string(d.attn_variant);
  j["pe_kind"] = to_string(d.pe_kind);
  j["dfpq_start_round"] = d.dfpq_start_round;
  j["mask_threshold"] = d.mask_threshold;
  j["noise_sigma"] = d.noise_sigma;
  j["mlp_hidden"] = d.mlp_hidden;
  j["out_dir"] = c.out_dir;
  j["export_attention"] = c.export_attention;
  j["bench"]["repeats"] = c.bench.repeats;
  j["bench"]["warmup"] = c.bench.warmup;
  return j;
}

int bytes_per_elem(const std::string& dtype) { return dtype == "f32" ? 4 : 8; }

}  // namespace faseg::cli
