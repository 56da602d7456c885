#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "urllc/mcsim.hpp"
#include "urllc/regnn.hpp"
#include "urllc/topology.hpp"

namespace urllc::cli {

enum class TopologyKind { bipolar, random_area, hexagonal, file };
enum class PolicySource { es, regnn, no_rep, k_rep, explicit_nm };

struct TopologyConfig {
  TopologyKind kind = TopologyKind::bipolar;
  SymmetricScenario symmetric;
  double area_km2 = 0.25;
  double guard_m = -1.0;
  RandomAreaOptions random_area;
  HexOptions hex;
  std::string path;  // instance file for kind = file
};

struct PolicyConfig {
  PolicySource source = PolicySource::es;
  std::string checkpoint;
  int n = 1;
  int m = 1;
};

struct TrainBlock {
  TrainConfig config;
  RegnnHyper hyper;
  int checkpoint_interval = 50;
  std::string resume;
};

struct EvalBlock {
  std::vector<PolicySource> compare;  // extra baselines evaluated on the same instances
  bool cdf = false;
};

struct AnalyzeBlock {
  std::string sweep = "density";  // density, lambda0 or gamma
  std::vector<double> values;
  int n0 = 0;  // 0 selects the search optimum
  int m0 = 0;
};

struct ExperimentConfig {
  int version = 1;
  std::uint64_t seed = 1;
  TopologyConfig topology;
  QosSpec qos;
  PolicyConfig policy;
  McOptions mc;
  TrainBlock train;
  EvalBlock eval;
  AnalyzeBlock analyze;
};

// Strict parse: unknown keys and out-of-range values raise ConfigError naming the field.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig default_config();

// Canonical JSON of the fully resolved config; its FNV-1a hash tags every output.
std::string canonical_json(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);

std::string to_string(PolicySource source);

}  // namespace urllc::cli
