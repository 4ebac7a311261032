#pragma once

#include <optional>
#include <string>

#include "cloudeye/pipeline.hpp"

namespace cloudeye {

// Parsed scenario description: either a synthetic scene spec or a frames
// directory with annotations, plus the bandwidth trace and pipeline config.
struct ScenarioFile {
  std::uint64_t seed = 1;
  std::optional<SyntheticSpec> synthetic;
  std::string frames_dir;
  std::string annotations;
  std::string trace;      // empty -> constant 1 MB/s default
  std::string config_set;
  std::string pq_index;
  PipelineConfig config;
};

// Throws std::runtime_error with file:line anchoring on malformed input.
ScenarioFile load_scenario_file(const std::string& path);

void save_scenario_file(const ScenarioFile& scenario, const std::string& path);

}  // namespace cloudeye
