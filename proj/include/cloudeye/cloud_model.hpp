#pragma once

#include <vector>

#include "cloudeye/frame.hpp"
#include "cloudeye/geometry.hpp"
#include "cloudeye/scripted_model.hpp"

namespace cloudeye {

// High-accuracy detector stand-in whose recall degrades with the decoded
// image fidelity of each target region: per-box PSNR against the original,
// mapped through a logistic and saturated above psnr_sat_db.
struct CloudModelConfig {
  ScriptedModelConfig base;  // miss rates default to zero
  double psnr_mid_db = 24.5;
  double psnr_width_db = 2.5;
  double psnr_sat_db = 33.0;
};

// fidelity in (0,1], exactly 1 at or above saturation
double box_fidelity(const Frame& decoded, const Frame& original,
                    const BoundingBox& box, const CloudModelConfig& cfg);

std::vector<Detection> cloud_infer(const Frame& decoded, const Frame& original,
                                   const GroundTruth& gt,
                                   const CloudModelConfig& cfg);

}  // namespace cloudeye
