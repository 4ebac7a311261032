#include "cloudeye/cloud_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cloudeye/kernels.hpp"
#include "cloudeye/rng.hpp"

namespace cloudeye {

double box_fidelity(const Frame& decoded, const Frame& original,
                    const BoundingBox& box, const CloudModelConfig& cfg) {
  if (decoded.width != original.width || decoded.height != original.height) {
    throw std::invalid_argument("box_fidelity: dimension mismatch");
  }
  const int x0 = std::clamp(static_cast<int>(std::floor(box.x_min)), 0, decoded.width - 1);
  const int y0 = std::clamp(static_cast<int>(std::floor(box.y_min)), 0, decoded.height - 1);
  const int x1 = std::clamp(static_cast<int>(std::ceil(box.x_max)), x0 + 1, decoded.width);
  const int y1 = std::clamp(static_cast<int>(std::ceil(box.y_max)), y0 + 1, decoded.height);

  const std::uint64_t sq = kernels::sq_diff_sum_region(decoded, original, x0, y0, x1, y1);
  const double n = static_cast<double>(x1 - x0) * (y1 - y0) * 3.0;
  const double mse = static_cast<double>(sq) / n;
  if (mse <= 0.0) return 1.0;
  const double psnr = 10.0 * std::log10(255.0 * 255.0 / mse);
  if (psnr >= cfg.psnr_sat_db) return 1.0;
  return 1.0 / (1.0 + std::exp(-(psnr - cfg.psnr_mid_db) / cfg.psnr_width_db));
}

std::vector<Detection> cloud_infer(const Frame& decoded, const Frame& original,
                                   const GroundTruth& gt,
                                   const CloudModelConfig& cfg) {
  std::vector<Detection> out;
  out.reserve(gt.boxes.size());
  const std::uint64_t frame_seed =
      derive_seed(cfg.base.rng_seed, static_cast<std::uint64_t>(decoded.id));
  for (std::size_t i = 0; i < gt.boxes.size(); ++i) {
    const auto& g = gt.boxes[i];
    Rng rng(derive_seed(frame_seed, i));
    const double fidelity = box_fidelity(decoded, original, g.box, cfg);
    const bool small = g.box.area() < cfg.base.small_area_threshold;
    const double miss = small ? cfg.base.miss_rate_small : cfg.base.miss_rate_large;
    const double keep = (1.0 - miss) * fidelity;
    if (rng.uniform01() >= keep) continue;

    BoundingBox b = g.box;
    if (cfg.base.box_jitter_sigma > 0.0) {
      b.x_min += rng.normal() * cfg.base.box_jitter_sigma;
      b.y_min += rng.normal() * cfg.base.box_jitter_sigma;
      b.x_max += rng.normal() * cfg.base.box_jitter_sigma;
      b.y_max += rng.normal() * cfg.base.box_jitter_sigma;
      if (b.x_min > b.x_max) std::swap(b.x_min, b.x_max);
      if (b.y_min > b.y_max) std::swap(b.y_min, b.y_max);
    }
    b = b.clamped(decoded.width, decoded.height);
    if (!b.valid()) continue;

    double conf = fidelity;
    if (cfg.base.confidence_noise_sigma > 0.0) {
      conf *= 1.0 - std::abs(rng.normal() * cfg.base.confidence_noise_sigma);
    }
    out.push_back({b, g.class_id, std::clamp(conf, 0.0, 1.0), Source::Cloud});
  }
  return out;
}

}  // namespace cloudeye
