#include "cloudeye/frame.hpp"

#include <stdexcept>

#include "cloudeye/kernels.hpp"

namespace cloudeye {

double frame_diff(const Frame& a, const Frame& b) {
  if (a.width != b.width || a.height != b.height) {
    throw std::invalid_argument("frame_diff: dimension mismatch");
  }
  if (a.pixels.empty()) return 0.0;
  const std::uint64_t sum = kernels::abs_diff_sum(a.pixels, b.pixels);
  return static_cast<double>(sum) / (255.0 * static_cast<double>(a.pixels.size()));
}

}  // namespace cloudeye
