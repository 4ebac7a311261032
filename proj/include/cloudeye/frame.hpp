#pragma once

#include <cstdint>
#include <vector>

namespace cloudeye {

// One video frame, row-major 8-bit RGB.
struct Frame {
  std::int64_t id = 0;
  double timestamp = 0.0;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  bool valid() const {
    return width >= 1 && height >= 1 &&
           pixels.size() == static_cast<std::size_t>(width) * height * 3;
  }

  const std::uint8_t* px(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  std::uint8_t* px(int x, int y) {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

// Mean absolute per-channel difference normalized to [0,1].
// Throws std::invalid_argument on dimension mismatch.
double frame_diff(const Frame& a, const Frame& b);

}  // namespace cloudeye
