#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cloudeye {

// All-or-nothing codec/wire failures; section names the failing part.
class CodecError : public std::runtime_error {
 public:
  CodecError(std::string section, const std::string& message)
      : std::runtime_error(section + ": " + message), section_(std::move(section)) {}

  const std::string& section() const { return section_; }

 private:
  std::string section_;
};

// Baseline JPEG encode of a row-major RGB buffer, quality in [1,100].
std::vector<std::uint8_t> jpeg_encode_rgb(const std::uint8_t* rgb, int width,
                                          int height, int quality);

struct DecodedImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};

// Strict decode: any libjpeg warning (truncated or corrupt entropy data)
// raises CodecError rather than returning a partial image.
DecodedImage jpeg_decode_rgb(std::span<const std::uint8_t> bytes);

}  // namespace cloudeye
