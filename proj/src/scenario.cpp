#include "cloudeye/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>
#include <png.h>

#include "cloudeye/rng.hpp"

namespace cloudeye {

namespace {

inline std::uint8_t hash_byte(std::uint64_t seed, std::int64_t a, std::int64_t b) {
  return static_cast<std::uint8_t>(
      mix64(seed ^ (static_cast<std::uint64_t>(a) << 21) ^
            static_cast<std::uint64_t>(b)) &
      0xff);
}

struct TargetColors {
  std::uint8_t a[3];
  std::uint8_t b[3];
  std::uint64_t noise_seed;
};

TargetColors target_colors(std::uint64_t seed, int target) {
  Rng rng(derive_seed(seed, 0x746172ull, static_cast<std::uint64_t>(target)));
  TargetColors c{};
  for (int i = 0; i < 3; ++i) {
    c.a[i] = static_cast<std::uint8_t>(rng.uniform_int(120, 256));
    c.b[i] = static_cast<std::uint8_t>(rng.uniform_int(0, 100));
  }
  c.noise_seed = rng.next_u64();
  return c;
}

}  // namespace

std::vector<TargetSpec> make_targets(const SyntheticSpec& spec) {
  if (!spec.explicit_targets.empty()) return spec.explicit_targets;
  std::vector<TargetSpec> targets;
  targets.reserve(spec.targets);
  for (int t = 0; t < spec.targets; ++t) {
    Rng rng(derive_seed(spec.seed, 0x746774ull, static_cast<std::uint64_t>(t)));
    TargetSpec ts;
    ts.w = rng.uniform(spec.size_min, spec.size_max);
    ts.h = rng.uniform(spec.size_min, spec.size_max);
    const double speed = rng.uniform(spec.speed_min, spec.speed_max);
    const double angle = rng.uniform(0.0, 2.0 * M_PI);
    ts.vx = speed * std::cos(angle);
    ts.vy = speed * std::sin(angle);
    // keep the full trajectory inside the frame when there is room for it
    const double drift_x = std::abs(ts.vx) * spec.frames;
    const double drift_y = std::abs(ts.vy) * spec.frames;
    const double lo_x = ts.vx < 0 ? drift_x : 0.0;
    const double hi_x = spec.width - ts.w - (ts.vx > 0 ? drift_x : 0.0);
    const double lo_y = ts.vy < 0 ? drift_y : 0.0;
    const double hi_y = spec.height - ts.h - (ts.vy > 0 ? drift_y : 0.0);
    ts.x0 = hi_x > lo_x ? rng.uniform(lo_x, hi_x)
                        : rng.uniform(0.0, std::max(1.0, spec.width - ts.w));
    ts.y0 = hi_y > lo_y ? rng.uniform(lo_y, hi_y)
                        : rng.uniform(0.0, std::max(1.0, spec.height - ts.h));
    ts.class_id = 0;
    targets.push_back(ts);
  }
  return targets;
}

Frame render_frame(const SyntheticSpec& spec,
                   const std::vector<TargetSpec>& targets, std::int64_t index) {
  Frame frame;
  frame.id = index;
  frame.timestamp = static_cast<double>(index) / spec.fps;
  frame.width = spec.width;
  frame.height = spec.height;
  frame.pixels.resize(static_cast<std::size_t>(spec.width) * spec.height * 3);

  const std::uint64_t bg_seed = derive_seed(spec.seed, 0x6267ull);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      std::uint8_t* p = frame.px(x, y);
      const int gx = (x * 96) / spec.width;
      const int gy = (y * 96) / spec.height;
      const int n = hash_byte(bg_seed, x, y) % 96;
      p[0] = static_cast<std::uint8_t>(std::min(255, 40 + gx + n));
      p[1] = static_cast<std::uint8_t>(std::min(255, 50 + gy + n));
      p[2] = static_cast<std::uint8_t>(std::min(255, 60 + ((gx + gy) >> 1) + n));
    }
  }

  for (std::size_t t = 0; t < targets.size(); ++t) {
    const auto& ts = targets[t];
    const double fx = ts.x0 + ts.vx * index;
    const double fy = ts.y0 + ts.vy * index;
    const int ix0 = static_cast<int>(std::lround(fx));
    const int iy0 = static_cast<int>(std::lround(fy));
    const int iw = static_cast<int>(std::lround(ts.w));
    const int ih = static_cast<int>(std::lround(ts.h));
    const TargetColors colors = target_colors(spec.seed, static_cast<int>(t));
    const int x_lo = std::max(0, ix0);
    const int y_lo = std::max(0, iy0);
    const int x_hi = std::min(spec.width, ix0 + iw);
    const int y_hi = std::min(spec.height, iy0 + ih);
    for (int y = y_lo; y < y_hi; ++y) {
      for (int x = x_lo; x < x_hi; ++x) {
        // texture anchored to the target so content translates rigidly
        const int lx = x - ix0;
        const int ly = y - iy0;
        const bool checker = (((lx >> 2) + (ly >> 2)) & 1) == 0;
        const std::uint8_t* base = checker ? colors.a : colors.b;
        const int n = hash_byte(colors.noise_seed, lx, ly) % 16;
        std::uint8_t* p = frame.px(x, y);
        for (int c = 0; c < 3; ++c) {
          p[c] = static_cast<std::uint8_t>(
              std::clamp(int(base[c]) + n - 8, 0, 255));
        }
      }
    }
  }
  return frame;
}

GroundTruth synthetic_ground_truth(const SyntheticSpec& spec,
                                   const std::vector<TargetSpec>& targets,
                                   std::int64_t index) {
  GroundTruth gt;
  gt.frame_id = index;
  for (const auto& ts : targets) {
    const double fx = ts.x0 + ts.vx * index;
    const double fy = ts.y0 + ts.vy * index;
    BoundingBox box{fx, fy, fx + ts.w, fy + ts.h};
    const BoundingBox clamped = box.clamped(spec.width, spec.height);
    if (!clamped.valid()) continue;
    if (clamped.area() < 0.25 * box.area()) continue;  // mostly off-screen
    gt.boxes.push_back({clamped, ts.class_id});
  }
  return gt;
}

std::vector<GroundTruth> SyntheticSource::ground_truths() const {
  std::vector<GroundTruth> gts;
  gts.reserve(spec_.frames);
  for (int i = 0; i < spec_.frames; ++i) {
    gts.push_back(synthetic_ground_truth(spec_, targets_, i));
  }
  return gts;
}

DirectorySource::DirectorySource(const std::string& dir, double fps) : fps_(fps) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("DirectorySource: not a directory: " + dir);
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".png") {
      paths_.push_back(entry.path().string());
    }
  }
  std::sort(paths_.begin(), paths_.end());
  if (paths_.empty()) {
    throw std::runtime_error("DirectorySource: no PNG frames in " + dir);
  }
}

Frame DirectorySource::frame(std::int64_t index) const {
  Frame f = read_png(paths_.at(static_cast<std::size_t>(index)));
  f.id = index;
  f.timestamp = static_cast<double>(index) / fps_;
  return f;
}

void write_png(const std::string& path, const Frame& frame) {
  if (!frame.valid()) throw std::invalid_argument("write_png: invalid frame");
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("write_png: cannot open " + path);
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("write_png: libpng failure for " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, frame.width, frame.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < frame.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(frame.px(0, y)));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

Frame read_png(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw std::runtime_error("read_png: cannot open " + path);
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("read_png: libpng failure for " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  Frame frame;
  frame.width = static_cast<int>(png_get_image_width(png, info));
  frame.height = static_cast<int>(png_get_image_height(png, info));
  frame.pixels.resize(static_cast<std::size_t>(frame.width) * frame.height * 3);
  for (int y = 0; y < frame.height; ++y) {
    png_read_row(png, frame.px(0, y), nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return frame;
}

void save_annotations(const std::vector<GroundTruth>& gts,
                      const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("save_annotations: cannot open " + path);
  for (const auto& gt : gts) {
    nlohmann::ordered_json boxes = nlohmann::json::array();
    for (const auto& b : gt.boxes) {
      boxes.push_back({b.box.x_min, b.box.y_min, b.box.x_max, b.box.y_max,
                       b.class_id});
    }
    nlohmann::ordered_json j{{"frame_id", gt.frame_id}, {"boxes", boxes}};
    out << j.dump() << "\n";
  }
}

std::vector<GroundTruth> load_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_annotations: cannot open " + path);
  std::vector<GroundTruth> gts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& err) {
      throw std::runtime_error("load_annotations: " + path + ":" +
                               std::to_string(line_no) + ": " + err.what());
    }
    GroundTruth gt;
    gt.frame_id = j.at("frame_id").get<std::int64_t>();
    for (const auto& b : j.at("boxes")) {
      if (!b.is_array() || b.size() != 5) {
        throw std::runtime_error("load_annotations: " + path + ":" +
                                 std::to_string(line_no) + ": bad box entry");
      }
      GtBox gb;
      gb.box = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                b[3].get<double>()};
      gb.class_id = b[4].get<int>();
      gt.boxes.push_back(gb);
    }
    gts.push_back(std::move(gt));
  }
  return gts;
}

}  // namespace cloudeye
