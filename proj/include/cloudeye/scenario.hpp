#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cloudeye/frame.hpp"
#include "cloudeye/geometry.hpp"

namespace cloudeye {

// One synthetic moving rectangle: constant velocity, textured, may exit the
// frame.
struct TargetSpec {
  double x0 = 0.0, y0 = 0.0;  // top-left at frame 0
  double vx = 0.0, vy = 0.0;  // px/frame
  double w = 32.0, h = 32.0;
  int class_id = 0;
};

struct SyntheticSpec {
  int frames = 60;
  int width = 320;
  int height = 240;
  int targets = 3;
  double speed_min = 0.5, speed_max = 2.0;
  double size_min = 16.0, size_max = 48.0;
  double fps = 30.0;
  std::uint64_t seed = 1;
  std::vector<TargetSpec> explicit_targets;  // non-empty overrides the RNG
};

std::vector<TargetSpec> make_targets(const SyntheticSpec& spec);
Frame render_frame(const SyntheticSpec& spec,
                   const std::vector<TargetSpec>& targets, std::int64_t index);
GroundTruth synthetic_ground_truth(const SyntheticSpec& spec,
                                   const std::vector<TargetSpec>& targets,
                                   std::int64_t index);

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::int64_t count() const = 0;
  virtual Frame frame(std::int64_t index) const = 0;
};

// renders frames on demand; nothing is stored
class SyntheticSource : public FrameSource {
 public:
  explicit SyntheticSource(SyntheticSpec spec)
      : spec_(std::move(spec)), targets_(make_targets(spec_)) {}

  std::int64_t count() const override { return spec_.frames; }
  Frame frame(std::int64_t index) const override {
    return render_frame(spec_, targets_, index);
  }
  std::vector<GroundTruth> ground_truths() const;
  const SyntheticSpec& spec() const { return spec_; }

 private:
  SyntheticSpec spec_;
  std::vector<TargetSpec> targets_;
};

// numbered PNG files in a directory, sorted by name
class DirectorySource : public FrameSource {
 public:
  DirectorySource(const std::string& dir, double fps);

  std::int64_t count() const override {
    return static_cast<std::int64_t>(paths_.size());
  }
  Frame frame(std::int64_t index) const override;

 private:
  std::vector<std::string> paths_;
  double fps_;
};

void write_png(const std::string& path, const Frame& frame);
Frame read_png(const std::string& path);

// newline-delimited JSON: {"frame_id":int,"boxes":[[x0,y0,x1,y1,class],...]}
void save_annotations(const std::vector<GroundTruth>& gts,
                      const std::string& path);
std::vector<GroundTruth> load_annotations(const std::string& path);

}  // namespace cloudeye
