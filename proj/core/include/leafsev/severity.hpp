#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "leafsev/cluster.hpp"
#include "leafsev/errors.hpp"
#include "leafsev/grabcut.hpp"
#include "leafsev/raster.hpp"

namespace leafsev {

enum class ColorMode { kRgb, kValue };

const char* to_string(ColorMode mode);
ColorMode color_mode_from_string(const std::string& s);  // "rgb" | "value"

struct QuantConfig {
  ColorMode mode = ColorMode::kValue;
  int k = 5;  // 2..8
  int grabcut_iterations = 5;
  std::optional<Rect> rect;  // default: 2% inset
  std::uint64_t seed = 0;
  double merge_tolerance = 0.08;  // centroid distance below which a cluster joins the leaf
  int max_dimension = 1280;       // images larger than this get downscaled first
  int kmeans_restarts = 10;
  int kmeans_max_iter = 300;
};

enum class ClusterClass { kLeaf, kDisease };

struct ClusterSummary {
  std::vector<double> centroid;  // unit-interval feature units (dim 1 or 3)
  std::int64_t pixels = 0;
  ClusterClass cls = ClusterClass::kLeaf;
};

struct SeverityReport {
  std::string image;
  int width = 0;   // analyzed dimensions, after any downscale
  int height = 0;
  ColorMode mode = ColorMode::kValue;
  int k = 0;
  std::uint64_t seed = 0;
  std::int64_t d = 0;    // disease pixels
  std::int64_t lad = 0;  // leaf + disease pixels
  double ds = 0.0;       // d * 100 / lad
  std::vector<ClusterSummary> clusters;
};

// Thrown when segmentation leaves no foreground to quantify; carries the
// offending mask for diagnosis.
class EmptyMaskError : public std::runtime_error {
 public:
  explicit EmptyMaskError(SegMask mask)
      : std::runtime_error("segmentation produced an empty foreground"), mask(std::move(mask)) {}
  SegMask mask;
};

// Most populous cluster is the leaf; any other cluster within merge_tolerance
// (Euclidean, feature units) of its centroid joins it; the rest are disease.
// leaf_override, when given, names the leaf clusters outright.
std::vector<ClusterClass> label_clusters(const ClusterModel& model,
                                         const std::vector<std::int64_t>& pixel_counts,
                                         double merge_tolerance,
                                         const std::vector<int>* leaf_override = nullptr);

double severity_pct(std::int64_t disease, std::int64_t leaf);

struct QuantifyOutput {
  SeverityReport report;
  RasterImage analyzed;                  // image actually processed (post-resize)
  SegMask leaf_mask;                     // segmentation output
  std::vector<std::uint8_t> pixel_class; // per analyzed pixel: 0 bg, 1 leaf, 2 disease
};

QuantifyOutput quantify_full(const RasterImage& img, const QuantConfig& cfg,
                             const std::string& image_name = "");
SeverityReport quantify(const RasterImage& img, const QuantConfig& cfg,
                        const std::string& image_name = "");

// Disease pixels tinted red at 50% alpha over the analyzed image.
RasterImage annotate(const QuantifyOutput& out);

std::string report_to_json(const SeverityReport& report, bool pretty = false);
SeverityReport report_from_json(const std::string& text);

}  // namespace leafsev
