#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "leafsev/raster.hpp"

namespace leafsev {

struct SpotSpec {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
  std::array<std::uint8_t, 3> color{200, 180, 40};
};

struct SynthSpec {
  int width = 768;
  int height = 432;
  double leaf_cx = 0.0;  // zeros = centered, radii 38%/35% of the frame
  double leaf_cy = 0.0;
  double leaf_rx = 0.0;
  double leaf_ry = 0.0;
  std::array<std::uint8_t, 3> leaf_color{60, 140, 60};
  std::array<std::uint8_t, 3> background{255, 255, 255};
  std::vector<SpotSpec> spots;
  double leaf_jitter = 4.0;   // uniform per-channel noise amplitude
  double spot_jitter = 12.0;  // kept wider than leaf_jitter so lesions cluster apart
  std::uint64_t seed = 0;
};

struct SynthTruth {
  std::int64_t leaf_px = 0;     // healthy leaf pixels
  std::int64_t disease_px = 0;  // painted lesion pixels
  double ds_true = 0.0;         // disease_px * 100 / (leaf_px + disease_px)
};

struct SynthResult {
  RasterImage image;
  SynthTruth truth;
};

// Deterministic rasterization on pixel centers, no anti-aliasing, so the
// truth counts are exact. Every spot must lie inside the leaf ellipse and
// colors must differ from the background; violations throw invalid_argument.
SynthResult render_leaf(const SynthSpec& spec);

// Builds a spec whose rendered ds_true lands near target_ds (percent) by
// sizing non-overlapping spots against the ellipse area.
SynthSpec make_target_spec(double target_ds, std::uint64_t seed, int width = 768, int height = 432);

SynthSpec parse_synth_spec(const std::string& json_text);
std::string synth_spec_to_json(const SynthSpec& spec);
std::string truth_to_json(const SynthTruth& truth);

}  // namespace leafsev
