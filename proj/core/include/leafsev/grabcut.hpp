#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "leafsev/raster.hpp"

namespace leafsev {

struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

// 2% margin inset from the image borders; degenerates to the full frame when
// the image is too small to keep a border.
Rect default_rect(int image_w, int image_h);

enum class TrimapLabel : std::uint8_t {
  kBackgroundFixed = 0,
  kForegroundFixed = 1,
  kBackgroundSoft = 2,
  kForegroundSoft = 3,
};

struct Trimap {
  int width = 0;
  int height = 0;
  std::vector<TrimapLabel> labels;  // row-major, width*height

  TrimapLabel at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

// Outside rect -> kBackgroundFixed, inside -> kForegroundSoft.
Trimap init_trimap(int width, int height, Rect rect);

struct SegMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> fg;  // 1 = foreground

  bool at(int x, int y) const { return fg[static_cast<std::size_t>(y) * width + x] != 0; }
  std::int64_t foreground_count() const;
};

// Black/white preview (0 = background, 255 = foreground).
RasterImage render_mask(const SegMask& mask);

inline constexpr double kVarianceFloor = 1e-3;

struct GaussianComponent {
  double weight = 0.0;                          // member fraction; 0 = unused component
  std::array<double, 3> mean{};
  std::array<std::array<double, 3>, 3> cov{};   // eigenvalues >= kVarianceFloor
  std::array<std::array<double, 3>, 3> inv{};
  double log_det = 0.0;
};

struct GaussianMixture {
  std::vector<GaussianComponent> comps;

  // -log(weight_k * N(rgb | mean_k, cov_k)); +inf cost sentinel for weight-0
  // components (they can never win an argmin).
  double neg_log_component(int k, const double* rgb) const;
  double min_neg_log(const double* rgb) const;    // over components with weight > 0
  int best_component(const double* rgb) const;
};

// Per-component sample mean/covariance, weights proportional to member
// counts. Covariances get the variance floor only when the maximum-likelihood
// estimate falls below it.
GaussianMixture fit_gmm(const std::vector<std::array<double, 3>>& pixels,
                        const std::vector<int>& assignments, int components);

struct GrabCutParams {
  int iterations = 5;
  int components = 5;   // per color model
  double gamma = 50.0;  // smoothness strength
  std::uint64_t seed = 0;
};

struct GrabCutResult {
  SegMask mask;
  std::vector<double> energy_trace;  // initial energy, then one entry per iteration
};

class GrabCutEngine {
 public:
  GrabCutEngine(const RasterImage& img, Rect rect, const GrabCutParams& params);
  ~GrabCutEngine();
  GrabCutEngine(GrabCutEngine&&) noexcept;
  GrabCutEngine& operator=(GrabCutEngine&&) noexcept;

  // One assign/refit/cut round. Exposed individually so the energy can be
  // checked between sub-steps; none of them may increase it.
  void assign_components();
  void refit_models();
  void run_cut();
  void iterate();

  double energy() const;
  SegMask mask() const;
  const Trimap& trimap() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

GrabCutResult grabcut_segment(const RasterImage& img, Rect rect, const GrabCutParams& params = {});

}  // namespace leafsev
