#include "leafsev/grabcut.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "leafsev/cluster.hpp"
#include "leafsev/maxflow.hpp"

namespace leafsev {

Rect default_rect(int image_w, int image_h) {
  if (image_w < 1 || image_h < 1) throw std::invalid_argument("default_rect: empty image");
  auto inset = [](int dim) {
    int i = static_cast<int>(std::lround(dim * 0.02));
    if (dim - 2 * i < 2) i = std::max(0, (dim - 2) / 2);
    return i;
  };
  const int ix = inset(image_w);
  const int iy = inset(image_h);
  return Rect{ix, iy, image_w - 2 * ix, image_h - 2 * iy};
}

Trimap init_trimap(int width, int height, Rect rect) {
  if (width < 1 || height < 1) throw std::invalid_argument("init_trimap: empty dimensions");
  if (rect.width < 2 || rect.height < 2 || rect.x < 0 || rect.y < 0 ||
      rect.x + rect.width > width || rect.y + rect.height > height) {
    throw std::invalid_argument("init_trimap: rect degenerate or out of bounds");
  }
  Trimap t;
  t.width = width;
  t.height = height;
  t.labels.assign(static_cast<std::size_t>(width) * height, TrimapLabel::kBackgroundFixed);
  for (int y = rect.y; y < rect.y + rect.height; ++y) {
    for (int x = rect.x; x < rect.x + rect.width; ++x) {
      t.labels[static_cast<std::size_t>(y) * width + x] = TrimapLabel::kForegroundSoft;
    }
  }
  return t;
}

std::int64_t SegMask::foreground_count() const {
  std::int64_t n = 0;
  for (const auto v : fg) n += (v != 0);
  return n;
}

RasterImage render_mask(const SegMask& mask) {
  RasterImage img(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.fg.size(); ++i) {
    const std::uint8_t v = mask.fg[i] ? 255 : 0;
    img.data[i * 3] = v;
    img.data[i * 3 + 1] = v;
    img.data[i * 3 + 2] = v;
  }
  return img;
}

namespace {

constexpr double kHalfLog2Pi3 = 2.7568155996140185;  // (3/2) ln(2 pi)

using Mat3 = std::array<std::array<double, 3>, 3>;

bool cholesky3(const Mat3& m, Mat3& lower) {
  Mat3 l{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = m[i][j];
      for (int t = 0; t < j; ++t) s -= l[i][t] * l[j][t];
      if (i == j) {
        if (s <= 0.0) return false;
        l[i][i] = std::sqrt(s);
      } else {
        l[i][j] = s / l[j][j];
      }
    }
  }
  lower = l;
  return true;
}

// Inverse of a symmetric positive-definite matrix from its Cholesky factor.
Mat3 spd_inverse(const Mat3& l) {
  Mat3 inv{};
  for (int col = 0; col < 3; ++col) {
    std::array<double, 3> y{};
    for (int i = 0; i < 3; ++i) {
      double s = (i == col) ? 1.0 : 0.0;
      for (int t = 0; t < i; ++t) s -= l[i][t] * y[t];
      y[i] = s / l[i][i];
    }
    for (int i = 2; i >= 0; --i) {
      double s = y[i];
      for (int t = i + 1; t < 3; ++t) s -= l[t][i] * inv[t][col];
      inv[i][col] = s / l[i][i];
    }
  }
  return inv;
}

struct GmmAccumulator {
  explicit GmmAccumulator(int k) : n(k, 0), sum(k), prod(k) {
    for (auto& s : sum) s = {0.0, 0.0, 0.0};
    for (auto& p : prod) p = Mat3{};
  }

  void add(int k, const std::array<double, 3>& z) {
    ++n[k];
    for (int i = 0; i < 3; ++i) {
      sum[k][i] += z[i];
      for (int j = 0; j < 3; ++j) prod[k][i][j] += z[i] * z[j];
    }
  }

  GaussianMixture finish() const {
    std::int64_t total = 0;
    for (const auto c : n) total += c;
    GaussianMixture g;
    g.comps.resize(n.size());
    for (std::size_t k = 0; k < n.size(); ++k) {
      auto& c = g.comps[k];
      if (n[k] == 0) continue;  // weight stays 0; the component is inert
      const double inv_n = 1.0 / static_cast<double>(n[k]);
      c.weight = static_cast<double>(n[k]) / static_cast<double>(total);
      for (int i = 0; i < 3; ++i) c.mean[i] = sum[k][i] * inv_n;
      Mat3 cov{};
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) cov[i][j] = prod[k][i][j] * inv_n - c.mean[i] * c.mean[j];
      }
      // The floor is only applied when the ML covariance actually needs it,
      // so well-conditioned refits stay exact maximum likelihood.
      Mat3 shifted = cov;
      for (int d = 0; d < 3; ++d) shifted[d][d] -= kVarianceFloor;
      Mat3 l{};
      if (!cholesky3(shifted, l)) {
        for (int d = 0; d < 3; ++d) cov[d][d] += kVarianceFloor;
      }
      if (!cholesky3(cov, l)) {
        throw std::runtime_error("fit_gmm: covariance not positive definite after flooring");
      }
      c.cov = cov;
      c.inv = spd_inverse(l);
      c.log_det = 2.0 * (std::log(l[0][0]) + std::log(l[1][1]) + std::log(l[2][2]));
    }
    return g;
  }

  std::vector<std::int64_t> n;
  std::vector<std::array<double, 3>> sum;
  std::vector<Mat3> prod;
};

}  // namespace

double GaussianMixture::neg_log_component(int k, const double* rgb) const {
  const auto& c = comps[k];
  if (c.weight <= 0.0) return std::numeric_limits<double>::infinity();
  const double d0 = rgb[0] - c.mean[0];
  const double d1 = rgb[1] - c.mean[1];
  const double d2 = rgb[2] - c.mean[2];
  const double q = d0 * (c.inv[0][0] * d0 + c.inv[0][1] * d1 + c.inv[0][2] * d2) +
                   d1 * (c.inv[1][0] * d0 + c.inv[1][1] * d1 + c.inv[1][2] * d2) +
                   d2 * (c.inv[2][0] * d0 + c.inv[2][1] * d1 + c.inv[2][2] * d2);
  return -std::log(c.weight) + 0.5 * c.log_det + 0.5 * q + kHalfLog2Pi3;
}

double GaussianMixture::min_neg_log(const double* rgb) const {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < static_cast<int>(comps.size()); ++k) {
    best = std::min(best, neg_log_component(k, rgb));
  }
  return best;
}

int GaussianMixture::best_component(const double* rgb) const {
  int best = 0;
  double best_v = std::numeric_limits<double>::infinity();
  for (int k = 0; k < static_cast<int>(comps.size()); ++k) {
    const double v = neg_log_component(k, rgb);
    if (v < best_v) {
      best_v = v;
      best = k;
    }
  }
  return best;
}

GaussianMixture fit_gmm(const std::vector<std::array<double, 3>>& pixels,
                        const std::vector<int>& assignments, int components) {
  if (pixels.empty()) throw std::invalid_argument("fit_gmm: no pixels");
  if (components < 1) throw std::invalid_argument("fit_gmm: component count must be positive");
  if (assignments.size() != pixels.size()) {
    throw std::invalid_argument("fit_gmm: assignment count mismatch");
  }
  GmmAccumulator acc(components);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (assignments[i] < 0 || assignments[i] >= components) {
      throw std::invalid_argument("fit_gmm: assignment index out of range");
    }
    acc.add(assignments[i], pixels[i]);
  }
  return acc.finish();
}

struct GrabCutEngine::State {
  int w = 0;
  int h = 0;
  GrabCutParams params;
  std::vector<std::array<double, 3>> z;  // raw 0..255 colors
  Trimap trimap;
  std::vector<std::uint8_t> alpha;  // 1 = foreground
  std::vector<std::uint8_t> comp;
  GaussianMixture gmm[2];  // [0] background, [1] foreground
  double beta = 0.0;
  // Pairwise smoothness toward the left/up/up-left/up-right neighbor, each
  // pair stored once at its lower-right member.
  std::vector<double> wl, wu, wul, wur;

  std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * w + x; }

  double color_diff2(std::size_t a, std::size_t b) const {
    const double d0 = z[a][0] - z[b][0];
    const double d1 = z[a][1] - z[b][1];
    const double d2 = z[a][2] - z[b][2];
    return d0 * d0 + d1 * d1 + d2 * d2;
  }

  void compute_beta() {
    double total = 0.0;
    std::int64_t pairs = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t p = idx(x, y);
        if (x > 0) { total += color_diff2(p, idx(x - 1, y)); ++pairs; }
        if (y > 0 && x > 0) { total += color_diff2(p, idx(x - 1, y - 1)); ++pairs; }
        if (y > 0) { total += color_diff2(p, idx(x, y - 1)); ++pairs; }
        if (y > 0 && x < w - 1) { total += color_diff2(p, idx(x + 1, y - 1)); ++pairs; }
      }
    }
    const double mean = pairs > 0 ? total / static_cast<double>(pairs) : 0.0;
    beta = mean > 1e-12 ? 1.0 / (2.0 * mean) : 0.0;
  }

  void compute_nweights() {
    const std::size_t n = z.size();
    wl.assign(n, 0.0);
    wu.assign(n, 0.0);
    wul.assign(n, 0.0);
    wur.assign(n, 0.0);
    const double g = params.gamma;
    const double gd = params.gamma / std::sqrt(2.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t p = idx(x, y);
        if (x > 0) wl[p] = g * std::exp(-beta * color_diff2(p, idx(x - 1, y)));
        if (y > 0 && x > 0) wul[p] = gd * std::exp(-beta * color_diff2(p, idx(x - 1, y - 1)));
        if (y > 0) wu[p] = g * std::exp(-beta * color_diff2(p, idx(x, y - 1)));
        if (y > 0 && x < w - 1) wur[p] = gd * std::exp(-beta * color_diff2(p, idx(x + 1, y - 1)));
      }
    }
  }

  void init_components() {
    for (int side = 0; side < 2; ++side) {
      std::map<std::array<double, 3>, std::int64_t> hist;
      for (std::size_t p = 0; p < z.size(); ++p) {
        if (alpha[p] == side) ++hist[z[p]];
      }
      if (hist.empty()) {
        gmm[side].comps.assign(params.components, GaussianComponent{});
        continue;
      }
      std::vector<std::vector<double>> pts;
      std::vector<std::int64_t> weights;
      std::map<std::array<double, 3>, int> cluster_of;
      pts.reserve(hist.size());
      for (const auto& [color, count] : hist) {
        pts.push_back({color[0], color[1], color[2]});
        weights.push_back(count);
      }
      const int k_eff = std::min<int>(params.components, static_cast<int>(pts.size()));
      KMeansOptions opts;
      opts.max_iter = 10;
      opts.restarts = 2;
      opts.seed = params.seed + static_cast<std::uint64_t>(side);
      const ClusterModel model = kmeans_weighted(pts, weights, k_eff, opts);
      int i = 0;
      for (const auto& [color, count] : hist) cluster_of[color] = model.assignments[i++];
      for (std::size_t p = 0; p < z.size(); ++p) {
        if (alpha[p] == side) comp[p] = static_cast<std::uint8_t>(cluster_of[z[p]]);
      }
    }
  }

  void assign_components() {
    for (std::size_t p = 0; p < z.size(); ++p) {
      comp[p] = static_cast<std::uint8_t>(gmm[alpha[p]].best_component(z[p].data()));
    }
  }

  void refit_models() {
    GmmAccumulator acc[2] = {GmmAccumulator(params.components), GmmAccumulator(params.components)};
    bool seen[2] = {false, false};
    for (std::size_t p = 0; p < z.size(); ++p) {
      acc[alpha[p]].add(comp[p], z[p]);
      seen[alpha[p]] = true;
    }
    for (int side = 0; side < 2; ++side) {
      if (seen[side]) {
        gmm[side] = acc[side].finish();
      } else {
        gmm[side].comps.assign(params.components, GaussianComponent{});
      }
    }
  }

  void run_cut() {
    const int n = w * h;
    FlowNetwork net(n);
    for (int p = 0; p < n; ++p) {
      const TrimapLabel t = trimap.labels[p];
      if (t == TrimapLabel::kBackgroundFixed) {
        net.add_sink_edge(p, kHardConstraint);
      } else if (t == TrimapLabel::kForegroundFixed) {
        net.add_source_edge(p, kHardConstraint);
      } else {
        const double dbg = std::min(gmm[0].min_neg_log(z[p].data()), kHardConstraint);
        const double dfg = std::min(gmm[1].min_neg_log(z[p].data()), kHardConstraint);
        // Shift both terminal links by the pixel's cheaper label cost; the
        // argmin cut is unchanged and capacities stay nonnegative.
        const double m = std::min(dbg, dfg);
        if (dbg - m > 0.0) net.add_source_edge(p, dbg - m);
        if (dfg - m > 0.0) net.add_sink_edge(p, dfg - m);
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int p = y * w + x;
        if (wl[p] > 0.0) net.add_edge(p, p - 1, wl[p], wl[p]);
        if (wu[p] > 0.0) net.add_edge(p, p - w, wu[p], wu[p]);
        if (wul[p] > 0.0) net.add_edge(p, p - w - 1, wul[p], wul[p]);
        if (wur[p] > 0.0) net.add_edge(p, p - w + 1, wur[p], wur[p]);
      }
    }

    const MinCutResult cut = max_flow_min_cut(std::move(net));
    for (int p = 0; p < n; ++p) {
      const TrimapLabel t = trimap.labels[p];
      if (t != TrimapLabel::kBackgroundSoft && t != TrimapLabel::kForegroundSoft) continue;
      alpha[p] = cut.source_side[p] ? 1 : 0;
      trimap.labels[p] = alpha[p] ? TrimapLabel::kForegroundSoft : TrimapLabel::kBackgroundSoft;
    }
    assign_components();
  }

  double energy() const {
    double e = 0.0;
    for (std::size_t p = 0; p < z.size(); ++p) {
      e += gmm[alpha[p]].neg_log_component(comp[p], z[p].data());
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t p = idx(x, y);
        const std::uint8_t a = alpha[p];
        if (x > 0 && a != alpha[p - 1]) e += wl[p];
        if (y > 0 && a != alpha[p - w]) e += wu[p];
        if (y > 0 && x > 0 && a != alpha[p - w - 1]) e += wul[p];
        if (y > 0 && x < w - 1 && a != alpha[p - w + 1]) e += wur[p];
      }
    }
    return e;
  }
};

GrabCutEngine::GrabCutEngine(const RasterImage& img, Rect rect, const GrabCutParams& params)
    : state_(std::make_unique<State>()) {
  if (params.components < 1) throw std::invalid_argument("grabcut: components must be positive");
  if (params.gamma < 0.0) throw std::invalid_argument("grabcut: gamma must be nonnegative");
  State& s = *state_;
  s.w = img.width;
  s.h = img.height;
  s.params = params;
  s.trimap = init_trimap(img.width, img.height, rect);
  const std::size_t n = img.pixel_count();
  s.z.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    s.z[p] = {static_cast<double>(img.data[p * 3]), static_cast<double>(img.data[p * 3 + 1]),
              static_cast<double>(img.data[p * 3 + 2])};
  }
  s.alpha.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    const TrimapLabel t = s.trimap.labels[p];
    s.alpha[p] = (t == TrimapLabel::kForegroundSoft || t == TrimapLabel::kForegroundFixed) ? 1 : 0;
  }
  s.comp.assign(n, 0);
  s.compute_beta();
  s.compute_nweights();
  s.init_components();
  s.refit_models();
}

GrabCutEngine::~GrabCutEngine() = default;
GrabCutEngine::GrabCutEngine(GrabCutEngine&&) noexcept = default;
GrabCutEngine& GrabCutEngine::operator=(GrabCutEngine&&) noexcept = default;

void GrabCutEngine::assign_components() { state_->assign_components(); }
void GrabCutEngine::refit_models() { state_->refit_models(); }
void GrabCutEngine::run_cut() { state_->run_cut(); }

void GrabCutEngine::iterate() {
  state_->assign_components();
  state_->refit_models();
  state_->run_cut();
}

double GrabCutEngine::energy() const { return state_->energy(); }

SegMask GrabCutEngine::mask() const {
  SegMask m;
  m.width = state_->w;
  m.height = state_->h;
  m.fg = state_->alpha;
  return m;
}

const Trimap& GrabCutEngine::trimap() const { return state_->trimap; }

GrabCutResult grabcut_segment(const RasterImage& img, Rect rect, const GrabCutParams& params) {
  if (params.iterations < 1) throw std::invalid_argument("grabcut: iterations must be >= 1");
  GrabCutEngine engine(img, rect, params);
  GrabCutResult result;
  result.energy_trace.push_back(engine.energy());
  for (int i = 0; i < params.iterations; ++i) {
    engine.iterate();
    result.energy_trace.push_back(engine.energy());
  }
  result.mask = engine.mask();
  return result;
}

}  // namespace leafsev
