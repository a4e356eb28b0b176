#include "leafsev/severity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "json.hpp"

namespace leafsev {

const char* to_string(ColorMode mode) { return mode == ColorMode::kRgb ? "rgb" : "value"; }

ColorMode color_mode_from_string(const std::string& s) {
  if (s == "rgb") return ColorMode::kRgb;
  if (s == "value") return ColorMode::kValue;
  throw std::invalid_argument("unknown color mode: " + s);
}

std::vector<ClusterClass> label_clusters(const ClusterModel& model,
                                         const std::vector<std::int64_t>& pixel_counts,
                                         double merge_tolerance,
                                         const std::vector<int>* leaf_override) {
  const std::size_t k = model.centroids.size();
  if (k == 0) throw std::invalid_argument("label_clusters: empty model");
  if (pixel_counts.size() != k) throw std::invalid_argument("label_clusters: count size mismatch");

  std::vector<ClusterClass> classes(k, ClusterClass::kDisease);
  if (leaf_override) {
    for (const int c : *leaf_override) {
      if (c < 0 || static_cast<std::size_t>(c) >= k) {
        throw std::invalid_argument("label_clusters: leaf override index out of range");
      }
      classes[c] = ClusterClass::kLeaf;
    }
    return classes;
  }

  std::size_t leaf = 0;
  for (std::size_t c = 1; c < k; ++c) {
    if (pixel_counts[c] > pixel_counts[leaf]) leaf = c;
  }
  classes[leaf] = ClusterClass::kLeaf;
  for (std::size_t c = 0; c < k; ++c) {
    if (c == leaf) continue;
    const double dist = std::sqrt(squared_distance(model.centroids[c], model.centroids[leaf]));
    if (dist <= merge_tolerance) classes[c] = ClusterClass::kLeaf;
  }
  return classes;
}

double severity_pct(std::int64_t disease, std::int64_t leaf) {
  if (disease < 0 || leaf < 0) throw std::invalid_argument("severity_pct: negative count");
  if (disease + leaf == 0) throw EmptyMaskError(SegMask{});
  return static_cast<double>(disease) * 100.0 / static_cast<double>(disease + leaf);
}

namespace {

void validate_config(const QuantConfig& cfg) {
  if (cfg.k < 2 || cfg.k > 8) throw std::invalid_argument("quantify: k must be in [2, 8]");
  if (cfg.grabcut_iterations < 1) throw std::invalid_argument("quantify: iterations must be >= 1");
  if (cfg.merge_tolerance < 0.0) throw std::invalid_argument("quantify: negative merge tolerance");
  if (cfg.max_dimension < 1) throw std::invalid_argument("quantify: max_dimension must be >= 1");
}

Rect scale_rect(Rect r, int from_w, int from_h, int to_w, int to_h) {
  const double sx = static_cast<double>(to_w) / from_w;
  const double sy = static_cast<double>(to_h) / from_h;
  Rect out;
  out.x = std::clamp(static_cast<int>(std::lround(r.x * sx)), 0, to_w - 2);
  out.y = std::clamp(static_cast<int>(std::lround(r.y * sy)), 0, to_h - 2);
  out.width = std::clamp(static_cast<int>(std::lround(r.width * sx)), 2, to_w - out.x);
  out.height = std::clamp(static_cast<int>(std::lround(r.height * sy)), 2, to_h - out.y);
  return out;
}

}  // namespace

QuantifyOutput quantify_full(const RasterImage& img, const QuantConfig& cfg,
                             const std::string& image_name) {
  validate_config(cfg);
  if (img.width < 1 || img.height < 1) throw std::invalid_argument("quantify: empty image");

  QuantifyOutput out;
  const int longest = std::max(img.width, img.height);
  if (longest > cfg.max_dimension) {
    const double scale = static_cast<double>(cfg.max_dimension) / longest;
    const int tw = std::max(1, static_cast<int>(std::lround(img.width * scale)));
    const int th = std::max(1, static_cast<int>(std::lround(img.height * scale)));
    out.analyzed = resize_bilinear(img, tw, th);
  } else {
    out.analyzed = img;
  }
  const int w = out.analyzed.width;
  const int h = out.analyzed.height;

  Rect rect = cfg.rect ? scale_rect(*cfg.rect, img.width, img.height, w, h) : default_rect(w, h);

  GrabCutParams gc;
  gc.iterations = cfg.grabcut_iterations;
  gc.seed = cfg.seed;
  const GrabCutResult seg = grabcut_segment(out.analyzed, rect, gc);
  out.leaf_mask = seg.mask;
  if (out.leaf_mask.foreground_count() == 0) throw EmptyMaskError(out.leaf_mask);

  // Features are deduplicated and clustered with multiplicities; Lloyd's
  // updates on the weighted distinct set match the full pixel multiset.
  const std::size_t n = out.analyzed.pixel_count();
  std::map<std::vector<double>, std::int64_t> hist;
  const bool rgb = cfg.mode == ColorMode::kRgb;
  auto feature_of = [&](std::size_t p) {
    const std::uint8_t r = out.analyzed.data[p * 3];
    const std::uint8_t g = out.analyzed.data[p * 3 + 1];
    const std::uint8_t b = out.analyzed.data[p * 3 + 2];
    if (rgb) return std::vector<double>{r / 255.0, g / 255.0, b / 255.0};
    return std::vector<double>{std::max(r, std::max(g, b)) / 255.0};
  };
  for (std::size_t p = 0; p < n; ++p) {
    if (out.leaf_mask.fg[p]) ++hist[feature_of(p)];
  }

  std::vector<std::vector<double>> points;
  std::vector<std::int64_t> weights;
  points.reserve(hist.size());
  for (const auto& [feat, count] : hist) {
    points.push_back(feat);
    weights.push_back(count);
  }

  const int k_eff = std::min<int>(cfg.k, static_cast<int>(points.size()));
  KMeansOptions opts;
  opts.max_iter = cfg.kmeans_max_iter;
  opts.restarts = cfg.kmeans_restarts;
  opts.seed = cfg.seed;
  const ClusterModel model = kmeans_weighted(points, weights, k_eff, opts);

  std::vector<std::int64_t> cluster_pixels(k_eff, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    cluster_pixels[model.assignments[i]] += weights[i];
  }
  const std::vector<ClusterClass> classes =
      label_clusters(model, cluster_pixels, cfg.merge_tolerance);

  std::int64_t disease = 0;
  std::int64_t total = 0;
  for (int c = 0; c < k_eff; ++c) {
    total += cluster_pixels[c];
    if (classes[c] == ClusterClass::kDisease) disease += cluster_pixels[c];
  }

  SeverityReport& rep = out.report;
  rep.image = image_name;
  rep.width = w;
  rep.height = h;
  rep.mode = cfg.mode;
  rep.k = cfg.k;
  rep.seed = cfg.seed;
  rep.d = disease;
  rep.lad = total;
  rep.ds = severity_pct(disease, total - disease);
  rep.clusters.resize(k_eff);
  for (int c = 0; c < k_eff; ++c) {
    rep.clusters[c].centroid = model.centroids[c];
    rep.clusters[c].pixels = cluster_pixels[c];
    rep.clusters[c].cls = classes[c];
  }

  std::map<std::vector<double>, int> cluster_of;
  {
    int i = 0;
    for (const auto& [feat, count] : hist) cluster_of[feat] = model.assignments[i++];
  }
  out.pixel_class.assign(n, 0);
  for (std::size_t p = 0; p < n; ++p) {
    if (!out.leaf_mask.fg[p]) continue;
    const int c = cluster_of[feature_of(p)];
    out.pixel_class[p] = classes[c] == ClusterClass::kDisease ? 2 : 1;
  }
  return out;
}

SeverityReport quantify(const RasterImage& img, const QuantConfig& cfg,
                        const std::string& image_name) {
  return quantify_full(img, cfg, image_name).report;
}

RasterImage annotate(const QuantifyOutput& out) {
  RasterImage img = out.analyzed;
  for (std::size_t p = 0; p < out.pixel_class.size(); ++p) {
    if (out.pixel_class[p] != 2) continue;
    std::uint8_t* px = img.data.data() + p * 3;
    px[0] = static_cast<std::uint8_t>(std::lround(0.5 * px[0] + 0.5 * 255.0));
    px[1] = static_cast<std::uint8_t>(std::lround(0.5 * px[1]));
    px[2] = static_cast<std::uint8_t>(std::lround(0.5 * px[2]));
  }
  return img;
}

std::string report_to_json(const SeverityReport& report, bool pretty) {
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& c : report.clusters) {
    clusters.push_back({{"centroid", c.centroid},
                        {"pixels", c.pixels},
                        {"class", c.cls == ClusterClass::kDisease ? "disease" : "leaf"}});
  }
  const nlohmann::json j = {
      {"image", report.image}, {"width", report.width}, {"height", report.height},
      {"mode", to_string(report.mode)}, {"k", report.k}, {"seed", report.seed},
      {"d", report.d}, {"lad", report.lad}, {"ds", report.ds}, {"clusters", clusters},
  };
  return pretty ? j.dump(2) : j.dump();
}

SeverityReport report_from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    SeverityReport r;
    r.image = j.at("image").get<std::string>();
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    r.mode = color_mode_from_string(j.at("mode").get<std::string>());
    r.k = j.at("k").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.d = j.at("d").get<std::int64_t>();
    r.lad = j.at("lad").get<std::int64_t>();
    r.ds = j.at("ds").get<double>();
    for (const auto& c : j.at("clusters")) {
      ClusterSummary s;
      s.centroid = c.at("centroid").get<std::vector<double>>();
      s.pixels = c.at("pixels").get<std::int64_t>();
      s.cls = c.at("class").get<std::string>() == "disease" ? ClusterClass::kDisease
                                                            : ClusterClass::kLeaf;
      r.clusters.push_back(std::move(s));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("severity report JSON: ") + e.what());
  }
}

}  // namespace leafsev
