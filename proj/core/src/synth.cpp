#include "leafsev/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "json.hpp"

#include "leafsev/errors.hpp"

namespace leafsev {

namespace {

struct Ellipse {
  double cx, cy, rx, ry;

  bool contains(double x, double y) const {
    const double nx = (x - cx) / rx;
    const double ny = (y - cy) / ry;
    return nx * nx + ny * ny <= 1.0;
  }
};

Ellipse resolved_leaf(const SynthSpec& s) {
  Ellipse e;
  e.cx = s.leaf_cx > 0.0 ? s.leaf_cx : s.width / 2.0;
  e.cy = s.leaf_cy > 0.0 ? s.leaf_cy : s.height / 2.0;
  e.rx = s.leaf_rx > 0.0 ? s.leaf_rx : s.width * 0.38;
  e.ry = s.leaf_ry > 0.0 ? s.leaf_ry : s.height * 0.35;
  return e;
}

// Boundary sampling is enough here: lesions are placed with a pixel of slack.
bool circle_inside_ellipse(const SpotSpec& spot, const Ellipse& e) {
  if (!e.contains(spot.cx, spot.cy)) return false;
  for (int i = 0; i < 64; ++i) {
    const double a = 2.0 * M_PI * i / 64.0;
    if (!e.contains(spot.cx + spot.radius * std::cos(a), spot.cy + spot.radius * std::sin(a))) {
      return false;
    }
  }
  return true;
}

std::uint8_t jittered(double base, double amplitude, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> noise(-amplitude, amplitude);
  const double v = base + (amplitude > 0.0 ? noise(rng) : 0.0);
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

}  // namespace

SynthResult render_leaf(const SynthSpec& spec) {
  if (spec.width < 8 || spec.height < 8) {
    throw std::invalid_argument("render_leaf: frame must be at least 8x8");
  }
  if (spec.leaf_jitter < 0.0 || spec.spot_jitter < 0.0) {
    throw std::invalid_argument("render_leaf: negative jitter");
  }
  const Ellipse leaf = resolved_leaf(spec);
  if (leaf.rx < 2.0 || leaf.ry < 2.0 || leaf.cx - leaf.rx < 0.0 || leaf.cy - leaf.ry < 0.0 ||
      leaf.cx + leaf.rx > spec.width || leaf.cy + leaf.ry > spec.height) {
    throw std::invalid_argument("render_leaf: leaf ellipse degenerate or outside the frame");
  }
  if (spec.leaf_color == spec.background) {
    throw std::invalid_argument("render_leaf: leaf color equals the background");
  }
  for (const auto& spot : spec.spots) {
    if (spot.radius <= 0.0) throw std::invalid_argument("render_leaf: nonpositive spot radius");
    if (spot.color == spec.background) {
      throw std::invalid_argument("render_leaf: spot color equals the background");
    }
    if (!circle_inside_ellipse(spot, leaf)) {
      throw std::invalid_argument("render_leaf: spot outside the leaf ellipse");
    }
  }

  std::mt19937_64 rng(spec.seed);
  SynthResult out;
  out.image = RasterImage(spec.width, spec.height, spec.background[0], spec.background[1],
                          spec.background[2]);

  // Pixel-center tests, no anti-aliasing: counted areas are exact.
  std::int64_t leaf_px = 0;
  std::int64_t disease_px = 0;
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const double px = x + 0.5;
      const double py = y + 0.5;
      if (!leaf.contains(px, py)) continue;

      bool diseased = false;
      const SpotSpec* hit = nullptr;
      for (const auto& spot : spec.spots) {
        const double dx = px - spot.cx;
        const double dy = py - spot.cy;
        if (dx * dx + dy * dy <= spot.radius * spot.radius) {
          diseased = true;
          hit = &spot;
          break;
        }
      }

      std::uint8_t* dst = out.image.pixel(x, y);
      if (diseased) {
        ++disease_px;
        for (int c = 0; c < 3; ++c) dst[c] = jittered(hit->color[c], spec.spot_jitter, rng);
      } else {
        ++leaf_px;
        for (int c = 0; c < 3; ++c) dst[c] = jittered(spec.leaf_color[c], spec.leaf_jitter, rng);
      }
    }
  }

  out.truth.leaf_px = leaf_px;
  out.truth.disease_px = disease_px;
  if (leaf_px + disease_px == 0) throw std::invalid_argument("render_leaf: empty leaf");
  out.truth.ds_true =
      static_cast<double>(disease_px) * 100.0 / static_cast<double>(leaf_px + disease_px);
  return out;
}

SynthSpec make_target_spec(double target_ds, std::uint64_t seed, int width, int height) {
  if (target_ds < 0.0 || target_ds > 60.0) {
    throw std::invalid_argument("make_target_spec: target severity must be in [0, 60] percent");
  }
  SynthSpec spec;
  spec.width = width;
  spec.height = height;
  spec.seed = seed;
  const Ellipse leaf = resolved_leaf(spec);

  if (target_ds <= 0.0) return spec;

  const double leaf_area = M_PI * leaf.rx * leaf.ry;
  double remaining = leaf_area * target_ds / 100.0;
  const double max_r = std::min(leaf.rx, leaf.ry) * 0.45;

  // Deterministic placement stream, separate from the pixel-noise stream.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  double chunk = leaf_area * 0.12;
  while (remaining > 1.0 && chunk > 1.0) {
    const double want = std::min(remaining, chunk);
    const double r = std::clamp(std::sqrt(want / M_PI), 2.0, max_r);

    SpotSpec spot;
    spot.radius = r;
    bool placed = false;
    for (int attempt = 0; attempt < 4000 && !placed; ++attempt) {
      // Sample inside the shrunken ellipse that keeps the circle interior.
      const double a = 2.0 * M_PI * unit(rng);
      const double rad = std::sqrt(unit(rng));
      spot.cx = leaf.cx + rad * (leaf.rx - r - 1.0) * std::cos(a);
      spot.cy = leaf.cy + rad * (leaf.ry - r - 1.0) * std::sin(a);
      if (!circle_inside_ellipse(spot, leaf)) continue;
      bool overlaps = false;
      for (const auto& other : spec.spots) {
        const double dx = spot.cx - other.cx;
        const double dy = spot.cy - other.cy;
        if (std::sqrt(dx * dx + dy * dy) < spot.radius + other.radius + 2.0) {
          overlaps = true;
          break;
        }
      }
      placed = !overlaps;
    }
    if (!placed) {
      chunk *= 0.5;  // crowded: try smaller lesions until they fit
      continue;
    }
    spec.spots.push_back(spot);
    remaining -= M_PI * spot.radius * spot.radius;
  }
  return spec;
}

namespace {

std::array<std::uint8_t, 3> color_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("color must be a 3-element array");
  std::array<std::uint8_t, 3> c{};
  for (int i = 0; i < 3; ++i) {
    const int v = j[i].get<int>();
    if (v < 0 || v > 255) throw ParseError("color channel out of [0, 255]");
    c[i] = static_cast<std::uint8_t>(v);
  }
  return c;
}

}  // namespace

SynthSpec parse_synth_spec(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("synth spec JSON: ") + e.what());
  }
  try {
    SynthSpec s;
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.leaf_cx = j.value("leaf_cx", 0.0);
    s.leaf_cy = j.value("leaf_cy", 0.0);
    s.leaf_rx = j.value("leaf_rx", 0.0);
    s.leaf_ry = j.value("leaf_ry", 0.0);
    if (j.contains("leaf_color")) s.leaf_color = color_from_json(j["leaf_color"]);
    if (j.contains("background")) s.background = color_from_json(j["background"]);
    s.leaf_jitter = j.value("leaf_jitter", s.leaf_jitter);
    s.spot_jitter = j.value("spot_jitter", s.spot_jitter);
    s.seed = j.value("seed", 0ULL);
    if (j.contains("spots")) {
      for (const auto& js : j["spots"]) {
        SpotSpec spot;
        spot.cx = js.at("cx").get<double>();
        spot.cy = js.at("cy").get<double>();
        spot.radius = js.at("radius").get<double>();
        if (js.contains("color")) spot.color = color_from_json(js["color"]);
        s.spots.push_back(spot);
      }
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("synth spec JSON: ") + e.what());
  }
}

std::string synth_spec_to_json(const SynthSpec& spec) {
  nlohmann::json spots = nlohmann::json::array();
  for (const auto& s : spec.spots) {
    spots.push_back({{"cx", s.cx},
                     {"cy", s.cy},
                     {"radius", s.radius},
                     {"color", {s.color[0], s.color[1], s.color[2]}}});
  }
  const nlohmann::json j = {
      {"width", spec.width},
      {"height", spec.height},
      {"leaf_cx", spec.leaf_cx},
      {"leaf_cy", spec.leaf_cy},
      {"leaf_rx", spec.leaf_rx},
      {"leaf_ry", spec.leaf_ry},
      {"leaf_color", {spec.leaf_color[0], spec.leaf_color[1], spec.leaf_color[2]}},
      {"background", {spec.background[0], spec.background[1], spec.background[2]}},
      {"leaf_jitter", spec.leaf_jitter},
      {"spot_jitter", spec.spot_jitter},
      {"seed", spec.seed},
      {"spots", spots},
  };
  return j.dump(2);
}

std::string truth_to_json(const SynthTruth& truth) {
  const nlohmann::json j = {
      {"leaf_px", truth.leaf_px},
      {"disease_px", truth.disease_px},
      {"ds_true", truth.ds_true},
  };
  return j.dump();
}

}  // namespace leafsev
