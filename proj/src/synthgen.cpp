#include "infernet/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "infernet/error.hpp"
#include "infernet/random.hpp"

namespace infernet {
namespace {

constexpr int kSupersample = 3;

// Shape membership in glyph-local coordinates, u and v in [-1, 1].
bool inside_glyph(Glyph glyph, double u, double v) {
  switch (glyph) {
    case Glyph::Disc: return u * u + v * v <= 0.81;
    case Glyph::Square: return std::fabs(u) <= 0.75 && std::fabs(v) <= 0.75;
    case Glyph::Triangle: {
      // apex up, base at v = 0.7
      if (v > 0.7 || v < -0.9) return false;
      const double half_width = 0.85 * (v + 0.9) / 1.6;
      return std::fabs(u) <= half_width;
    }
    case Glyph::Cross:
      return (std::fabs(u) <= 0.3 && std::fabs(v) <= 0.9) || (std::fabs(v) <= 0.3 && std::fabs(u) <= 0.9);
  }
  return false;
}

std::vector<GlyphStyle> distinct_styles(Rng& rng, int count) {
  const int hues = static_cast<int>(glyph_palette().size());
  const int variants = 4 * hues;
  if (count > variants) throw ArgumentError("at most " + std::to_string(variants) + " distinct glyph variants");
  std::vector<int> pool(static_cast<std::size_t>(variants));
  for (int i = 0; i < variants; ++i) pool[static_cast<std::size_t>(i)] = i;
  std::vector<GlyphStyle> out;
  for (int i = 0; i < count; ++i) {
    const auto pick = i + static_cast<std::size_t>(uniform_below(rng, static_cast<std::uint64_t>(variants - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[pick]);
    const int v = pool[static_cast<std::size_t>(i)];
    out.push_back({static_cast<Glyph>(v / hues), glyph_palette()[static_cast<std::size_t>(v % hues)], 0.0});
  }
  return out;
}

double uniform_range(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform_unit(rng); }

Image render_target(const GlyphStyle& style, int object_side, double scale, double rotation,
                    std::uint8_t background) {
  const int side = static_cast<int>(std::lround(object_side * scale * 1.25));
  Image target(side, side, background);
  GlyphStyle turned = style;
  turned.rotation_deg = rotation;
  draw_glyph(target, turned, side / 2.0, side / 2.0, object_side * scale);
  return target;
}

std::vector<std::pair<double, double>> ring_positions(const ArraySpec& spec) {
  std::vector<std::pair<double, double>> out;
  if (spec.lattice <= 0) {
    const double cx = spec.width / 2.0, cy = spec.height / 2.0;
    for (int k = 0; k < spec.n_objects; ++k) {
      const double angle = -std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * k / spec.n_objects;
      out.emplace_back(std::round(cx + spec.ring_radius * std::cos(angle)),
                       std::round(cy + spec.ring_radius * std::sin(angle)));
    }
    return out;
  }
  const int s = spec.lattice;
  const int ccx = spec.width / s / 2, ccy = spec.height / s / 2;
  const long r2 = std::lround(spec.ring_radius * spec.ring_radius / (static_cast<double>(s) * s));
  const int reach = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(r2))));
  std::vector<std::pair<double, std::pair<int, int>>> points;  // (angle from "up", offset)
  for (int dy = -reach; dy <= reach; ++dy) {
    for (int dx = -reach; dx <= reach; ++dx) {
      if (static_cast<long>(dx) * dx + static_cast<long>(dy) * dy != r2) continue;
      double angle = std::atan2(dy, dx) + std::numbers::pi / 2.0;
      if (angle < 0.0) angle += 2.0 * std::numbers::pi;
      points.push_back({angle, {dx, dy}});
    }
  }
  std::sort(points.begin(), points.end());
  const int m = static_cast<int>(points.size());
  if (m < spec.n_objects) {
    throw ArgumentError("only " + std::to_string(m) + " lattice points at ring radius " +
                        std::to_string(spec.ring_radius));
  }
  for (int k = 0; k < spec.n_objects; ++k) {
    const auto [dx, dy] = points[static_cast<std::size_t>(k * m / spec.n_objects)].second;
    out.emplace_back((ccx + dx) * s + s / 2, (ccy + dy) * s + s / 2);
  }
  return out;
}

Rect box_around(double cx, double cy, int side) {
  return {static_cast<int>(std::lround(cx - side / 2.0)), static_cast<int>(std::lround(cy - side / 2.0)), side, side};
}

}  // namespace

const char* to_string(Glyph glyph) {
  switch (glyph) {
    case Glyph::Disc: return "disc";
    case Glyph::Square: return "square";
    case Glyph::Triangle: return "triangle";
    case Glyph::Cross: return "cross";
  }
  return "?";
}

const std::vector<Rgb>& glyph_palette() {
  static const std::vector<Rgb> palette{
      {220, 40, 40}, {40, 170, 60}, {50, 80, 220}, {230, 200, 40}, {190, 50, 190}, {40, 190, 200},
  };
  return palette;
}

void draw_glyph(Image& image, const GlyphStyle& style, double cx, double cy, double side) {
  const double half = side / 2.0;
  const double theta = style.rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  const double reach = half * std::numbers::sqrt2;
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - reach)));
  const int x1 = std::min(image.width - 1, static_cast<int>(std::ceil(cx + reach)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - reach)));
  const int y1 = std::min(image.height - 1, static_cast<int>(std::ceil(cy + reach)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      int hits = 0;
      for (int sy = 0; sy < kSupersample; ++sy) {
        for (int sx = 0; sx < kSupersample; ++sx) {
          const double px = x + (sx + 0.5) / kSupersample - cx;
          const double py = y + (sy + 0.5) / kSupersample - cy;
          // rotate the sample back into the glyph frame
          const double u = (c * px + s * py) / half;
          const double v = (-s * px + c * py) / half;
          hits += inside_glyph(style.glyph, u, v);
        }
      }
      if (!hits) continue;
      const double a = static_cast<double>(hits) / (kSupersample * kSupersample);
      std::uint8_t* p = image.at(x, y);
      const std::uint8_t col[3] = {style.color.r, style.color.g, style.color.b};
      for (int k = 0; k < 3; ++k) p[k] = static_cast<std::uint8_t>(std::lround(a * col[k] + (1.0 - a) * p[k]));
    }
  }
}

double pixel_ncc(const Image& image, const Rect& box, const Image& templ) {
  Image crop(box.w, box.h);
  for (int y = 0; y < box.h; ++y) {
    for (int x = 0; x < box.w; ++x) {
      const int sx = std::clamp(box.x + x, 0, image.width - 1), sy = std::clamp(box.y + y, 0, image.height - 1);
      std::copy_n(image.at(sx, sy), 3, crop.at(x, y));
    }
  }
  const Image resized = resize_bilinear(templ, box.w, box.h);
  const std::size_t n = crop.pixels.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += crop.pixels[i];
    mb += resized.pixels[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = crop.pixels[i] - ma, b = resized.pixels[i] - mb;
    ab += a * b;
    aa += a * a;
    bb += b * b;
  }
  if (aa <= 0.0 || bb <= 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

GeneratedTrial gen_array_trial(const ArraySpec& spec, const std::string& id) {
  if (spec.n_objects < 2) throw ArgumentError("an array needs at least two objects");
  const auto positions = ring_positions(spec);
  std::vector<Rect> boxes;
  for (const auto& [ox, oy] : positions) {
    const Rect box = box_around(ox, oy, spec.object_side);
    if (!(intersect(box, Rect{0, 0, spec.width, spec.height}) == box)) {
      throw ArgumentError("canvas " + std::to_string(spec.width) + "x" + std::to_string(spec.height) +
                          " too small for ring radius " + std::to_string(spec.ring_radius));
    }
    for (const Rect& other : boxes) {
      if (!intersect(box, other).empty()) throw ArgumentError("ring too small for the objects");
    }
    boxes.push_back(box);
  }

  Rng rng(mix_seed(spec.seed, {0xa77a7}));
  GeneratedTrial g;
  g.styles = distinct_styles(rng, spec.n_objects);
  const auto target_index = static_cast<std::size_t>(uniform_below(rng, static_cast<std::uint64_t>(spec.n_objects)));
  const double rotation = uniform_range(rng, -spec.target_max_rotation, spec.target_max_rotation);

  g.search = Image(spec.width, spec.height, spec.background);
  for (int k = 0; k < spec.n_objects; ++k) {
    const auto [ox, oy] = positions[static_cast<std::size_t>(k)];
    draw_glyph(g.search, g.styles[static_cast<std::size_t>(k)], ox, oy, spec.object_side);
    g.objects.push_back({"o" + std::to_string(k + 1), boxes[static_cast<std::size_t>(k)]});
  }
  g.target = render_target(g.styles[target_index], spec.object_side, spec.target_scale, rotation, spec.background);

  g.trial.id = id;
  g.trial.task = TaskType::Array;
  g.trial.target_box = g.objects[target_index].box;
  g.trial.candidates = g.objects;
  g.trial.width = spec.width;
  g.trial.height = spec.height;
  for (const auto& o : g.objects) g.similarity.push_back(pixel_ncc(g.search, o.box, g.target));
  return g;
}

GeneratedTrial gen_scene_trial(const SceneSpec& spec, const std::string& id) {
  if (spec.n_objects < 2) throw ArgumentError("a scene needs at least two objects");
  const int side = spec.object_side;
  if (spec.width < 2 * side || spec.height < 2 * side) throw ArgumentError("canvas too small for the objects");
  Rng rng(mix_seed(spec.seed, {0x5cee}));
  GeneratedTrial g;
  g.search = Image(spec.width, spec.height);
  // mildly textured background
  for (auto& v : g.search.pixels) v = static_cast<std::uint8_t>(118 + uniform_below(rng, 21));

  g.styles = distinct_styles(rng, spec.n_objects);
  const int gap = side / 4;
  for (int k = 0; k < spec.n_objects; ++k) {
    Rect box;
    bool placed = false;
    for (int attempt = 0; attempt < 2000 && !placed; ++attempt) {
      box = {static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(spec.width - side + 1))),
             static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(spec.height - side + 1))), side, side};
      const Rect padded{box.x - gap, box.y - gap, side + 2 * gap, side + 2 * gap};
      placed = std::none_of(g.objects.begin(), g.objects.end(),
                            [&](const Candidate& o) { return !intersect(o.box, padded).empty(); });
    }
    if (!placed) throw ArgumentError("could not place " + std::to_string(spec.n_objects) + " objects on the canvas");
    auto& style = g.styles[static_cast<std::size_t>(k)];
    style.rotation_deg = uniform_range(rng, -45.0, 45.0);
    draw_glyph(g.search, style, box.x + side / 2.0, box.y + side / 2.0, side);
    g.objects.push_back({"o" + std::to_string(k + 1), box});
  }
  const auto target_index = static_cast<std::size_t>(uniform_below(rng, static_cast<std::uint64_t>(spec.n_objects)));
  const double rotation = g.styles[target_index].rotation_deg +
                          uniform_range(rng, -spec.target_max_rotation, spec.target_max_rotation);
  g.target = render_target(g.styles[target_index], side, spec.target_scale, rotation, 128);

  g.trial.id = id;
  g.trial.task = TaskType::Natural;
  g.trial.target_box = g.objects[target_index].box;
  g.trial.width = spec.width;
  g.trial.height = spec.height;
  for (const auto& o : g.objects) g.similarity.push_back(pixel_ncc(g.search, o.box, g.target));
  return g;
}

FixationSequence sample_fixations(const std::vector<Candidate>& objects, const Rect& target_box,
                                  const std::vector<double>& sim, double beta, int count, std::uint64_t seed,
                                  int width, int height) {
  if (sim.size() != objects.size()) throw ArgumentError("one similarity score per object is required");
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (!(objects[i].box == target_box)) pool.push_back(i);
  }
  if (count < 0 || static_cast<std::size_t>(count) > pool.size()) {
    throw ArgumentError("cannot draw " + std::to_string(count) + " fixations from " + std::to_string(pool.size()) +
                        " distractors");
  }
  Rng rng(seed);
  auto jittered = [&](const Rect& box) {
    const int jx = static_cast<int>(uniform_below(rng, 5)) - 2;
    const int jy = static_cast<int>(uniform_below(rng, 5)) - 2;
    const int x = static_cast<int>(std::floor(box.center_x())) + jx;
    const int y = static_cast<int>(std::floor(box.center_y())) + jy;
    return Fixation{std::clamp(x, box.x, box.x + box.w - 1), std::clamp(y, box.y, box.y + box.h - 1), std::nullopt};
  };

  FixationSequence seq;
  seq.points.push_back({width / 2, height / 2, std::nullopt});
  for (int t = 0; t < count; ++t) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i : pool) top = std::max(top, sim[i]);
    std::vector<double> weights;
    double total = 0.0;
    for (std::size_t i : pool) {
      weights.push_back(std::exp(beta * (sim[i] - top)));
      total += weights.back();
    }
    double u = uniform_unit(rng) * total;
    std::size_t pick = pool.size() - 1;
    for (std::size_t k = 0; k < pool.size(); ++k) {
      if (u < weights[k]) {
        pick = k;
        break;
      }
      u -= weights[k];
    }
    seq.points.push_back(jittered(objects[pool[pick]].box));
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  seq.points.push_back(jittered(target_box));
  return seq;
}

FixationSequence sample_fixations(const GeneratedTrial& generated, double beta, int count, std::uint64_t seed) {
  FixationSequence seq = sample_fixations(generated.objects, generated.trial.target_box, generated.similarity, beta,
                                          count, seed, generated.trial.width, generated.trial.height);
  seq.trial = generated.trial.id;
  return seq;
}

Dataset write_synthetic_dataset(const GenOptions& options, const std::filesystem::path& dir) {
  if (options.trials < 1 || options.subjects < 1) throw ArgumentError("need at least one trial and one subject");
  std::filesystem::create_directories(dir / "images");
  Dataset ds;
  ds.root = dir;
  const int digits = static_cast<int>(std::to_string(options.trials).size());
  for (int i = 0; i < options.trials; ++i) {
    std::string num = std::to_string(i + 1);
    num.insert(0, static_cast<std::size_t>(std::max(0, digits - static_cast<int>(num.size()))), '0');
    const std::string id = "t" + num;
    GeneratedTrial g;
    if (options.task == TaskType::Array) {
      ArraySpec spec = options.array;
      spec.seed = mix_seed(options.seed, {static_cast<std::uint64_t>(i)});
      g = gen_array_trial(spec, id);
    } else {
      SceneSpec spec = options.scene;
      spec.seed = mix_seed(options.seed, {static_cast<std::uint64_t>(i)});
      g = gen_scene_trial(spec, id);
    }
    g.trial.search_image = "images/" + id + "_search.png";
    g.trial.target_image = "images/" + id + "_target.png";
    write_png(g.search, dir / g.trial.search_image);
    write_png(g.target, dir / g.trial.target_image);
    for (int s = 0; s < options.subjects; ++s) {
      FixationSequence seq = sample_fixations(
          g, options.beta, options.fixations,
          mix_seed(options.seed, {static_cast<std::uint64_t>(i), 0x5b7, static_cast<std::uint64_t>(s)}));
      seq.subject = "s" + std::to_string(s + 1);
      ds.sequences.push_back(std::move(seq));
    }
    ds.trials.push_back(std::move(g.trial));
  }
  validate_dataset(ds);
  write_manifest(ds, dir / "manifest.jsonl");
  return ds;
}

}  // namespace infernet
