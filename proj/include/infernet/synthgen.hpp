#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "infernet/dataset.hpp"
#include "infernet/image.hpp"

namespace infernet {

enum class Glyph { Disc, Square, Triangle, Cross };

const char* to_string(Glyph glyph);

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// The hue palette used by the generators.
const std::vector<Rgb>& glyph_palette();

struct GlyphStyle {
  Glyph glyph = Glyph::Disc;
  Rgb color;
  double rotation_deg = 0.0;
};

// Draws a glyph filling roughly `side` pixels, centred at (cx, cy).
void draw_glyph(Image& image, const GlyphStyle& style, double cx, double cy, double side);

// Objects on a ring around the canvas centre, all equidistant from it.
struct ArraySpec {
  int n_objects = 6;
  int object_side = 40;
  int width = 224;
  int height = 224;
  double ring_radius = 72.0;
  double target_scale = 1.3;         // target image glyph size relative to object_side
  double target_max_rotation = 30.0;  // degrees, drawn uniformly in [-r, r]
  std::uint8_t background = 128;
  // > 0: objects sit on centres of a lattice of this cell size, at the ring
  // of lattice points whose distance from the centre cell best matches
  // ring_radius.
  int lattice = 0;
  std::uint64_t seed = 0;
};

// Objects scattered over a larger canvas; no candidate annotations.
struct SceneSpec {
  int n_objects = 16;
  int object_side = 36;
  int width = 320;
  int height = 256;
  double target_scale = 1.3;
  double target_max_rotation = 30.0;
  std::uint64_t seed = 0;
};

struct GeneratedTrial {
  Trial trial;
  Image search;
  Image target;
  std::vector<Candidate> objects;  // every drawn object, target included
  std::vector<GlyphStyle> styles;  // parallel to objects
  std::vector<double> similarity;  // pixel NCC of each object against the target image
};

GeneratedTrial gen_array_trial(const ArraySpec& spec, const std::string& id);
GeneratedTrial gen_scene_trial(const SceneSpec& spec, const std::string& id);

// Normalized cross-correlation of the pixels under `box` with the template
// resized to the box extents.
double pixel_ncc(const Image& image, const Rect& box, const Image& templ);

// [start, d1..dT, target]: `count` distinct non-target objects drawn without
// replacement with probability proportional to exp(beta * sim), each placed
// at its box centre with up to 2 px jitter. `start` is the canvas centre.
FixationSequence sample_fixations(const std::vector<Candidate>& objects, const Rect& target_box,
                                  const std::vector<double>& sim, double beta, int count, std::uint64_t seed,
                                  int width, int height);
FixationSequence sample_fixations(const GeneratedTrial& generated, double beta, int count, std::uint64_t seed);

struct GenOptions {
  TaskType task = TaskType::Array;
  int trials = 20;
  int subjects = 1;
  int fixations = 1;  // error fixations per sequence
  double beta = 4.0;
  std::uint64_t seed = 0;
  ArraySpec array;
  SceneSpec scene;
};

// Writes images under dir/images and dir/manifest.jsonl; returns the dataset
// as it would be loaded back.
Dataset write_synthetic_dataset(const GenOptions& options, const std::filesystem::path& dir);

}  // namespace infernet
