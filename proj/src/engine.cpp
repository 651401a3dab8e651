#include "infernet/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "infernet/elimination.hpp"
#include "infernet/error.hpp"

namespace infernet {
namespace {

void require_same_extents(const std::vector<Map2D>& maps, const char* what) {
  if (maps.empty()) throw ArgumentError(std::string(what) + ": empty map list");
  for (const auto& m : maps) {
    if (m.height != maps[0].height || m.width != maps[0].width) {
      throw ShapeError(std::string(what) + ": maps differ in resolution");
    }
  }
}

struct Peak {
  float value = -std::numeric_limits<float>::infinity();
  int row = 0;
  int col = 0;
};

Peak peak_in(const Map2D& map, const Rect& box) {
  const Rect clipped = intersect(box, Rect{0, 0, map.width, map.height});
  Peak p;
  p.row = std::clamp(box.y, 0, map.height - 1);
  p.col = std::clamp(box.x, 0, map.width - 1);
  for (int y = clipped.y; y < clipped.y + clipped.h; ++y) {
    for (int x = clipped.x; x < clipped.x + clipped.w; ++x) {
      if (map.at(y, x) > p.value) {
        p = {map.at(y, x), y, x};
      }
    }
  }
  return p;
}

}  // namespace

const char* to_string(LayerCombine mode) { return mode == LayerCombine::Max ? "max" : "mean"; }

const char* to_string(FixationCombine mode) {
  switch (mode) {
    case FixationCombine::Sum: return "sum";
    case FixationCombine::Max: return "max";
    case FixationCombine::Mean: return "mean";
  }
  return "?";
}

LayerCombine parse_layer_combine(const std::string& text) {
  if (text == "max") return LayerCombine::Max;
  if (text == "mean") return LayerCombine::Mean;
  throw ArgumentError("layer combine must be max|mean, got '" + text + "'");
}

FixationCombine parse_fixation_combine(const std::string& text) {
  if (text == "sum") return FixationCombine::Sum;
  if (text == "max") return FixationCombine::Max;
  if (text == "mean") return FixationCombine::Mean;
  throw ArgumentError("fixation combine must be sum|max|mean, got '" + text + "'");
}

void FusionConfig::validate() const {
  if (taps.empty()) throw ArgumentError("fusion config needs at least one tap");
  if (patch_side < 8) throw ArgumentError("patch side must be >= 8");
  const int depth = NetworkSpec::vgg16_features().feature_depth();
  for (const auto& t : taps) {
    if (t.index > depth) {
      throw ArgumentError("tap index " + std::to_string(t.index) + " is past the last feature layer (" +
                          std::to_string(depth) + ")");
    }
  }
}

std::string FusionConfig::describe() const {
  return std::string("layer_combine=") + to_string(layer_combine) +
         " fixation_combine=" + to_string(fixation_combine) + " taps=" + format_taps(taps) +
         " patch_side=" + std::to_string(patch_side) + " clamp_negative=" + (clamp_negative ? "1" : "0") +
         " similarity=" + (similarity == SimilarityOp::Cosine ? "cosine" : "dot") +
         " upsample=" + (upsample == Interpolation::HalfPixel ? "half_pixel" : "align_corners");
}

Tensor extract_patch(const Image& image, int x, int y, int side, const WeightBundle& bundle) {
  if (x < 0 || y < 0 || x >= image.width || y >= image.height) {
    throw ArgumentError("fixation (" + std::to_string(x) + "," + std::to_string(y) + ") outside image " +
                        std::to_string(image.width) + "x" + std::to_string(image.height));
  }
  return preprocess(image_to_tensor(crop_clamped(image, x, y, side)), bundle);
}

Image mask_regions(Image image, const std::vector<Rect>& regions) {
  for (const auto& region : regions) {
    const Rect r = intersect(region, image.bounds());
    for (int y = r.y; y < r.y + r.h; ++y) {
      std::fill_n(image.at(r.x, y), static_cast<std::size_t>(r.w) * 3, std::uint8_t{0});
    }
  }
  return image;
}

std::vector<Map2D> similarity_maps(const FeatureTaps& patch, const FeatureTaps& search, int out_h,
                                   int out_w, const FusionConfig& cfg) {
  if (patch.size() != search.size()) throw ArgumentError("patch and search tap sets differ");
  std::vector<Map2D> maps;
  maps.reserve(patch.size());
  for (std::size_t j = 0; j < patch.size(); ++j) {
    const Tensor& kernel = patch.tensors()[j];
    Map2D m = xcorr(kernel, search.at(patch.labels()[j]), cfg.similarity);
    if (cfg.clamp_negative) m = clamp_negative(std::move(m));
    // An even kernel's window is centred half a cell before its sample.
    const double shift_y = kernel.dim(1) % 2 == 0 ? 0.5 : 0.0;
    const double shift_x = kernel.dim(2) % 2 == 0 ? 0.5 : 0.0;
    maps.push_back(minmax_normalize(upsample_bilinear(m, out_h, out_w, cfg.upsample, shift_y, shift_x)));
  }
  return maps;
}

std::vector<Map2D> similarity_maps(const Tensor& patch, const Tensor& masked_search,
                                   const NetworkSpec& net, const WeightBundle& bundle,
                                   const FusionConfig& cfg) {
  cfg.validate();
  const FeatureTaps p = forward_taps(net, bundle, patch, cfg.taps);
  const FeatureTaps s = forward_taps(net, bundle, masked_search, cfg.taps);
  return similarity_maps(p, s, masked_search.dim(1), masked_search.dim(2), cfg);
}

Map2D fuse_layers(const std::vector<Map2D>& maps, LayerCombine mode) {
  require_same_extents(maps, "fuse_layers");
  Map2D out = maps[0];
  if (mode == LayerCombine::Max) {
    for (std::size_t j = 1; j < maps.size(); ++j) {
      for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = std::max(out.values[i], maps[j].values[i]);
    }
    return out;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    double total = 0.0;
    for (const auto& m : maps) total += m.values[i];
    out.values[i] = static_cast<float>(total / static_cast<double>(maps.size()));
  }
  return out;
}

InferenceMap accumulate_fixations(const std::vector<Map2D>& per_fixation, FixationCombine mode) {
  require_same_extents(per_fixation, "accumulate_fixations");
  InferenceMap result;
  result.fixation_count = static_cast<int>(per_fixation.size());
  result.map = Map2D(per_fixation[0].height, per_fixation[0].width);
  std::vector<float> column(per_fixation.size());
  for (std::size_t i = 0; i < result.map.size(); ++i) {
    for (std::size_t f = 0; f < per_fixation.size(); ++f) column[f] = per_fixation[f].values[i];
    if (mode == FixationCombine::Max) {
      result.map.values[i] = *std::max_element(column.begin(), column.end());
      continue;
    }
    std::sort(column.begin(), column.end());
    double total = 0.0;
    for (float v : column) total += v;
    if (mode == FixationCombine::Mean) total /= static_cast<double>(column.size());
    result.map.values[i] = static_cast<float>(total);
  }
  return result;
}

GuessTrace infer_target(const Map2D& map, const Trial& trial, const GuessParams& params) {
  EliminationState state(trial, params);
  if (!state.is_array() && (map.height != trial.height || map.width != trial.width)) {
    throw ShapeError("inference map " + std::to_string(map.width) + "x" + std::to_string(map.height) +
                     " does not match trial image " + std::to_string(trial.width) + "x" +
                     std::to_string(trial.height));
  }
  while (!state.finished()) {
    if (state.is_array()) {
      std::size_t best = 0;
      Peak best_peak;
      bool first = true;
      for (std::size_t c = 0; c < state.remaining().size(); ++c) {
        const Peak p = peak_in(map, state.remaining()[c].box);
        const bool better = first || p.value > best_peak.value ||
                            (p.value == best_peak.value &&
                             std::pair(p.row, p.col) < std::pair(best_peak.row, best_peak.col));
        if (better) {
          best = c;
          best_peak = p;
          first = false;
        }
      }
      state.guess_candidate(best, best_peak.col, best_peak.row);
    } else {
      Peak p;
      bool found = false;
      for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
          if (state.available(x, y) && (!found || map.at(y, x) > p.value)) {
            p = {map.at(y, x), y, x};
            found = true;
          }
        }
      }
      state.guess_pixel(p.col, p.row);
    }
  }
  return state.trace();
}

std::vector<ClassScore> infer_category(const std::vector<Tensor>& patches, const Classifier& classify_patch) {
  if (patches.empty()) throw ArgumentError("infer_category needs at least one patch");
  std::vector<double> totals;
  for (const auto& patch : patches) {
    const auto probs = classify_patch(patch);
    if (totals.empty()) totals.assign(probs.size(), 0.0);
    if (probs.size() != totals.size()) throw ShapeError("classifier output length changed between patches");
    for (std::size_t k = 0; k < probs.size(); ++k) totals[k] += probs[k];
  }
  std::vector<ClassScore> ranking(totals.size());
  for (std::size_t k = 0; k < totals.size(); ++k) ranking[k] = {static_cast<int>(k), totals[k]};
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const ClassScore& a, const ClassScore& b) { return a.score > b.score; });
  return ranking;
}

std::vector<ClassScore> infer_category(const std::vector<Tensor>& patches, const NetworkSpec& net,
                                       const WeightBundle& bundle) {
  const int side = bundle.metadata().input_side;
  return infer_category(patches, [&](const Tensor& patch) {
    if (patch.rank() != 3 || patch.dim(0) != 3) throw ShapeError("patch must be 3×H×W");
    Tensor input({3, side, side});
    const std::size_t in_plane = static_cast<std::size_t>(patch.dim(1)) * patch.dim(2);
    for (int c = 0; c < 3; ++c) {
      Map2D plane(patch.dim(1), patch.dim(2));
      std::copy_n(patch.raw() + c * in_plane, in_plane, plane.values.begin());
      const Map2D up = upsample_bilinear(plane, side, side);
      std::copy(up.values.begin(), up.values.end(), input.raw() + static_cast<std::size_t>(c) * side * side);
    }
    return classify(net, bundle, input);
  });
}

Trial exclude_fixated(const Trial& trial, const std::vector<Fixation>& fixations) {
  Trial out = trial;
  std::erase_if(out.candidates, [&](const Candidate& c) {
    return std::any_of(fixations.begin(), fixations.end(),
                       [&](const Fixation& f) { return c.box.contains(f.x, f.y); });
  });
  return out;
}

InferNet::InferNet(NetworkSpec net, BundlePtr bundle, FusionConfig cfg)
    : net_(std::move(net)), bundle_(std::move(bundle)), cfg_(std::move(cfg)) {
  if (!bundle_) throw ArgumentError("InferNet needs a weight bundle");
  cfg_.validate();
}

FeatureTaps InferNet::search_features(const Image& search) const {
  return forward_taps(net_, *bundle_, preprocess(image_to_tensor(search), *bundle_), cfg_.taps);
}

std::vector<Map2D> InferNet::layer_maps(const Image& source, const Fixation& fixation,
                                        const FeatureTaps& search, int height, int width) const {
  const Tensor patch = extract_patch(source, fixation.x, fixation.y, cfg_.patch_side, *bundle_);
  const FeatureTaps prior = forward_taps(net_, *bundle_, patch, cfg_.taps);
  return similarity_maps(prior, search, height, width, cfg_);
}

InferenceMap InferNet::infer_map(const Image& source, const Image& masked_search,
                                 const std::vector<Fixation>& fixations, const std::string& trial_id) const {
  if (fixations.empty()) throw ArgumentError("infer_map needs at least one error fixation");
  const FeatureTaps search = search_features(masked_search);
  std::vector<Map2D> per_fixation;
  per_fixation.reserve(fixations.size());
  for (const auto& f : fixations) {
    per_fixation.push_back(
        fuse_layers(layer_maps(source, f, search, masked_search.height, masked_search.width), cfg_.layer_combine));
  }
  InferenceMap result = accumulate_fixations(per_fixation, cfg_.fixation_combine);
  result.trial_id = trial_id;
  result.config = cfg_.describe();
  return result;
}

}  // namespace infernet
