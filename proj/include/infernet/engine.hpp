#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "infernet/convnet.hpp"
#include "infernet/dataset.hpp"
#include "infernet/image.hpp"
#include "infernet/tensor.hpp"

namespace infernet {

enum class LayerCombine { Max, Mean };
enum class FixationCombine { Sum, Max, Mean };

const char* to_string(LayerCombine mode);
const char* to_string(FixationCombine mode);
LayerCombine parse_layer_combine(const std::string& text);
FixationCombine parse_fixation_combine(const std::string& text);

struct FusionConfig {
  LayerCombine layer_combine = LayerCombine::Max;
  FixationCombine fixation_combine = FixationCombine::Sum;
  std::vector<Tap> taps = default_taps();
  int patch_side = 28;
  bool clamp_negative = true;
  SimilarityOp similarity = SimilarityOp::Cosine;
  // Feature maps are brought to image resolution with this sampling grid.
  Interpolation upsample = Interpolation::HalfPixel;

  void validate() const;
  std::string describe() const;
};

struct InferenceMap {
  Map2D map;
  std::string trial_id;
  int fixation_count = 0;
  std::string config;
};

struct Guess {
  int x = 0;
  int y = 0;
  std::optional<std::string> candidate_id;

  friend bool operator==(const Guess&, const Guess&) = default;
};

struct GuessTrace {
  std::vector<Guess> guesses;
  std::optional<int> success_index;  // 1-based

  friend bool operator==(const GuessTrace&, const GuessTrace&) = default;
};

struct GuessParams {
  int elim_side = 200;  // natural trials: side of the square removed per miss
  int budget = 20;      // natural trials: maximum number of guesses
  // 0 selects point-in-box success; > 0 requires IoU(elimination square,
  // target box) >= threshold.
  double iou_threshold = 0.0;
};

// side×side crop centred on the fixation (border replicated), preprocessed
// with the bundle constants.
Tensor extract_patch(const Image& image, int x, int y, int side, const WeightBundle& bundle);

// Pixels inside any region become exactly 0; all others are untouched.
Image mask_regions(Image image, const std::vector<Rect>& regions);

// One map per tap at out_h×out_w: similarity between the patch's tap tensor
// and the search image's tap tensor, negatives clamped, upsampled and
// min-max normalized.
std::vector<Map2D> similarity_maps(const FeatureTaps& patch, const FeatureTaps& search, int out_h,
                                   int out_w, const FusionConfig& cfg);
std::vector<Map2D> similarity_maps(const Tensor& patch, const Tensor& masked_search,
                                   const NetworkSpec& net, const WeightBundle& bundle,
                                   const FusionConfig& cfg);

Map2D fuse_layers(const std::vector<Map2D>& maps, LayerCombine mode);

// Order-independent: per-pixel values are combined in sorted order.
InferenceMap accumulate_fixations(const std::vector<Map2D>& per_fixation, FixationCombine mode);

// Argmax-and-eliminate loop. Array trials guess among trial.candidates (the
// caller has already removed fixated ones); natural trials guess pixels.
// Ties go to the smallest (row, col).
GuessTrace infer_target(const Map2D& map, const Trial& trial, const GuessParams& params);

struct ClassScore {
  int class_id = 0;
  double score = 0.0;

  friend bool operator==(const ClassScore&, const ClassScore&) = default;
};

using Classifier = std::function<std::vector<float>(const Tensor&)>;

// Sum of per-patch class probabilities, ranked by descending score (ties by
// class id).
std::vector<ClassScore> infer_category(const std::vector<Tensor>& patches, const Classifier& classify_patch);
// Patches are upsampled to the bundle's input side before classification.
std::vector<ClassScore> infer_category(const std::vector<Tensor>& patches, const NetworkSpec& net,
                                       const WeightBundle& bundle);

// Candidates of an array trial not hit by any of `fixations`.
Trial exclude_fixated(const Trial& trial, const std::vector<Fixation>& fixations);

// The InferNet pipeline bound to one network and bundle.
class InferNet {
 public:
  InferNet(NetworkSpec net, BundlePtr bundle, FusionConfig cfg);

  const FusionConfig& config() const { return cfg_; }
  const WeightBundle& bundle() const { return *bundle_; }
  const NetworkSpec& network() const { return net_; }

  FeatureTaps search_features(const Image& search) const;
  // Per-layer maps for one fixation against precomputed search features.
  std::vector<Map2D> layer_maps(const Image& source, const Fixation& fixation,
                                const FeatureTaps& search, int height, int width) const;
  // Accumulated map over all fixations. Patches are cut from `source`; the
  // likelihood branch sees `masked_search`.
  InferenceMap infer_map(const Image& source, const Image& masked_search,
                         const std::vector<Fixation>& fixations, const std::string& trial_id) const;

 private:
  NetworkSpec net_;
  BundlePtr bundle_;
  FusionConfig cfg_;
};

}  // namespace infernet
