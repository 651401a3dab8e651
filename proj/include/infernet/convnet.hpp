#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "infernet/tensor.hpp"

namespace infernet {

enum class LayerKind { Conv, Relu, MaxPool, Flatten, Linear, Softmax };

struct LayerDesc {
  LayerKind kind = LayerKind::Relu;
  std::string name;  // stage name, e.g. "conv3_2", "relu3_2", "pool3", "fc6"
  int out = 0;       // output channels (conv) or features (linear)
  int kernel = 0;
  int pad = 0;
  int stride = 1;
};

// A captured layer: `index` is the 1-based position in the network's layer
// sequence; the output of that layer is recorded.
struct Tap {
  std::string label;
  int index = 0;

  friend bool operator==(const Tap&, const Tap&) = default;
};

// Ordered layer list. Indices are 1-based so that index 31 of VGG16 is the
// fifth pooling stage.
class NetworkSpec {
 public:
  // 13 conv+relu pairs with 5 pools (indices 1..31), then flatten, fc6,
  // relu, fc7, relu, fc8, softmax (indices 32..38).
  static NetworkSpec vgg16(bool ceil_mode = true);
  // Feature layers only (1..31).
  static NetworkSpec vgg16_features(bool ceil_mode = true);

  NetworkSpec(std::vector<LayerDesc> layers, bool ceil_mode, int input_channels = 3);

  const std::vector<LayerDesc>& layers() const { return layers_; }
  const LayerDesc& layer(int index) const;
  int size() const { return static_cast<int>(layers_.size()); }
  bool ceil_mode() const { return ceil_mode_; }
  int input_channels() const { return input_channels_; }
  // Number of layers before the first flatten.
  int feature_depth() const;
  bool has_head() const { return feature_depth() < size(); }

  // Spatial extent after layer `index` for a square input of side `extent`;
  // values < 1 mean the input does not survive to that layer.
  int extent_at(int index, int extent) const;
  // Smallest square input side that survives to layer `index`.
  int minimum_input_extent(int index) const;

  // One "index -> stage" line per layer, emitted in reports.
  std::vector<std::string> index_table() const;

 private:
  std::vector<LayerDesc> layers_;
  bool ceil_mode_;
  int input_channels_;
};

// T1..T7 bound to VGG16 indices {5, 10, 17, 23, 24, 30, 31}.
std::vector<Tap> default_taps();
// "5,10,17" -> taps labelled with their default T-label when they have one,
// "L<index>" otherwise.
std::vector<Tap> parse_taps(const std::string& csv);
std::string format_taps(const std::vector<Tap>& taps);

// Immutable store of named weight tensors plus preprocessing constants and
// class labels. Shared between threads through shared_ptr<const>.
class WeightBundle {
 public:
  struct Metadata {
    std::array<float, 3> mean{};
    std::array<float, 3> scale{1.0f, 1.0f, 1.0f};  // x' = (x - mean) / scale
    int input_side = 224;
    std::string labels_file = "labels.txt";
    std::string provenance;
  };

  WeightBundle(std::map<std::string, Tensor> tensors, Metadata meta,
               std::vector<std::string> labels);

  bool has(const std::string& name) const { return tensors_.count(name) != 0; }
  const Tensor& tensor(const std::string& name) const;
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }
  const Metadata& metadata() const { return meta_; }
  const std::vector<std::string>& labels() const { return labels_; }
  // FNV-1a over the NNWB serialization of this bundle.
  std::uint64_t checksum() const { return checksum_; }
  std::string checksum_hex() const;

  // Throws ShapeError naming the first layer of `spec` whose kernel or bias
  // is missing or has the wrong shape.
  void validate(const NetworkSpec& spec) const;

 private:
  std::map<std::string, Tensor> tensors_;
  Metadata meta_;
  std::vector<std::string> labels_;
  std::uint64_t checksum_ = 0;
};

using BundlePtr = std::shared_ptr<const WeightBundle>;

// NNWB reader/writer. The labels file named in the metadata is resolved next
// to the bundle.
BundlePtr load_weight_bundle(const std::filesystem::path& path,
                             const NetworkSpec& spec = NetworkSpec::vgg16());
void save_weight_bundle(const WeightBundle& bundle, const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_bundle(const WeightBundle& bundle);

// Kernels uniform in [-a, a] with a = sqrt(6 / fan_in); biases zero. Same
// tensor names and shapes as a pretrained bundle for `spec`.
BundlePtr random_bundle(std::uint64_t seed, const NetworkSpec& spec = NetworkSpec::vgg16());

// RGB in [0, 1] -> normalized network input.
Tensor preprocess(Tensor rgb, const WeightBundle& bundle);

class FeatureTaps {
 public:
  void add(std::string label, Tensor t);
  const Tensor& at(const std::string& label) const;
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  std::size_t size() const { return tensors_.size(); }

 private:
  std::vector<std::string> labels_;
  std::vector<Tensor> tensors_;
};

// Runs the feature layers up to the deepest requested tap, capturing each.
FeatureTaps forward_taps(const NetworkSpec& spec, const WeightBundle& bundle, const Tensor& image,
                         const std::vector<Tap>& taps);

// Full forward pass on a preprocessed input_side×input_side image.
std::vector<float> classify(const NetworkSpec& spec, const WeightBundle& bundle,
                            const Tensor& image);

}  // namespace infernet
