#include "infernet/convnet.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cstdio>
#include <random>
#include <sstream>

#include "infernet/error.hpp"
#include "nnwb_detail.hpp"

namespace infernet {
namespace {

struct StageBlock {
  int convs;
  int channels;
};

// VGG16 "D" configuration.
constexpr StageBlock kVggBlocks[] = {{2, 64}, {2, 128}, {3, 256}, {3, 512}, {3, 512}};

std::vector<LayerDesc> vgg16_feature_layers() {
  std::vector<LayerDesc> layers;
  int block_no = 1;
  for (const auto& block : kVggBlocks) {
    for (int i = 1; i <= block.convs; ++i) {
      const std::string suffix = std::to_string(block_no) + "_" + std::to_string(i);
      layers.push_back({LayerKind::Conv, "conv" + suffix, block.channels, 3, 1, 1});
      layers.push_back({LayerKind::Relu, "relu" + suffix, 0, 0, 0, 1});
    }
    layers.push_back({LayerKind::MaxPool, "pool" + std::to_string(block_no), 0, 2, 0, 2});
    ++block_no;
  }
  return layers;
}

constexpr int kDefaultTapIndices[] = {5, 10, 17, 23, 24, 30, 31};

std::string default_label(int index) {
  for (int i = 0; i < 7; ++i) {
    if (kDefaultTapIndices[i] == index) return "T" + std::to_string(i + 1);
  }
  return "L" + std::to_string(index);
}

// Walks the spec for a square input and reports each weighted layer's
// expected kernel and bias shapes.
struct ExpectedShape {
  std::string layer;
  std::vector<int> weight;
  std::vector<int> bias;
};

std::vector<ExpectedShape> expected_shapes(const NetworkSpec& spec, int input_side) {
  std::vector<ExpectedShape> shapes;
  int channels = spec.input_channels();
  int extent = input_side;
  int features = 0;
  for (const auto& layer : spec.layers()) {
    switch (layer.kind) {
      case LayerKind::Conv:
        shapes.push_back({layer.name, {layer.out, channels, layer.kernel, layer.kernel}, {layer.out}});
        channels = layer.out;
        extent = (extent + 2 * layer.pad - layer.kernel) / layer.stride + 1;
        break;
      case LayerKind::MaxPool:
        extent = pooled_extent(extent, layer.kernel, layer.stride, spec.ceil_mode());
        break;
      case LayerKind::Flatten:
        features = channels * extent * extent;
        break;
      case LayerKind::Linear:
        shapes.push_back({layer.name, {layer.out, features}, {layer.out}});
        features = layer.out;
        break;
      case LayerKind::Relu:
      case LayerKind::Softmax:
        break;
    }
  }
  return shapes;
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  const int outputs = weight.dim(0), inputs = weight.dim(1);
  if (static_cast<int>(input.size()) != inputs) {
    throw ShapeError("linear layer expects " + std::to_string(inputs) + " inputs, got " +
                     input.shape_string());
  }
  using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMatrix> w(weight.raw(), outputs, inputs);
  Eigen::Map<const Eigen::VectorXf> x(input.raw(), inputs);
  Tensor out({outputs});
  Eigen::Map<Eigen::VectorXf> y(out.raw(), outputs);
  y.noalias() = w * x;
  y += Eigen::Map<const Eigen::VectorXf>(bias.raw(), outputs);
  return out;
}

Tensor apply_layer(const NetworkSpec& spec, const WeightBundle& bundle, const LayerDesc& layer,
                   Tensor x) {
  switch (layer.kind) {
    case LayerKind::Conv: {
      const Tensor& bias = bundle.tensor(layer.name + ".bias");
      return conv2d(x, bundle.tensor(layer.name + ".weight"), bias.data(), layer.stride, layer.pad);
    }
    case LayerKind::Relu:
      return relu(std::move(x));
    case LayerKind::MaxPool:
      return maxpool2d(x, layer.kernel, layer.stride, spec.ceil_mode());
    case LayerKind::Flatten:
      x.reshape({static_cast<int>(x.size())});
      return x;
    case LayerKind::Linear:
      return linear(x, bundle.tensor(layer.name + ".weight"), bundle.tensor(layer.name + ".bias"));
    case LayerKind::Softmax: {
      auto p = softmax(x.data());
      const int n = static_cast<int>(p.size());
      return Tensor({n}, std::move(p));
    }
  }
  return x;
}

}  // namespace

NetworkSpec::NetworkSpec(std::vector<LayerDesc> layers, bool ceil_mode, int input_channels)
    : layers_(std::move(layers)), ceil_mode_(ceil_mode), input_channels_(input_channels) {
  if (layers_.empty()) throw ArgumentError("network spec has no layers");
}

NetworkSpec NetworkSpec::vgg16_features(bool ceil_mode) {
  return NetworkSpec(vgg16_feature_layers(), ceil_mode);
}

NetworkSpec NetworkSpec::vgg16(bool ceil_mode) {
  auto layers = vgg16_feature_layers();
  layers.push_back({LayerKind::Flatten, "flatten", 0, 0, 0, 1});
  layers.push_back({LayerKind::Linear, "fc6", 4096, 0, 0, 1});
  layers.push_back({LayerKind::Relu, "relu6", 0, 0, 0, 1});
  layers.push_back({LayerKind::Linear, "fc7", 4096, 0, 0, 1});
  layers.push_back({LayerKind::Relu, "relu7", 0, 0, 0, 1});
  layers.push_back({LayerKind::Linear, "fc8", 1000, 0, 0, 1});
  layers.push_back({LayerKind::Softmax, "softmax", 0, 0, 0, 1});
  return NetworkSpec(std::move(layers), ceil_mode);
}

const LayerDesc& NetworkSpec::layer(int index) const {
  if (index < 1 || index > size()) {
    throw ArgumentError("layer index " + std::to_string(index) + " outside 1.." +
                        std::to_string(size()));
  }
  return layers_[index - 1];
}

int NetworkSpec::feature_depth() const {
  for (int i = 0; i < size(); ++i) {
    if (layers_[i].kind == LayerKind::Flatten) return i;
  }
  return size();
}

int NetworkSpec::extent_at(int index, int extent) const {
  for (int i = 1; i <= std::min(index, feature_depth()); ++i) {
    const auto& l = layer(i);
    if (l.kind == LayerKind::Conv) {
      extent = (extent + 2 * l.pad - l.kernel) / l.stride + 1;
    } else if (l.kind == LayerKind::MaxPool) {
      extent = pooled_extent(extent, l.kernel, l.stride, ceil_mode_);
    }
    if (extent < 1) return extent;
  }
  return extent;
}

int NetworkSpec::minimum_input_extent(int index) const {
  for (int side = 1; side <= 4096; ++side) {
    if (extent_at(index, side) >= 1) return side;
  }
  throw ArgumentError("no input extent survives to layer " + std::to_string(index));
}

std::vector<std::string> NetworkSpec::index_table() const {
  std::vector<std::string> table;
  for (int i = 1; i <= size(); ++i) table.push_back(std::to_string(i) + "=" + layer(i).name);
  return table;
}

std::vector<Tap> default_taps() {
  std::vector<Tap> taps;
  for (int index : kDefaultTapIndices) taps.push_back({default_label(index), index});
  return taps;
}

std::vector<Tap> parse_taps(const std::string& csv) {
  std::vector<Tap> taps;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    int index = 0;
    try {
      index = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || index < 1) throw ArgumentError("bad tap index '" + item + "'");
    taps.push_back({default_label(index), index});
  }
  if (taps.empty()) throw ArgumentError("tap list is empty");
  return taps;
}

std::string format_taps(const std::vector<Tap>& taps) {
  std::string out;
  for (const auto& t : taps) {
    if (!out.empty()) out += ',';
    out += std::to_string(t.index);
  }
  return out;
}

WeightBundle::WeightBundle(std::map<std::string, Tensor> tensors, Metadata meta,
                           std::vector<std::string> labels)
    : tensors_(std::move(tensors)), meta_(std::move(meta)), labels_(std::move(labels)) {
  checksum_ = detail::bundle_checksum(*this);
}

const Tensor& WeightBundle::tensor(const std::string& name) const {
  const auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ShapeError("weight bundle has no tensor '" + name + "'");
  return it->second;
}

std::string WeightBundle::checksum_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(checksum_));
  return buf;
}

void WeightBundle::validate(const NetworkSpec& spec) const {
  for (const auto& shape : expected_shapes(spec, meta_.input_side)) {
    for (const auto& [suffix, dims] : {std::pair{".weight", shape.weight}, std::pair{".bias", shape.bias}}) {
      const auto it = tensors_.find(shape.layer + suffix);
      if (it == tensors_.end()) {
        throw ShapeError("layer " + shape.layer + ": missing tensor '" + shape.layer + suffix + "'");
      }
      if (it->second.dims() != dims) {
        throw ShapeError("layer " + shape.layer + ": tensor '" + shape.layer + suffix + "' has shape " +
                         it->second.shape_string() + ", expected " + Tensor(dims).shape_string());
      }
    }
  }
}

BundlePtr random_bundle(std::uint64_t seed, const NetworkSpec& spec) {
  std::mt19937_64 rng(seed);
  std::map<std::string, Tensor> tensors;
  for (const auto& shape : expected_shapes(spec, 224)) {
    Tensor weight(shape.weight);
    std::size_t fan_in = 1;
    for (std::size_t i = 1; i < shape.weight.size(); ++i) fan_in *= shape.weight[i];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (float& v : weight.data()) {
      // 24 random bits -> [0, 1); avoids implementation-defined distributions
      const double u = static_cast<double>(rng() >> 40) * 0x1p-24;
      v = static_cast<float>((2.0 * u - 1.0) * bound);
    }
    tensors.emplace(shape.layer + ".weight", std::move(weight));
    tensors.emplace(shape.layer + ".bias", Tensor(shape.bias, 0.0f));
  }
  WeightBundle::Metadata meta;
  meta.mean = {0.485f, 0.456f, 0.406f};
  meta.scale = {0.229f, 0.224f, 0.225f};
  meta.input_side = 224;
  meta.provenance = "random:seed=" + std::to_string(seed);
  std::vector<std::string> labels;
  labels.reserve(1000);
  for (int i = 0; i < 1000; ++i) labels.push_back("class_" + std::to_string(i));
  return std::make_shared<const WeightBundle>(std::move(tensors), std::move(meta), std::move(labels));
}

Tensor preprocess(Tensor rgb, const WeightBundle& bundle) {
  if (rgb.rank() != 3 || rgb.dim(0) != 3) {
    throw ShapeError("preprocess expects a 3×H×W tensor, got " + rgb.shape_string());
  }
  const auto& m = bundle.metadata();
  const std::size_t plane = static_cast<std::size_t>(rgb.dim(1)) * rgb.dim(2);
  for (int c = 0; c < 3; ++c) {
    float* p = rgb.raw() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) p[i] = (p[i] - m.mean[c]) / m.scale[c];
  }
  return rgb;
}

void FeatureTaps::add(std::string label, Tensor t) {
  labels_.push_back(std::move(label));
  tensors_.push_back(std::move(t));
}

const Tensor& FeatureTaps::at(const std::string& label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return tensors_[i];
  }
  throw ArgumentError("no captured tap '" + label + "'");
}

FeatureTaps forward_taps(const NetworkSpec& spec, const WeightBundle& bundle, const Tensor& image,
                         const std::vector<Tap>& taps) {
  if (taps.empty()) throw ArgumentError("forward_taps needs at least one tap");
  if (image.rank() != 3 || image.dim(0) != spec.input_channels()) {
    throw ShapeError("forward_taps expects a " + std::to_string(spec.input_channels()) +
                     "×H×W image, got " + image.shape_string());
  }
  int deepest = 0;
  for (const auto& tap : taps) {
    if (tap.index < 1 || tap.index > spec.feature_depth()) {
      throw ArgumentError("tap index " + std::to_string(tap.index) + " is not a feature layer (1.." +
                          std::to_string(spec.feature_depth()) + ")");
    }
    deepest = std::max(deepest, tap.index);
  }
  const int side = std::min(image.dim(1), image.dim(2));
  if (spec.extent_at(deepest, side) < 1) {
    throw ShapeError("input " + image.shape_string() + " too small for layer " +
                     std::to_string(deepest) + "; minimum extent is " +
                     std::to_string(spec.minimum_input_extent(deepest)));
  }

  std::vector<Tensor> captured(taps.size());
  Tensor x = image;
  for (int i = 1; i <= deepest; ++i) {
    x = apply_layer(spec, bundle, spec.layer(i), std::move(x));
    for (std::size_t t = 0; t < taps.size(); ++t) {
      if (taps[t].index == i) captured[t] = x;
    }
  }
  FeatureTaps out;
  for (std::size_t t = 0; t < taps.size(); ++t) out.add(taps[t].label, std::move(captured[t]));
  return out;
}

std::vector<float> classify(const NetworkSpec& spec, const WeightBundle& bundle, const Tensor& image) {
  const int side = bundle.metadata().input_side;
  if (image.rank() != 3 || image.dim(0) != spec.input_channels() || image.dim(1) != side ||
      image.dim(2) != side) {
    throw ShapeError("classify expects a 3×" + std::to_string(side) + "×" + std::to_string(side) +
                     " input, got " + image.shape_string());
  }
  if (!spec.has_head()) throw ArgumentError("network spec has no classification head");
  Tensor x = image;
  for (int i = 1; i <= spec.size(); ++i) x = apply_layer(spec, bundle, spec.layer(i), std::move(x));
  return {x.data().begin(), x.data().end()};
}

}  // namespace infernet
