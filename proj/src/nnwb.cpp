#include <fstream>
#include <iterator>

#include <json.hpp>

#include "binary_io.hpp"
#include "infernet/convnet.hpp"
#include "infernet/error.hpp"
#include "nnwb_detail.hpp"

namespace infernet {
namespace {

constexpr char kMagic[4] = {'N', 'N', 'W', 'B'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;

std::string metadata_json(const WeightBundle::Metadata& m) {
  nlohmann::json j;
  j["preprocess_mean"] = m.mean;
  j["preprocess_scale"] = m.scale;
  j["input_side"] = m.input_side;
  j["labels_file"] = m.labels_file;
  j["provenance"] = m.provenance;
  return j.dump();
}

WeightBundle::Metadata parse_metadata(const std::string& text) {
  WeightBundle::Metadata m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.mean = j.at("preprocess_mean").get<std::array<float, 3>>();
    m.scale = j.at("preprocess_scale").get<std::array<float, 3>>();
    m.input_side = j.at("input_side").get<int>();
    m.labels_file = j.at("labels_file").get<std::string>();
    m.provenance = j.value("provenance", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("NNWB metadata: ") + e.what());
  }
  for (float s : m.scale) {
    if (!(s > 0.0f)) throw FormatError("NNWB metadata: preprocess_scale must be positive");
  }
  return m;
}

std::vector<std::string> read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open labels file " + path.string());
  std::vector<std::string> labels;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    labels.push_back(line);
  }
  return labels;
}

}  // namespace

namespace detail {

void stream_bundle(const WeightBundle& bundle, const ByteSink& sink) {
  ByteWriter head;
  head.put_bytes(kMagic, 4);
  head.put<std::uint32_t>(kVersion);
  head.put<std::uint32_t>(static_cast<std::uint32_t>(bundle.tensors().size()));
  sink(head.bytes().data(), head.bytes().size());
  for (const auto& [name, tensor] : bundle.tensors()) {
    ByteWriter w;
    w.put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.put_string(name);
    w.put<std::uint8_t>(kDtypeF32);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(tensor.rank()));
    for (int d : tensor.dims()) w.put<std::uint64_t>(static_cast<std::uint64_t>(d));
    sink(w.bytes().data(), w.bytes().size());
    sink(reinterpret_cast<const std::uint8_t*>(tensor.raw()), tensor.size() * sizeof(float));
  }
  const std::string meta = metadata_json(bundle.metadata());
  ByteWriter tail;
  tail.put<std::uint32_t>(static_cast<std::uint32_t>(meta.size()));
  tail.put_string(meta);
  sink(tail.bytes().data(), tail.bytes().size());
}

std::uint64_t bundle_checksum(const WeightBundle& bundle) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  stream_bundle(bundle, [&hash](const std::uint8_t* p, std::size_t n) { hash = fnv1a64(p, n, hash); });
  return hash;
}

}  // namespace detail

std::vector<std::uint8_t> serialize_bundle(const WeightBundle& bundle) {
  std::vector<std::uint8_t> bytes;
  detail::stream_bundle(bundle, [&bytes](const std::uint8_t* p, std::size_t n) {
    bytes.insert(bytes.end(), p, p + n);
  });
  detail::ByteWriter trailer;
  trailer.put<std::uint64_t>(bundle.checksum());
  bytes.insert(bytes.end(), trailer.bytes().begin(), trailer.bytes().end());
  return bytes;
}

void save_weight_bundle(const WeightBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  detail::stream_bundle(bundle, [&out](const std::uint8_t* p, std::size_t n) {
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
  });
  const std::uint64_t checksum = bundle.checksum();
  out.write(reinterpret_cast<const char*>(&checksum), sizeof checksum);
  if (!out) throw IoError("write failed for " + path.string());

  const auto labels_path = path.parent_path() / bundle.metadata().labels_file;
  std::ofstream labels(labels_path);
  if (!labels) throw IoError("cannot write " + labels_path.string());
  for (const auto& label : bundle.labels()) labels << label << '\n';
}

BundlePtr load_weight_bundle(const std::filesystem::path& path, const NetworkSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weight bundle " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  detail::ByteReader r(bytes.data(), bytes.size());

  if (r.get_string(4) != std::string(kMagic, 4)) throw FormatError(path.string() + ": bad magic, not an NNWB file");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) {
    throw FormatError(path.string() + ": unsupported NNWB version " + std::to_string(version));
  }
  const auto count = r.get<std::uint32_t>();
  std::map<std::string, Tensor> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint16_t>();
    std::string name = r.get_string(name_len);
    const auto dtype = r.get<std::uint8_t>();
    if (dtype != kDtypeF32) throw FormatError("tensor '" + name + "': unsupported dtype " + std::to_string(dtype));
    const auto rank = r.get<std::uint8_t>();
    if (rank < 1 || rank > 4) throw FormatError("tensor '" + name + "': unsupported rank " + std::to_string(rank));
    std::vector<int> dims(rank);
    std::size_t elements = 1;
    for (auto& d : dims) {
      const auto v = r.get<std::uint64_t>();
      if (v < 1 || v > (1u << 30)) throw FormatError("tensor '" + name + "': bad extent");
      d = static_cast<int>(v);
      elements *= v;
    }
    if (elements > r.remaining() / sizeof(float)) throw IoError(path.string() + ": truncated tensor '" + name + "'");
    std::vector<float> values(elements);
    std::memcpy(values.data(), r.take(elements * sizeof(float)), elements * sizeof(float));
    if (!tensors.emplace(name, Tensor(std::move(dims), std::move(values))).second) {
      throw FormatError(path.string() + ": duplicate tensor '" + name + "'");
    }
  }
  const auto meta_len = r.get<std::uint32_t>();
  const auto meta = parse_metadata(r.get_string(meta_len));
  const std::size_t body = r.position();
  const auto stored = r.get<std::uint64_t>();
  if (r.remaining() != 0) throw FormatError(path.string() + ": trailing bytes after checksum");
  if (detail::fnv1a64(bytes.data(), body) != stored) throw FormatError(path.string() + ": checksum mismatch");

  auto labels = read_labels(path.parent_path() / meta.labels_file);
  auto bundle = std::make_shared<const WeightBundle>(std::move(tensors), meta, std::move(labels));
  bundle->validate(spec);
  if (spec.has_head()) {
    const int classes = spec.layer(spec.size() - (spec.layers().back().kind == LayerKind::Softmax ? 1 : 0)).out;
    if (static_cast<int>(bundle->labels().size()) != classes) {
      throw FormatError("labels file has " + std::to_string(bundle->labels().size()) + " lines, expected " +
                        std::to_string(classes));
    }
  }
  return bundle;
}

}  // namespace infernet
