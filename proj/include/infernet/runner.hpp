#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "infernet/baselines.hpp"
#include "infernet/convnet.hpp"
#include "infernet/dataset.hpp"
#include "infernet/engine.hpp"
#include "infernet/report.hpp"

namespace infernet {

enum class ModelKind { InferNet, Chance, TempMatch, IttiKoch, RanWeight };

const char* to_string(ModelKind kind);
ModelKind parse_model(const std::string& text);

struct RunConfig {
  // NNWB path, or "random:<seed>" for a generated bundle. Required by the
  // infernet model and by category inference.
  std::string weights;
  std::filesystem::path manifest;
  std::filesystem::path out;
  std::vector<ModelKind> models{ModelKind::InferNet};
  FusionConfig fusion;
  GuessParams guess;
  std::vector<int> t_values{1};
  std::uint64_t seed = 0;
  int threads = 1;
  ErrorFixationOptions filter;
  int mask_side = 56;     // natural trials: side of the square masked per fixation
  int chance_reps = 1000; // Monte Carlo repetitions per natural trial for A_c
  bool per_subject = false;
  // Common-fixation mode: one unit per trial built from fixations shared by
  // at least common_min_subjects subjects.
  bool common = false;
  int common_radius = 32;
  int common_min_subjects = 2;
  bool heatmaps = false;
  SaliencyConfig saliency;

  // Everything that can change results. The thread count is left out: it
  // never changes output bytes.
  ConfigEcho echo() const;
};

// Loads or generates the bundle named by `weights`. With `with_head` the
// full classifier topology is required.
BundlePtr resolve_weights(const std::string& weights, bool with_head);

// The RanWeight baseline's bundle, derived from the run seed.
BundlePtr ranweight_bundle(std::uint64_t seed);

// A model to evaluate: a kind plus the fusion settings it runs with.
struct ModelSpec {
  std::string name;
  ModelKind kind = ModelKind::InferNet;
  FusionConfig fusion;
};

// One evaluation instance: a subject's (or the common) first T error
// fixations on a trial.
struct EvalUnit {
  std::size_t trial_index = 0;
  std::string subject;
  int T = 0;
  std::vector<Fixation> fixations;
  Trial effective;  // array trials: fixated candidates removed
  std::vector<Rect> masked;
};

std::vector<EvalUnit> build_units(const Dataset& dataset, int T, const RunConfig& cfg);

struct Bundles {
  BundlePtr pretrained;  // the --weights bundle
  BundlePtr random;      // RanWeight bundle
};

// Inference map of `model` for `unit`; chance has no map.
Map2D model_map(const ModelSpec& model, const EvalUnit& unit, const Image& search, const Bundles& bundles,
                const RunConfig& cfg);

struct SweepResult {
  EvalReport report;
  // samples[model][T]: guesses per unit, in unit order.
  std::map<std::string, std::map<int, std::vector<double>>> samples;
};

// Evaluates every model at every T. Units run on cfg.threads workers;
// results are merged in unit order so output never depends on the pool size.
SweepResult run_sweep(const Dataset& dataset, const std::vector<ModelSpec>& models, const Bundles& bundles,
                      const RunConfig& cfg);

// Ablation table: one row per model, one P_r column per T; "-" marks rows
// not significantly better than chance (Welch p >= 0.05).
std::string render_ablation_table(const EvalReport& report, const std::vector<std::string>& model_names,
                                  const std::vector<int>& t_values);

// InferNet, each tap alone, then the layer/fixation combination variants.
std::vector<ModelSpec> ablation_models(const FusionConfig& base);

// Category table: rows T, columns top-N accuracy (%). Trials need an
// imagenet_class.
struct CategoryResult {
  std::vector<int> t_values;
  std::vector<int> ns;
  std::vector<std::vector<double>> accuracy;
  int units = 0;
};

CategoryResult run_category(const Dataset& dataset, const BundlePtr& bundle, const std::vector<int>& ns,
                            const RunConfig& cfg);
std::string render_category_table(const CategoryResult& result, const ConfigEcho& echo);

// Runs fn(i) for i in [0, n) on `threads` workers. The first exception is
// rethrown after all workers stop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace infernet
