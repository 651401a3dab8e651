#include "infernet/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "infernet/error.hpp"
#include "infernet/evaluation.hpp"
#include "infernet/random.hpp"

namespace infernet {
namespace {

// Stream identifiers for mix_seed, one per consumer of randomness.
constexpr std::uint64_t kChanceStream = 0xc4a7;
constexpr std::uint64_t kBaselineStream = 0xac;
constexpr std::uint64_t kRanWeightStream = 0x7a4d;

std::string join_ints(const std::vector<int>& values, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? sep : "") + std::to_string(values[i]);
  return out;
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
  return buf;
}

std::vector<std::string> comment_lines(const ConfigEcho& echo) {
  std::vector<std::string> lines;
  for (const auto& [k, v] : echo) lines.push_back(k + "=" + v);
  return lines;
}

}  // namespace

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::InferNet: return "infernet";
    case ModelKind::Chance: return "chance";
    case ModelKind::TempMatch: return "tempmatch";
    case ModelKind::IttiKoch: return "ittikoch";
    case ModelKind::RanWeight: return "ranweight";
  }
  return "?";
}

ModelKind parse_model(const std::string& text) {
  for (ModelKind k : {ModelKind::InferNet, ModelKind::Chance, ModelKind::TempMatch, ModelKind::IttiKoch,
                      ModelKind::RanWeight}) {
    if (text == to_string(k)) return k;
  }
  throw ArgumentError("model must be infernet|chance|tempmatch|ittikoch|ranweight, got '" + text + "'");
}

ConfigEcho RunConfig::echo() const {
  std::string model_list;
  for (std::size_t i = 0; i < models.size(); ++i) model_list += (i ? "," : "") + std::string(to_string(models[i]));
  std::string tap_table;
  const NetworkSpec net = NetworkSpec::vgg16_features();
  for (std::size_t i = 0; i < fusion.taps.size(); ++i) {
    const Tap& t = fusion.taps[i];
    tap_table += (i ? ";" : "") + t.label + "=" + std::to_string(t.index) + ":" + net.layer(t.index).name;
  }
  return {
      {"weights", weights.empty() ? "none" : weights},
      {"manifest", manifest.filename().string()},
      {"models", model_list},
      {"taps", tap_table},
      {"layer_combine", to_string(fusion.layer_combine)},
      {"fixation_combine", to_string(fusion.fixation_combine)},
      {"patch_side", std::to_string(fusion.patch_side)},
      {"clamp_negative", fusion.clamp_negative ? "1" : "0"},
      {"similarity", fusion.similarity == SimilarityOp::Cosine ? "cosine" : "dot"},
      {"upsample", fusion.upsample == Interpolation::HalfPixel ? "half_pixel" : "align_corners"},
      {"elim_side", std::to_string(guess.elim_side)},
      {"budget", std::to_string(guess.budget)},
      {"iou_threshold", format_double(guess.iou_threshold)},
      {"T", join_ints(t_values, ",")},
      {"seed", std::to_string(seed)},
      {"skip_first", filter.skip_first ? "1" : "0"},
      {"target_margin", std::to_string(filter.target_margin)},
      {"mask_side", std::to_string(mask_side)},
      {"chance_reps", std::to_string(chance_reps)},
      {"grouping", per_subject ? "per_subject" : "per_trace"},
      {"common", common ? "radius=" + std::to_string(common_radius) +
                              ",min_subjects=" + std::to_string(common_min_subjects)
                        : "off"},
  };
}

BundlePtr resolve_weights(const std::string& weights, bool with_head) {
  const NetworkSpec spec = with_head ? NetworkSpec::vgg16() : NetworkSpec::vgg16_features();
  if (weights.rfind("random:", 0) == 0) {
    std::uint64_t seed = 0;
    try {
      std::size_t used = 0;
      seed = std::stoull(weights.substr(7), &used);
      if (used != weights.size() - 7) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ArgumentError("--weights random:<seed> needs an unsigned integer seed, got '" + weights + "'");
    }
    return random_bundle(seed, spec);
  }
  if (weights.empty()) throw ArgumentError("--weights is required (an NNWB path or random:<seed>)");
  return load_weight_bundle(weights, spec);
}

BundlePtr ranweight_bundle(std::uint64_t seed) {
  return random_bundle(mix_seed(seed, {kRanWeightStream}), NetworkSpec::vgg16_features());
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<EvalUnit> build_units(const Dataset& dataset, int T, const RunConfig& cfg) {
  if (T < 1) throw ArgumentError("T must be >= 1");
  std::vector<EvalUnit> units;
  for (std::size_t ti = 0; ti < dataset.trials.size(); ++ti) {
    const Trial& trial = dataset.trials[ti];
    std::vector<std::pair<std::string, std::vector<Fixation>>> sources;
    if (cfg.common) {
      std::vector<FixationSequence> errors;
      for (const auto* seq : dataset.sequences_for(trial.id)) {
        errors.push_back({seq->subject, seq->trial, filter_error_fixations(*seq, trial, cfg.filter)});
      }
      if (errors.size() < 2) continue;
      sources.emplace_back("common", common_fixations(errors, cfg.common_radius, cfg.common_min_subjects));
    } else {
      for (const auto* seq : dataset.sequences_for(trial.id)) {
        sources.emplace_back(seq->subject, filter_error_fixations(*seq, trial, cfg.filter));
      }
    }
    for (auto& [subject, fixations] : sources) {
      if (static_cast<int>(fixations.size()) < T) continue;
      EvalUnit unit;
      unit.trial_index = ti;
      unit.subject = subject;
      unit.T = T;
      unit.fixations.assign(fixations.begin(), fixations.begin() + T);
      if (trial.task == TaskType::Array) {
        unit.effective = exclude_fixated(trial, unit.fixations);
        for (const auto& c : trial.candidates) {
          const bool fixated = std::any_of(unit.fixations.begin(), unit.fixations.end(),
                                           [&](const Fixation& f) { return c.box.contains(f.x, f.y); });
          if (fixated) unit.masked.push_back(c.box);
        }
      } else {
        unit.effective = trial;
        const int half = cfg.mask_side / 2;
        for (const auto& f : unit.fixations) unit.masked.push_back({f.x - half, f.y - half, cfg.mask_side, cfg.mask_side});
      }
      units.push_back(std::move(unit));
    }
  }
  return units;
}

Map2D model_map(const ModelSpec& model, const EvalUnit& unit, const Image& search, const Bundles& bundles,
                const RunConfig& cfg) {
  const Image masked = mask_regions(search, unit.masked);
  switch (model.kind) {
    case ModelKind::InferNet:
    case ModelKind::RanWeight: {
      const BundlePtr& bundle = model.kind == ModelKind::InferNet ? bundles.pretrained : bundles.random;
      if (!bundle) throw ArgumentError(std::string("model ") + to_string(model.kind) + " needs a weight bundle");
      const InferNet net(NetworkSpec::vgg16_features(), bundle, model.fusion);
      return net.infer_map(search, masked, unit.fixations, unit.effective.id).map;
    }
    case ModelKind::TempMatch: {
      std::vector<Map2D> per_fixation;
      for (const auto& f : unit.fixations) {
        per_fixation.push_back(template_match_map(crop_clamped(search, f.x, f.y, model.fusion.patch_side), masked));
      }
      return accumulate_fixations(per_fixation, model.fusion.fixation_combine).map;
    }
    case ModelKind::IttiKoch: return ittikoch_saliency(masked, cfg.saliency);
    case ModelKind::Chance: break;
  }
  throw ArgumentError("the chance model has no inference map");
}

SweepResult run_sweep(const Dataset& dataset, const std::vector<ModelSpec>& models, const Bundles& bundles,
                      const RunConfig& cfg) {
  if (models.empty()) throw ArgumentError("no models to evaluate");
  SweepResult result;
  result.report.config = cfg.echo();
  result.report.config.emplace_back("bundle_checksum",
                                    bundles.pretrained ? bundles.pretrained->checksum_hex() : std::string("none"));
  result.report.config.emplace_back("ranweight_checksum",
                                    bundles.random ? bundles.random->checksum_hex() : std::string("none"));
  const auto comments = comment_lines(result.report.config);
  if (cfg.heatmaps) {
    for (const auto& m : models) {
      if (m.kind != ModelKind::Chance) std::filesystem::create_directories(cfg.out / "maps" / m.name);
    }
  }

  for (int T : cfg.t_values) {
    const auto units = build_units(dataset, T, cfg);
    if (units.empty()) continue;
    std::vector<std::vector<double>> guesses(units.size(), std::vector<double>(models.size()));
    parallel_for(units.size(), cfg.threads, [&](std::size_t i) {
      const EvalUnit& unit = units[i];
      const Trial& trial = dataset.trials[unit.trial_index];
      Image search;
      for (std::size_t m = 0; m < models.size(); ++m) {
        GuessTrace trace;
        if (models[m].kind == ModelKind::Chance) {
          trace = chance_trace(unit.effective, mix_seed(cfg.seed, {kChanceStream, static_cast<std::uint64_t>(T), i}),
                               cfg.guess);
        } else {
          if (search.pixels.empty()) search = read_image(dataset.resolve(trial.search_image));
          const Map2D map = model_map(models[m], unit, search, bundles, cfg);
          trace = infer_target(map, unit.effective, cfg.guess);
          if (cfg.heatmaps) {
            auto lines = comments;
            lines.push_back("model=" + models[m].name + " trial=" + trial.id + " subject=" + unit.subject +
                            " T=" + std::to_string(T));
            write_pgm(map, cfg.out / "maps" / models[m].name /
                               (trial.id + "_" + unit.subject + "_T" + std::to_string(T) + ".pgm"),
                      lines);
          }
        }
        guesses[i][m] = trace.success_index ? *trace.success_index : cfg.guess.budget + 1.0;
      }
    });

    std::vector<Trial> effective;
    std::vector<std::string> groups;
    for (const auto& u : units) {
      effective.push_back(u.effective);
      groups.push_back(u.subject);
    }
    const double a_c = monte_carlo_chance(effective, std::max(100, cfg.chance_reps),
                                          mix_seed(cfg.seed, {kBaselineStream, static_cast<std::uint64_t>(T)}),
                                          cfg.guess);
    std::vector<std::vector<double>> per_model(models.size());
    for (std::size_t m = 0; m < models.size(); ++m) {
      for (const auto& g : guesses) per_model[m].push_back(g[m]);
      const GuessStats s = cfg.per_subject ? summarize_grouped(per_model[m], groups) : summarize(per_model[m]);
      result.report.rows.push_back(make_row(models[m].name, T, s.n, s.mean, s.std_error, a_c));
      result.samples[models[m].name][T] = per_model[m];
    }
    for (std::size_t a = 0; a < models.size(); ++a) {
      for (std::size_t b = a + 1; b < models.size(); ++b) {
        double p = 1.0;
        if (per_model[a].size() >= 2) {
          try {
            p = welch_ttest(per_model[a], per_model[b]);
          } catch (const ArgumentError&) {
            // both samples constant: equal means are indistinguishable, any
            // other difference is certain
            p = per_model[a].front() == per_model[b].front() ? 1.0 : 0.0;
          }
        }
        result.report.pvalues.push_back({T, models[a].name, models[b].name, p});
      }
    }
  }
  return result;
}

std::vector<ModelSpec> ablation_models(const FusionConfig& base) {
  std::vector<ModelSpec> out;
  out.push_back({"InferNet", ModelKind::InferNet, base});
  for (const Tap& tap : base.taps) {
    FusionConfig single = base;
    single.taps = {tap};
    out.push_back({"Layer " + std::to_string(tap.index), ModelKind::InferNet, single});
  }
  const std::pair<LayerCombine, FixationCombine> combos[] = {
      {LayerCombine::Max, FixationCombine::Max},
      {LayerCombine::Mean, FixationCombine::Max},
      {LayerCombine::Mean, FixationCombine::Mean},
  };
  for (const auto& [layer, fixation] : combos) {
    FusionConfig variant = base;
    variant.layer_combine = layer;
    variant.fixation_combine = fixation;
    std::string name = std::string(layer == LayerCombine::Max ? "Max" : "Mean") + " + " +
                       (fixation == FixationCombine::Max ? "Max" : "Mean");
    out.push_back({name, ModelKind::InferNet, variant});
  }
  return out;
}

std::string render_ablation_table(const EvalReport& report, const std::vector<std::string>& model_names,
                                  const std::vector<int>& t_values) {
  std::ostringstream out;
  for (const auto& [k, v] : report.config) out << "# " << k << "=" << v << "\n";
  out << "# cells: P_r in percent; '-' = not significantly better than chance (Welch p >= 0.05)\n";
  out << "model";
  for (int T : t_values) out << ",T=" << T;
  out << "\n";
  for (const auto& name : model_names) {
    out << name;
    for (int T : t_values) {
      const auto row = std::find_if(report.rows.begin(), report.rows.end(),
                                    [&](const ReportRow& r) { return r.model == name && r.T == T; });
      if (row == report.rows.end()) {
        out << ",";
        continue;
      }
      const auto pv = std::find_if(report.pvalues.begin(), report.pvalues.end(), [&](const PairwiseP& p) {
        return p.T == T && ((p.model_a == name && p.model_b == "chance") || (p.model_b == name && p.model_a == "chance"));
      });
      const bool significant = pv != report.pvalues.end() && pv->p < 0.05 && row->p_r > 0.0;
      out << "," << (significant ? percent(row->p_r) : "-");
    }
    out << "\n";
  }
  return out.str();
}

CategoryResult run_category(const Dataset& dataset, const BundlePtr& bundle, const std::vector<int>& ns,
                            const RunConfig& cfg) {
  if (!bundle) throw ArgumentError("category inference needs a weight bundle");
  const NetworkSpec net = NetworkSpec::vgg16();
  const int labels = static_cast<int>(bundle->labels().size());
  CategoryResult result;
  result.ns = ns;
  for (int T : cfg.t_values) {
    std::vector<EvalUnit> units;
    for (auto& u : build_units(dataset, T, cfg)) {
      if (dataset.trials[u.trial_index].imagenet_class) units.push_back(std::move(u));
    }
    if (units.empty()) continue;
    std::vector<std::vector<int>> rankings(units.size());
    std::vector<int> truths;
    for (const auto& u : units) truths.push_back(*dataset.trials[u.trial_index].imagenet_class);
    parallel_for(units.size(), cfg.threads, [&](std::size_t i) {
      const Trial& trial = dataset.trials[units[i].trial_index];
      const Image search = read_image(dataset.resolve(trial.search_image));
      std::vector<Tensor> patches;
      for (const auto& f : units[i].fixations) patches.push_back(extract_patch(search, f.x, f.y, cfg.fusion.patch_side, *bundle));
      for (const auto& score : infer_category(patches, net, *bundle)) rankings[i].push_back(score.class_id);
    });
    result.t_values.push_back(T);
    result.accuracy.push_back(topn_table(std::vector<std::vector<std::vector<int>>>{rankings}, truths, ns, labels)[0]);
    result.units += static_cast<int>(units.size());
  }
  return result;
}

std::string render_category_table(const CategoryResult& result, const ConfigEcho& echo) {
  std::ostringstream out;
  for (const auto& [k, v] : echo) out << "# " << k << "=" << v << "\n";
  out << "# cells: top-N category accuracy in percent\n";
  out << "T";
  for (int n : result.ns) out << ",N=" << n;
  out << "\n";
  for (std::size_t t = 0; t < result.t_values.size(); ++t) {
    out << result.t_values[t];
    for (double a : result.accuracy[t]) out << "," << percent(a);
    out << "\n";
  }
  return out.str();
}

}  // namespace infernet
