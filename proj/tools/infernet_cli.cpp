// infernet: command-line front end for target inference from error fixations.

#include <algorithm>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "infernet/baselines.hpp"
#include "infernet/error.hpp"
#include "infernet/evaluation.hpp"
#include "infernet/image.hpp"
#include "infernet/report.hpp"
#include "infernet/runner.hpp"
#include "infernet/synthgen.hpp"

namespace fs = std::filesystem;
using namespace infernet;

namespace {

struct RunFlags {
  std::string weights;
  std::string manifest;
  std::string out = ".";
  std::vector<std::string> models{"infernet"};
  std::string taps = "5,10,17,23,24,30,31";
  std::string layer_combine = "max";
  std::string fix_combine = "sum";
  std::string similarity = "cosine";
  std::string upsample = "half_pixel";
  bool no_clamp = false;
  int patch_side = 28;
  int elim_side = 200;
  int budget = 20;
  double iou = 0.0;
  std::vector<int> t_values{1};
  std::uint64_t seed = 0;
  int threads = 1;
  bool keep_first = false;
  int target_margin = 0;
  int mask_side = 56;
  int chance_reps = 1000;
  bool per_subject = false;
  int common_radius = 32;
  int common_min_subjects = 2;
  bool heatmaps = false;
  int saliency_passes = 1;
};

void add_run_flags(CLI::App* app, RunFlags& f, bool with_models) {
  app->add_option("--weights", f.weights, "NNWB weight bundle, or random:<seed>");
  app->add_option("--manifest", f.manifest, "JSONL dataset manifest")->required()->check(CLI::ExistingFile);
  app->add_option("--out", f.out, "output directory");
  if (with_models) {
    app->add_option("--model", f.models, "infernet|chance|tempmatch|ittikoch|ranweight (comma list)")
        ->delimiter(',');
  }
  app->add_option("--taps", f.taps, "comma-separated 1-based VGG16 layer indices");
  app->add_option("--layer-combine", f.layer_combine, "max|mean");
  app->add_option("--fix-combine", f.fix_combine, "sum|max|mean");
  app->add_option("--similarity", f.similarity, "cosine|dot");
  app->add_option("--upsample", f.upsample, "half_pixel|align_corners");
  app->add_flag("--no-clamp", f.no_clamp, "keep negative similarities");
  app->add_option("--patch-side", f.patch_side, "fixation patch side in pixels");
  app->add_option("--elim-side", f.elim_side, "natural trials: side of the square removed per miss");
  app->add_option("--budget", f.budget, "natural trials: maximum guesses");
  app->add_option("--iou", f.iou, "natural trials: IoU success threshold (0 = point in box)");
  app->add_option("--T", f.t_values, "error-fixation counts (comma list)")->delimiter(',');
  app->add_option("--seed", f.seed, "seed for every random choice");
  app->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
  app->add_flag("--keep-first", f.keep_first, "count the trial-start fixation as an error fixation");
  app->add_option("--target-margin", f.target_margin, "dilation of the target box for on-target tests");
  app->add_option("--mask-side", f.mask_side, "natural trials: masked square side per fixation");
  app->add_option("--chance-reps", f.chance_reps, "Monte Carlo repetitions for natural-trial chance");
  app->add_flag("--per-subject", f.per_subject, "standard errors over subject means");
  app->add_option("--common-radius", f.common_radius, "common fixations: cluster radius");
  app->add_option("--common-min-subjects", f.common_min_subjects, "common fixations: minimum subjects");
  app->add_flag("--heatmaps", f.heatmaps, "write a PGM inference map per unit and model");
  app->add_option("--saliency-passes", f.saliency_passes, "iterations of the saliency normalization");
}

RunConfig to_config(const RunFlags& f) {
  RunConfig cfg;
  cfg.weights = f.weights;
  cfg.manifest = f.manifest;
  cfg.out = f.out;
  cfg.models.clear();
  for (const auto& m : f.models) cfg.models.push_back(parse_model(m));
  cfg.fusion.taps = parse_taps(f.taps);
  cfg.fusion.layer_combine = parse_layer_combine(f.layer_combine);
  cfg.fusion.fixation_combine = parse_fixation_combine(f.fix_combine);
  if (f.similarity == "cosine") {
    cfg.fusion.similarity = SimilarityOp::Cosine;
  } else if (f.similarity == "dot") {
    cfg.fusion.similarity = SimilarityOp::Dot;
  } else {
    throw ArgumentError("similarity must be cosine|dot, got '" + f.similarity + "'");
  }
  if (f.upsample == "half_pixel") {
    cfg.fusion.upsample = Interpolation::HalfPixel;
  } else if (f.upsample == "align_corners") {
    cfg.fusion.upsample = Interpolation::AlignCorners;
  } else {
    throw ArgumentError("upsample must be half_pixel|align_corners, got '" + f.upsample + "'");
  }
  cfg.fusion.clamp_negative = !f.no_clamp;
  cfg.fusion.patch_side = f.patch_side;
  cfg.fusion.validate();
  cfg.guess.elim_side = f.elim_side;
  cfg.guess.budget = f.budget;
  cfg.guess.iou_threshold = f.iou;
  cfg.t_values = f.t_values;
  for (int T : cfg.t_values) {
    if (T < 1) throw ArgumentError("--T values must be >= 1");
  }
  cfg.seed = f.seed;
  cfg.threads = f.threads;
  cfg.filter.skip_first = !f.keep_first;
  cfg.filter.target_margin = f.target_margin;
  cfg.mask_side = f.mask_side;
  cfg.chance_reps = f.chance_reps;
  cfg.per_subject = f.per_subject;
  cfg.common_radius = f.common_radius;
  cfg.common_min_subjects = f.common_min_subjects;
  cfg.heatmaps = f.heatmaps;
  cfg.saliency.normalization_passes = f.saliency_passes;
  return cfg;
}

bool needs_pretrained(const std::vector<ModelSpec>& models) {
  for (const auto& m : models) {
    if (m.kind == ModelKind::InferNet) return true;
  }
  return false;
}

Bundles load_bundles(const RunConfig& cfg, const std::vector<ModelSpec>& models) {
  Bundles b;
  if (needs_pretrained(models)) b.pretrained = resolve_weights(cfg.weights, false);
  for (const auto& m : models) {
    if (m.kind == ModelKind::RanWeight) b.random = ranweight_bundle(cfg.seed);
  }
  return b;
}

std::vector<ModelSpec> eval_models(const RunConfig& cfg) {
  std::vector<ModelSpec> models;
  for (ModelKind k : cfg.models) models.push_back({to_string(k), k, cfg.fusion});
  return models;
}

// Heatmap written as PGM, or PNG when the path ends in .png.
void write_heatmap(const Map2D& map, const fs::path& path, const ConfigEcho& echo) {
  if (path.extension() == ".png") {
    write_map_png(map, path, echo);
    return;
  }
  std::vector<std::string> lines;
  for (const auto& [k, v] : echo) lines.push_back(k + "=" + v);
  write_pgm(map, path, lines);
}

int cmd_eval(const RunFlags& flags) {
  const RunConfig cfg = to_config(flags);
  const Dataset ds = load_manifest(cfg.manifest);
  const auto models = eval_models(cfg);
  const Bundles bundles = load_bundles(cfg, models);
  fs::create_directories(cfg.out);
  const SweepResult sweep = run_sweep(ds, models, bundles, cfg);
  emit_report(sweep.report, ReportFormat::Csv, cfg.out / "report.csv");
  emit_report(sweep.report, ReportFormat::Json, cfg.out / "report.json");
  std::cout << render_report(sweep.report, ReportFormat::Csv);
  return 0;
}

int cmd_ablate(const RunFlags& flags) {
  RunConfig cfg = to_config(flags);
  const Dataset ds = load_manifest(cfg.manifest);
  std::vector<ModelSpec> models{{"chance", ModelKind::Chance, cfg.fusion}};
  for (auto& m : ablation_models(cfg.fusion)) models.push_back(std::move(m));
  cfg.models = {ModelKind::Chance, ModelKind::InferNet};
  const Bundles bundles = load_bundles(cfg, models);
  fs::create_directories(cfg.out);
  SweepResult sweep = run_sweep(ds, models, bundles, cfg);

  std::vector<std::string> names;
  for (const auto& m : models) {
    if (m.kind != ModelKind::Chance) names.push_back(m.name);
  }
  // Common-fixation row: same pipeline, one unit per trial from fixations
  // shared across subjects.
  RunConfig common_cfg = cfg;
  common_cfg.common = true;
  common_cfg.heatmaps = false;
  const std::vector<ModelSpec> common_models{{"chance", ModelKind::Chance, cfg.fusion},
                                             {"Common Fix.", ModelKind::InferNet, cfg.fusion}};
  bool has_multi_subject = false;
  for (const auto& t : ds.trials) has_multi_subject = has_multi_subject || ds.sequences_for(t.id).size() >= 2;
  if (has_multi_subject) {
    const SweepResult common = run_sweep(ds, common_models, bundles, common_cfg);
    for (const auto& r : common.report.rows) {
      if (r.model != "chance") sweep.report.rows.push_back(r);
    }
    for (const auto& p : common.report.pvalues) {
      // keep the common sweep's own chance comparison
      if (p.model_a == "chance" || p.model_b == "chance") sweep.report.pvalues.push_back(p);
    }
    names.push_back("Common Fix.");
  }
  const std::string table = render_ablation_table(sweep.report, names, cfg.t_values);
  write_text(cfg.out / "ablation.csv", table);
  emit_report(sweep.report, ReportFormat::Csv, cfg.out / "ablation_report.csv");
  std::cout << table;
  return 0;
}

int cmd_category(const RunFlags& flags, const std::vector<int>& ns) {
  const RunConfig cfg = to_config(flags);
  const Dataset ds = load_manifest(cfg.manifest);
  const BundlePtr bundle = resolve_weights(cfg.weights, true);
  fs::create_directories(cfg.out);
  const CategoryResult result = run_category(ds, bundle, ns, cfg);
  if (result.units == 0) throw DataError("no trial with an imagenet_class and enough error fixations");
  ConfigEcho echo = cfg.echo();
  echo.emplace_back("bundle_checksum", bundle->checksum_hex());
  const std::string table = render_category_table(result, echo);
  write_text(cfg.out / "category.csv", table);
  std::cout << table;
  return 0;
}

int cmd_infer(const RunFlags& flags, const std::string& trial_id, const std::string& subject, int max_fixations) {
  RunConfig cfg = to_config(flags);
  if (cfg.models.size() != 1) throw ArgumentError("infer takes exactly one --model");
  const Dataset ds = load_manifest(cfg.manifest);
  const Trial& trial = ds.trial(trial_id);
  const FixationSequence* seq = nullptr;
  for (const auto* s : ds.sequences_for(trial.id)) {
    if (subject.empty() || s->subject == subject) {
      seq = s;
      break;
    }
  }
  if (!seq) throw DataError("no fixation sequence for trial " + trial.id + (subject.empty() ? "" : " subject " + subject));
  auto errors = filter_error_fixations(*seq, trial, cfg.filter);
  if (max_fixations > 0 && static_cast<int>(errors.size()) > max_fixations) errors.resize(static_cast<std::size_t>(max_fixations));
  if (errors.empty()) throw DataError("trial " + trial.id + " subject " + seq->subject + " has no error fixations");
  cfg.t_values = {static_cast<int>(errors.size())};

  const auto models = eval_models(cfg);
  const Bundles bundles = load_bundles(cfg, models);
  const auto units = build_units(ds, cfg.t_values[0], cfg);
  const auto unit = std::find_if(units.begin(), units.end(), [&](const EvalUnit& u) {
    return ds.trials[u.trial_index].id == trial.id && u.subject == seq->subject;
  });
  if (unit == units.end()) throw DataError("trial " + trial.id + ": no evaluation unit");

  ConfigEcho echo = cfg.echo();
  const BundlePtr& used = models[0].kind == ModelKind::RanWeight ? bundles.random : bundles.pretrained;
  echo.emplace_back("bundle_checksum", used ? used->checksum_hex() : "none");
  echo.emplace_back("trial", trial.id);
  echo.emplace_back("subject", seq->subject);

  fs::create_directories(cfg.out);
  const std::string stem = trial.id + "_" + seq->subject + "_T" + std::to_string(errors.size());
  GuessTrace trace;
  if (models[0].kind == ModelKind::Chance) {
    trace = chance_trace(unit->effective, cfg.seed, cfg.guess);
  } else {
    const Image search = read_image(ds.resolve(trial.search_image));
    const Map2D map = model_map(models[0], *unit, search, bundles, cfg);
    trace = infer_target(map, unit->effective, cfg.guess);
    write_heatmap(map, cfg.out / (stem + ".pgm"), echo);
    write_heatmap(map, cfg.out / (stem + ".png"), echo);
    write_map(map, cfg.out / (stem + ".map"));
  }

  nlohmann::ordered_json j;
  j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : echo) j["config"][k] = v;
  j["fixations"] = nlohmann::ordered_json::array();
  for (const auto& f : errors) j["fixations"].push_back({f.x, f.y});
  j["guesses"] = nlohmann::ordered_json::array();
  for (const auto& g : trace.guesses) {
    nlohmann::ordered_json gj{{"x", g.x}, {"y", g.y}};
    if (g.candidate_id) gj["candidate"] = *g.candidate_id;
    j["guesses"].push_back(gj);
  }
  j["success_index"] = trace.success_index ? nlohmann::ordered_json(*trace.success_index) : nlohmann::ordered_json();
  write_text(cfg.out / (stem + ".trace.json"), j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Target inference from error fixations"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  RunFlags run_flags;

  auto* eval = app.add_subcommand("eval", "evaluate models over a dataset and T values");
  add_run_flags(eval, run_flags, true);

  auto* ablate = app.add_subcommand("ablate", "layer and fusion ablation table");
  add_run_flags(ablate, run_flags, false);

  std::vector<int> ns{1, 2, 4, 8, 16, 32, 64, 128};
  auto* category = app.add_subcommand("category", "top-N category inference table");
  add_run_flags(category, run_flags, false);
  category->add_option("--top", ns, "N values (comma list)")->delimiter(',');

  std::string trial_id, subject;
  int max_fixations = 0;
  auto* infer = app.add_subcommand("infer", "inference map and guess trace for one trial");
  add_run_flags(infer, run_flags, true);
  infer->add_option("--trial", trial_id, "trial id")->required();
  infer->add_option("--subject", subject, "subject id (default: first sequence)");
  infer->add_option("--max-fixations", max_fixations, "use at most this many error fixations (0 = all)");

  std::string image_path, saliency_out;
  auto* saliency = app.add_subcommand("saliency", "bottom-up saliency heatmap of an image");
  saliency->add_option("--image", image_path, "PNG/PPM/PGM image")->required()->check(CLI::ExistingFile);
  saliency->add_option("--out", saliency_out, "output .pgm or .png")->required();
  int saliency_passes = 1;
  saliency->add_option("--saliency-passes", saliency_passes, "iterations of the saliency normalization");

  GenOptions gen_opts;
  std::string gen_out, gen_task = "array";
  auto* gen = app.add_subcommand("gen", "write a synthetic dataset");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--task", gen_task, "array|natural");
  gen->add_option("--trials", gen_opts.trials, "number of trials");
  gen->add_option("--subjects", gen_opts.subjects, "fixation sequences per trial");
  gen->add_option("--fixations", gen_opts.fixations, "error fixations per sequence");
  gen->add_option("--beta", gen_opts.beta, "similarity bias of the fixation sampler");
  gen->add_option("--seed", gen_opts.seed, "generator seed");
  gen->add_option("--objects", gen_opts.array.n_objects, "array objects");
  gen->add_option("--object-side", gen_opts.array.object_side, "array object side in pixels");
  gen->add_option("--canvas", gen_opts.array.width, "array canvas side in pixels");
  gen->add_option("--ring-radius", gen_opts.array.ring_radius, "array ring radius in pixels");
  gen->add_option("--lattice", gen_opts.array.lattice, "snap array objects to a lattice of this cell size");
  gen->add_option("--scene-objects", gen_opts.scene.n_objects, "natural scene objects");

  std::string map_path, map_out;
  auto* export_map = app.add_subcommand("export-map", "convert a raw map file to PGM or PNG");
  export_map->add_option("--map", map_path, "raw map file written by infer")->required()->check(CLI::ExistingFile);
  export_map->add_option("--out", map_out, "output .pgm or .png")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return 0;
    const auto active = app.get_subcommands();
    std::cerr << "\n" << (active.empty() ? app.help() : active.back()->help());
    return 1;
  }

  try {
    if (eval->parsed()) return cmd_eval(run_flags);
    if (ablate->parsed()) return cmd_ablate(run_flags);
    if (category->parsed()) return cmd_category(run_flags, ns);
    if (infer->parsed()) return cmd_infer(run_flags, trial_id, subject, max_fixations);
    if (saliency->parsed()) {
      SaliencyConfig cfg;
      cfg.normalization_passes = saliency_passes;
      const Map2D map = ittikoch_saliency(read_image(image_path), cfg);
      write_heatmap(map, saliency_out, {{"source", fs::path(image_path).filename().string()},
                                        {"saliency_passes", std::to_string(saliency_passes)}});
      return 0;
    }
    if (gen->parsed()) {
      if (gen_task == "array") {
        gen_opts.task = TaskType::Array;
      } else if (gen_task == "natural") {
        gen_opts.task = TaskType::Natural;
      } else {
        throw ArgumentError("--task must be array|natural, got '" + gen_task + "'");
      }
      gen_opts.array.height = gen_opts.array.width;
      const Dataset ds = write_synthetic_dataset(gen_opts, gen_out);
      std::cout << "wrote " << ds.trials.size() << " trials and " << ds.sequences.size() << " sequences to "
                << (fs::path(gen_out) / "manifest.jsonl").string() << "\n";
      return 0;
    }
    if (export_map->parsed()) {
      write_heatmap(read_map(map_path), map_out, {{"source", fs::path(map_path).filename().string()}});
      return 0;
    }
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
