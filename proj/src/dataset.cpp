#include "infernet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "infernet/error.hpp"

namespace infernet {
namespace {

using nlohmann::json;

Rect parse_box(const json& j) {
  if (!j.is_array() || j.size() != 4) throw DataError("box must be [x, y, w, h]");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

json box_json(const Rect& r) { return json::array({r.x, r.y, r.w, r.h}); }

bool inside(const Rect& r, int width, int height) {
  return !r.empty() && r.x >= 0 && r.y >= 0 && r.x + r.w <= width && r.y + r.h <= height;
}

std::string box_string(const Rect& r) {
  return "[" + std::to_string(r.x) + "," + std::to_string(r.y) + "," + std::to_string(r.w) + "," +
         std::to_string(r.h) + "]";
}

void check_trial(const Trial& t) {
  if (t.id.empty()) throw DataError("trial id is empty");
  if (!inside(t.target_box, t.width, t.height)) {
    throw DataError("trial " + t.id + ": target box " + box_string(t.target_box) + " outside image " +
                    std::to_string(t.width) + "x" + std::to_string(t.height));
  }
  std::set<std::string> ids;
  for (const auto& c : t.candidates) {
    if (!ids.insert(c.id).second) throw DataError("trial " + t.id + ": duplicate candidate id '" + c.id + "'");
    if (!inside(c.box, t.width, t.height)) {
      throw DataError("trial " + t.id + ": candidate " + c.id + " box " + box_string(c.box) + " outside image");
    }
  }
  if (t.task == TaskType::Array && !t.target_candidate()) {
    throw DataError("trial " + t.id + ": array trial target box matches no candidate");
  }
}

void check_sequence(const FixationSequence& s, const Trial& t) {
  for (const auto& f : s.points) {
    if (f.x < 0 || f.y < 0 || f.x >= t.width || f.y >= t.height) {
      throw DataError("fixation (" + std::to_string(f.x) + "," + std::to_string(f.y) + ") of subject " + s.subject +
                      " outside image " + std::to_string(t.width) + "x" + std::to_string(t.height) + " of trial " +
                      t.id);
    }
  }
}

Trial parse_trial(const json& j) {
  Trial t;
  t.id = j.at("id").get<std::string>();
  const auto task = j.at("task").get<std::string>();
  if (task == "array") {
    t.task = TaskType::Array;
  } else if (task == "natural") {
    t.task = TaskType::Natural;
  } else {
    throw DataError("unknown task '" + task + "'");
  }
  t.target_image = j.at("target_img").get<std::string>();
  t.search_image = j.at("search_img").get<std::string>();
  t.target_box = parse_box(j.at("target_box"));
  if (j.contains("candidates")) {
    for (const auto& c : j.at("candidates")) t.candidates.push_back({c.at("id").get<std::string>(), parse_box(c.at("box"))});
  }
  if (j.contains("imagenet_class") && !j.at("imagenet_class").is_null()) {
    t.imagenet_class = j.at("imagenet_class").get<int>();
  }
  return t;
}

FixationSequence parse_sequence(const json& j) {
  FixationSequence s;
  s.trial = j.at("trial").get<std::string>();
  s.subject = j.at("subject").get<std::string>();
  for (const auto& p : j.at("points")) {
    if (!p.is_array() || p.size() < 2 || p.size() > 3) throw DataError("fixation point must be [x, y] or [x, y, ms]");
    Fixation f{p[0].get<int>(), p[1].get<int>(), std::nullopt};
    if (p.size() == 3) f.duration_ms = p[2].get<double>();
    s.points.push_back(f);
  }
  return s;
}

}  // namespace

const char* to_string(TaskType task) { return task == TaskType::Array ? "array" : "natural"; }

const Candidate* Trial::target_candidate() const {
  for (const auto& c : candidates) {
    if (c.box == target_box) return &c;
  }
  return nullptr;
}

const Trial& Dataset::trial(const std::string& id) const {
  for (const auto& t : trials) {
    if (t.id == id) return t;
  }
  throw DataError("unknown trial '" + id + "'");
}

std::vector<const FixationSequence*> Dataset::sequences_for(const std::string& trial_id) const {
  std::vector<const FixationSequence*> out;
  for (const auto& s : sequences) {
    if (s.trial == trial_id) out.push_back(&s);
  }
  return out;
}

Dataset load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  Dataset ds;
  ds.root = path.parent_path();
  std::map<std::string, std::size_t> trial_index;
  std::vector<std::pair<std::size_t, FixationSequence>> pending;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "trial") {
        Trial t = parse_trial(j);
        const auto image = ds.resolve(t.search_image);
        if (!std::filesystem::exists(image)) throw IoError("missing search image " + image.string());
        if (!std::filesystem::exists(ds.resolve(t.target_image))) {
          throw IoError("missing target image " + ds.resolve(t.target_image).string());
        }
        std::tie(t.width, t.height) = read_image_extents(image);
        check_trial(t);
        if (!trial_index.emplace(t.id, ds.trials.size()).second) throw DataError("duplicate trial id '" + t.id + "'");
        ds.trials.push_back(std::move(t));
      } else if (kind == "fixations") {
        pending.emplace_back(line_no, parse_sequence(j));
      } else {
        throw DataError("unknown line kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw DataError(where + e.what());
    } catch (const IoError& e) {
      throw IoError(where + e.what());
    } catch (const Error& e) {
      throw DataError(where + e.what());
    }
  }
  for (auto& [no, seq] : pending) {
    const std::string where = path.string() + ":" + std::to_string(no) + ": ";
    const auto it = trial_index.find(seq.trial);
    if (it == trial_index.end()) throw DataError(where + "fixations reference unknown trial '" + seq.trial + "'");
    try {
      check_sequence(seq, ds.trials[it->second]);
    } catch (const Error& e) {
      throw DataError(where + e.what());
    }
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

void validate_dataset(const Dataset& dataset) {
  std::set<std::string> ids;
  for (const auto& t : dataset.trials) {
    check_trial(t);
    if (!ids.insert(t.id).second) throw DataError("duplicate trial id '" + t.id + "'");
  }
  for (const auto& s : dataset.sequences) check_sequence(s, dataset.trial(s.trial));
}

void write_manifest(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  for (const auto& t : dataset.trials) {
    json j;
    j["kind"] = "trial";
    j["id"] = t.id;
    j["task"] = to_string(t.task);
    j["target_img"] = t.target_image;
    j["search_img"] = t.search_image;
    j["target_box"] = box_json(t.target_box);
    j["candidates"] = json::array();
    for (const auto& c : t.candidates) j["candidates"].push_back({{"id", c.id}, {"box", box_json(c.box)}});
    j["imagenet_class"] = t.imagenet_class ? json(*t.imagenet_class) : json(nullptr);
    out << j.dump() << '\n';
  }
  for (const auto& s : dataset.sequences) {
    json j;
    j["kind"] = "fixations";
    j["trial"] = s.trial;
    j["subject"] = s.subject;
    j["points"] = json::array();
    for (const auto& f : s.points) {
      json p = json::array({f.x, f.y});
      if (f.duration_ms) p.push_back(*f.duration_ms);
      j["points"].push_back(p);
    }
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<Fixation> filter_error_fixations(const FixationSequence& seq, const Trial& trial,
                                             const ErrorFixationOptions& options) {
  const int m = options.target_margin;
  const Rect target{trial.target_box.x - m, trial.target_box.y - m, trial.target_box.w + 2 * m,
                    trial.target_box.h + 2 * m};
  std::vector<Fixation> out;
  for (std::size_t i = options.skip_first ? 1 : 0; i < seq.points.size(); ++i) {
    const auto& f = seq.points[i];
    if (target.contains(f.x, f.y)) break;
    out.push_back(f);
  }
  return out;
}

std::vector<Fixation> common_fixations(const std::vector<FixationSequence>& seqs, int radius, int min_subjects) {
  if (seqs.size() < 2) throw ArgumentError("common fixations need at least two sequences");
  if (radius < 0 || min_subjects < 1) throw ArgumentError("radius must be >= 0 and min_subjects >= 1");

  struct Cluster {
    double sum_x = 0.0, sum_y = 0.0;
    int count = 0;
    double cx() const { return sum_x / count; }
    double cy() const { return sum_y / count; }
  };
  std::vector<Cluster> clusters;
  std::size_t longest = 0;
  for (const auto& s : seqs) longest = std::max(longest, s.points.size());
  for (std::size_t i = 0; i < longest; ++i) {
    for (const auto& s : seqs) {
      if (i >= s.points.size()) continue;
      const auto& f = s.points[i];
      auto it = std::find_if(clusters.begin(), clusters.end(), [&](const Cluster& c) {
        return std::max(std::fabs(f.x - c.cx()), std::fabs(f.y - c.cy())) <= radius;
      });
      if (it == clusters.end()) it = clusters.insert(clusters.end(), Cluster{});
      it->sum_x += f.x;
      it->sum_y += f.y;
      ++it->count;
    }
  }

  std::vector<Fixation> out;
  for (const auto& c : clusters) {
    const Fixation centroid{static_cast<int>(std::lround(c.cx())), static_cast<int>(std::lround(c.cy())), std::nullopt};
    std::set<std::string> support;
    for (const auto& s : seqs) {
      for (const auto& f : s.points) {
        if (std::max(std::abs(f.x - centroid.x), std::abs(f.y - centroid.y)) <= radius) {
          support.insert(s.subject);
          break;
        }
      }
    }
    if (static_cast<int>(support.size()) >= min_subjects) out.push_back(centroid);
  }
  return out;
}

}  // namespace infernet
