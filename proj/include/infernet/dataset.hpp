#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "infernet/image.hpp"

namespace infernet {

enum class TaskType { Array, Natural };

const char* to_string(TaskType task);

struct Candidate {
  std::string id;
  Rect box;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// One search problem. Image paths are kept as written in the manifest and
// resolved against Dataset::root.
struct Trial {
  std::string id;
  TaskType task = TaskType::Array;
  std::string target_image;
  std::string search_image;
  Rect target_box;
  std::vector<Candidate> candidates;
  std::optional<int> imagenet_class;
  int width = 0;
  int height = 0;

  // The candidate whose box equals target_box, or nullptr.
  const Candidate* target_candidate() const;

  friend bool operator==(const Trial&, const Trial&) = default;
};

struct Fixation {
  int x = 0;
  int y = 0;
  std::optional<double> duration_ms;

  friend bool operator==(const Fixation&, const Fixation&) = default;
};

struct FixationSequence {
  std::string subject;
  std::string trial;
  std::vector<Fixation> points;

  friend bool operator==(const FixationSequence&, const FixationSequence&) = default;
};

struct Dataset {
  std::filesystem::path root;
  std::vector<Trial> trials;
  std::vector<FixationSequence> sequences;

  const Trial& trial(const std::string& id) const;
  std::vector<const FixationSequence*> sequences_for(const std::string& trial_id) const;
  std::filesystem::path resolve(const std::string& relative) const { return root / relative; }
};

// JSONL manifest, one object per line:
//   {"kind":"trial","id":...,"task":"array"|"natural","target_img":...,
//    "search_img":...,"target_box":[x,y,w,h],
//    "candidates":[{"id":...,"box":[x,y,w,h]}],"imagenet_class":int|null}
//   {"kind":"fixations","trial":...,"subject":...,"points":[[x,y],...]}
// A point may carry a third element, the fixation duration in ms.
// Violations raise DataError with "<file>:<line>:" prefixes.
Dataset load_manifest(const std::filesystem::path& path);
void write_manifest(const Dataset& dataset, const std::filesystem::path& path);

// Checks every trial/fixation invariant against already-known image extents.
void validate_dataset(const Dataset& dataset);

struct ErrorFixationOptions {
  bool skip_first = true;  // drop the trial-start fixation
  int target_margin = 0;   // dilation of the target box for "on target"
};

// Error fixations: everything before the first on-target fixation, minus
// on-target points and (optionally) the very first fixation.
std::vector<Fixation> filter_error_fixations(const FixationSequence& seq, const Trial& trial,
                                             const ErrorFixationOptions& options = {});

// Fixations shared across subjects: greedy Chebyshev clustering in order of
// (fixation position, subject order); clusters backed by fewer than
// `min_subjects` distinct subjects within `radius` of the centroid are
// dropped. The input sequences should already hold error fixations only.
std::vector<Fixation> common_fixations(const std::vector<FixationSequence>& seqs, int radius,
                                       int min_subjects);

}  // namespace infernet
