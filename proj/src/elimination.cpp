#include "infernet/elimination.hpp"

#include <algorithm>

#include "infernet/error.hpp"

namespace infernet {

EliminationState::EliminationState(const Trial& trial, const GuessParams& params)
    : trial_(trial), params_(params), array_(trial.task == TaskType::Array) {
  if (params.budget < 1) throw ArgumentError("guess budget must be >= 1");
  if (params.elim_side < 1) throw ArgumentError("elimination side must be >= 1");
  if (array_) {
    if (trial.candidates.empty()) throw DataError("trial " + trial.id + ": no candidates remaining");
    const Candidate* target = trial.target_candidate();
    if (!target) throw DataError("trial " + trial.id + ": target is not among the remaining candidates");
    target_id_ = target->id;
    remaining_ = trial.candidates;
  } else {
    if (trial.width < 1 || trial.height < 1) throw DataError("trial " + trial.id + ": unknown image extents");
    width_ = trial.width;
    height_ = trial.height;
    eliminated_.assign(static_cast<std::size_t>(width_) * height_, 0);
    available_ = static_cast<long>(width_) * height_;
  }
}

bool EliminationState::finished() const {
  if (trace_.success_index) return true;
  if (array_) return remaining_.empty();
  return static_cast<int>(trace_.guesses.size()) >= params_.budget || available_ == 0;
}

bool EliminationState::guess_candidate(std::size_t index, int x, int y) {
  if (!array_ || index >= remaining_.size() || finished()) throw ArgumentError("invalid candidate guess");
  const Candidate picked = remaining_[index];
  trace_.guesses.push_back({x, y, picked.id});
  if (picked.id == target_id_) {
    trace_.success_index = static_cast<int>(trace_.guesses.size());
    return true;
  }
  remaining_.erase(remaining_.begin() + static_cast<std::ptrdiff_t>(index));
  return false;
}

bool EliminationState::hit(int x, int y) const {
  if (params_.iou_threshold <= 0.0) return trial_.target_box.contains(x, y);
  const int half = params_.elim_side / 2;
  const Rect square{x - half, y - half, params_.elim_side, params_.elim_side};
  return iou(square, trial_.target_box) >= params_.iou_threshold;
}

void EliminationState::eliminate_square(int x, int y) {
  const int half = params_.elim_side / 2;
  const int x0 = std::max(0, x - half), x1 = std::min(width_, x - half + params_.elim_side);
  const int y0 = std::max(0, y - half), y1 = std::min(height_, y - half + params_.elim_side);
  for (int yy = y0; yy < y1; ++yy) {
    for (int xx = x0; xx < x1; ++xx) {
      auto& cell = eliminated_[static_cast<std::size_t>(yy) * width_ + xx];
      if (!cell) {
        cell = 1;
        --available_;
      }
    }
  }
}

bool EliminationState::guess_pixel(int x, int y) {
  if (array_ || finished() || x < 0 || y < 0 || x >= width_ || y >= height_ || !available(x, y)) {
    throw ArgumentError("invalid pixel guess");
  }
  trace_.guesses.push_back({x, y, std::nullopt});
  if (hit(x, y)) {
    trace_.success_index = static_cast<int>(trace_.guesses.size());
    return true;
  }
  eliminate_square(x, y);
  return false;
}

}  // namespace infernet
