#pragma once

#include <cstdint>
#include <vector>

#include "infernet/dataset.hpp"
#include "infernet/engine.hpp"

namespace infernet {

// Guess bookkeeping shared by every model, so model and chance traces differ
// only in how the next guess is chosen.
class EliminationState {
 public:
  EliminationState(const Trial& trial, const GuessParams& params);

  bool is_array() const { return array_; }
  bool finished() const;

  // Array trials: candidates still in play, in trial order.
  const std::vector<Candidate>& remaining() const { return remaining_; }
  // Guess remaining()[index] at pixel (x, y); removes it on a miss.
  bool guess_candidate(std::size_t index, int x, int y);

  // Natural trials.
  int width() const { return width_; }
  int height() const { return height_; }
  bool available(int x, int y) const { return !eliminated_[static_cast<std::size_t>(y) * width_ + x]; }
  long available_count() const { return available_; }
  // Guess pixel (x, y); on a miss removes the elim_side square centred there.
  bool guess_pixel(int x, int y);

  const GuessTrace& trace() const { return trace_; }

 private:
  bool hit(int x, int y) const;
  void eliminate_square(int x, int y);

  const Trial& trial_;
  GuessParams params_;
  bool array_;
  std::string target_id_;
  std::vector<Candidate> remaining_;
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> eliminated_;
  long available_ = 0;
  GuessTrace trace_;
};

}  // namespace infernet
