#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "infernet/dataset.hpp"
#include "infernet/engine.hpp"

namespace infernet {

struct GuessStats {
  double mean = 0.0;
  double std_error = 0.0;  // standard error of the mean
  int n = 0;
};

// Guesses needed per trace; traces without a success count as budget + 1.
std::vector<double> guess_counts(const std::vector<GuessTrace>& traces, int budget);

GuessStats summarize(const std::vector<double>& samples);
// Samples are first averaged within each group (e.g. subject), then across
// groups.
GuessStats summarize_grouped(const std::vector<double>& samples, const std::vector<std::string>& groups);

GuessStats evaluate_guesses(const std::vector<GuessTrace>& traces, int budget);

// Mean chance guesses over `trials` (each already stripped of fixated
// candidates). Array trials use (n + 1) / 2; natural trials average `reps`
// seeded chance traces.
double monte_carlo_chance(const std::vector<Trial>& trials, int reps, std::uint64_t seed,
                          const GuessParams& params);

// (a_c - a_m) / a_c.
double relative_performance(double a_m, double a_c);

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);
// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_tailed(double t, double df);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

WelchResult welch_test(const std::vector<double>& a, const std::vector<double>& b);
inline double welch_ttest(const std::vector<double>& a, const std::vector<double>& b) { return welch_test(a, b).p; }

// rankings[t][trial] is a ranked class list; cell [t][k] is the fraction of
// trials whose truth sits within the first ns[k] entries.
std::vector<std::vector<double>> topn_table(const std::vector<std::vector<std::vector<int>>>& rankings,
                                            const std::vector<int>& truths, const std::vector<int>& ns,
                                            int label_count);

}  // namespace infernet
