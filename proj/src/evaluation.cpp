#include "infernet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "infernet/baselines.hpp"
#include "infernet/error.hpp"
#include "infernet/random.hpp"

namespace infernet {
namespace {

// Continued fraction for I_x(a, b), modified Lentz evaluation.
double beta_fraction(double a, double b, double x) {
  constexpr int max_iter = 500;
  constexpr double eps = 1e-15;
  constexpr double tiny = 1e-300;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < eps) break;
  }
  return h;
}

double mean_of(const std::vector<double>& v) {
  double total = 0.0;
  for (double x : v) total += x;
  return total / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

std::vector<double> guess_counts(const std::vector<GuessTrace>& traces, int budget) {
  std::vector<double> out;
  out.reserve(traces.size());
  for (const auto& t : traces) out.push_back(t.success_index ? *t.success_index : budget + 1.0);
  return out;
}

GuessStats summarize(const std::vector<double>& samples) {
  if (samples.empty()) throw ArgumentError("cannot summarize an empty sample");
  GuessStats s;
  s.n = static_cast<int>(samples.size());
  s.mean = mean_of(samples);
  if (s.n > 1) s.std_error = std::sqrt(sample_variance(samples, s.mean) / s.n);
  return s;
}

GuessStats summarize_grouped(const std::vector<double>& samples, const std::vector<std::string>& groups) {
  if (samples.size() != groups.size()) throw ArgumentError("samples and groups differ in length");
  std::map<std::string, std::pair<double, int>> by_group;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto& [total, count] = by_group[groups[i]];
    total += samples[i];
    ++count;
  }
  std::vector<double> means;
  for (const auto& [name, acc] : by_group) means.push_back(acc.first / acc.second);
  return summarize(means);
}

GuessStats evaluate_guesses(const std::vector<GuessTrace>& traces, int budget) {
  if (traces.empty()) throw ArgumentError("evaluate_guesses needs at least one trace");
  return summarize(guess_counts(traces, budget));
}

double monte_carlo_chance(const std::vector<Trial>& trials, int reps, std::uint64_t seed, const GuessParams& params) {
  if (trials.empty()) throw ArgumentError("monte_carlo_chance needs at least one trial");
  if (reps < 100) throw ArgumentError("monte_carlo_chance needs reps >= 100");
  double total = 0.0;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const Trial& trial = trials[i];
    if (trial.task == TaskType::Array) {
      total += chance_expected_guesses(static_cast<int>(trial.candidates.size()));
      continue;
    }
    std::vector<GuessTrace> traces;
    traces.reserve(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) traces.push_back(chance_trace(trial, mix_seed(seed, {i, static_cast<std::uint64_t>(r)}), params));
    total += evaluate_guesses(traces, params.budget).mean;
  }
  return total / static_cast<double>(trials.size());
}

double relative_performance(double a_m, double a_c) {
  if (!(a_c > 0.0)) throw ArgumentError("relative performance needs a positive chance baseline");
  return (a_c - a_m) / a_c;
}

double incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw ArgumentError("incomplete beta needs positive shape parameters");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
  return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_tailed(double t, double df) {
  if (!(df > 0.0)) throw ArgumentError("degrees of freedom must be positive");
  if (std::isinf(df)) return std::erfc(std::fabs(t) / std::sqrt(2.0));
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

WelchResult welch_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw ArgumentError("Welch test needs at least two samples per group");
  const double ma = mean_of(a), mb = mean_of(b);
  const double va = sample_variance(a, ma) / static_cast<double>(a.size());
  const double vb = sample_variance(b, mb) / static_cast<double>(b.size());
  const double se2 = va + vb;
  if (!(se2 > 0.0)) throw ArgumentError("Welch test needs nonzero variance in at least one group");
  WelchResult r;
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 /
         (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  r.p = std::clamp(student_t_two_tailed(r.t, r.df), 0.0, 1.0);
  return r;
}

std::vector<std::vector<double>> topn_table(const std::vector<std::vector<std::vector<int>>>& rankings,
                                            const std::vector<int>& truths, const std::vector<int>& ns,
                                            int label_count) {
  for (int truth : truths) {
    if (truth < 0 || truth >= label_count) {
      throw DataError("class " + std::to_string(truth) + " outside label space of " + std::to_string(label_count));
    }
  }
  std::vector<std::vector<double>> table;
  for (const auto& per_trial : rankings) {
    if (per_trial.size() != truths.size()) throw ArgumentError("one ranking per trial is required");
    std::vector<double> row;
    for (int n : ns) {
      if (n < 1) throw ArgumentError("top-N needs N >= 1");
      int hits = 0;
      for (std::size_t i = 0; i < per_trial.size(); ++i) {
        const auto& ranking = per_trial[i];
        const auto end = ranking.begin() + std::min<std::size_t>(static_cast<std::size_t>(n), ranking.size());
        if (std::find(ranking.begin(), end, truths[i]) != end) ++hits;
      }
      row.push_back(truths.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(truths.size()));
    }
    table.push_back(std::move(row));
  }
  return table;
}

}  // namespace infernet
