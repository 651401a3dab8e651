#include <doctest.h>

#include <cmath>

#include "infernet/error.hpp"
#include "infernet/evaluation.hpp"
#include "infernet/report.hpp"
#include "support/scratch.hpp"

using namespace infernet;

namespace {

GuessTrace trace_with(std::optional<int> success) {
  GuessTrace t;
  t.success_index = success;
  return t;
}

Trial array_trial(int n) {
  Trial t;
  t.id = "a";
  t.width = 40 * n;
  t.height = 40;
  for (int i = 0; i < n; ++i) t.candidates.push_back({"c" + std::to_string(i), {40 * i, 0, 30, 30}});
  t.target_box = t.candidates[0].box;
  return t;
}

}  // namespace

TEST_CASE("evaluate_guesses") {
  const auto s = evaluate_guesses({trace_with(1), trace_with(2), trace_with(3)}, 20);
  CHECK(s.mean == 2.0);
  CHECK(s.n == 3);
  CHECK(s.std_error == doctest::Approx(1.0 / std::sqrt(3.0)));
  CHECK(evaluate_guesses({trace_with(4), trace_with(4)}, 20).std_error == 0.0);
  CHECK(guess_counts({trace_with(std::nullopt)}, 20) == std::vector<double>{21});
  CHECK_THROWS(evaluate_guesses({}, 20));
}

TEST_CASE("summarize_grouped averages within groups first") {
  const auto s = summarize_grouped({1, 3, 10}, {"a", "a", "b"});
  CHECK(s.mean == 6.0);
  CHECK(s.n == 2);
}

TEST_CASE("monte_carlo_chance") {
  CHECK(monte_carlo_chance({array_trial(5)}, 100, 1, {}) == 3.0);
  CHECK(monte_carlo_chance({array_trial(5), array_trial(3)}, 100, 1, {}) == 2.5);
  Trial whole;
  whole.task = TaskType::Natural;
  whole.width = 30;
  whole.height = 30;
  whole.target_box = {0, 0, 30, 30};
  CHECK(monte_carlo_chance({whole}, 100, 1, {}) == 1.0);
  CHECK_THROWS(monte_carlo_chance({whole}, 10, 1, {}));
}

TEST_CASE("relative_performance") {
  CHECK(relative_performance(3.0, 3.0) == 0.0);
  CHECK(std::round(relative_performance(2.80, 3.0) * 1e4) / 1e4 == 0.0667);
  CHECK(relative_performance(3.5, 3.0) < 0.0);
  CHECK_THROWS(relative_performance(1.0, 0.0));
}

TEST_CASE("incomplete beta against closed forms") {
  // I_x(1, 1) = x; I_x(a, 1) = x^a; I_x(1, b) = 1 - (1 - x)^b
  for (double x : {0.0, 0.1, 0.37, 0.5, 0.9, 1.0}) {
    CHECK(incomplete_beta(1, 1, x) == doctest::Approx(x));
    CHECK(incomplete_beta(3.5, 1, x) == doctest::Approx(std::pow(x, 3.5)));
    CHECK(incomplete_beta(1, 2.5, x) == doctest::Approx(1 - std::pow(1 - x, 2.5)));
  }
}

TEST_CASE("student t tail probabilities match table values") {
  CHECK(student_t_two_tailed(1.96, 1e7) == doctest::Approx(0.05).epsilon(0.001));
  CHECK(std::abs(student_t_two_tailed(1.96, 1e7) - 0.050) <= 0.001);
  CHECK(student_t_two_tailed(2.228, 10) == doctest::Approx(0.05).epsilon(0.002));
  CHECK(student_t_two_tailed(12.706, 1) == doctest::Approx(0.05).epsilon(0.002));
  CHECK(student_t_two_tailed(2.576, 1e9) == doctest::Approx(0.01).epsilon(0.002));
  CHECK(student_t_two_tailed(0.0, 5) == 1.0);
}

TEST_CASE("welch test") {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{2, 4, 4, 5, 7, 9};
  CHECK(welch_ttest(a, a) == 1.0);
  CHECK(welch_ttest(a, b) == welch_ttest(b, a));
  // scipy.stats.ttest_ind(a, b, equal_var=False): t = -1.75292, df = 8.52593, p = 0.115386
  const auto r = welch_test(a, b);
  CHECK(r.t == doctest::Approx(-1.75292).epsilon(1e-4));
  CHECK(r.df == doctest::Approx(8.52593).epsilon(1e-4));
  CHECK(r.p == doctest::Approx(0.115386).epsilon(1e-4));
  CHECK_THROWS(welch_ttest({1}, a));
  CHECK_THROWS(welch_ttest({2, 2}, {3, 3}));
}

TEST_CASE("topn_table") {
  Rng rng(41);
  const int classes = 1000, trials = 2000;
  std::vector<std::vector<std::vector<int>>> rankings(1);
  std::vector<int> truths;
  for (int i = 0; i < trials; ++i) {
    std::vector<int> r(classes);
    for (int c = 0; c < classes; ++c) r[c] = c;
    for (int c = classes - 1; c > 0; --c) std::swap(r[c], r[uniform_below(rng, c + 1)]);
    rankings[0].push_back(std::move(r));
    truths.push_back(static_cast<int>(uniform_below(rng, classes)));
  }
  const std::vector<int> ns{1, 5, 50, 200, 500, 1000};
  const auto table = topn_table(rankings, truths, ns, classes);
  for (std::size_t k = 1; k < ns.size(); ++k) CHECK(table[0][k] >= table[0][k - 1]);
  CHECK(table[0].back() == 1.0);
  for (std::size_t k = 0; k < ns.size(); ++k) {
    const double p = ns[k] / 1000.0;
    const double half = 2.576 * std::sqrt(p * (1 - p) / trials);
    CHECK(std::abs(table[0][k] - p) <= half + 1e-12);
  }
  CHECK_THROWS_AS(topn_table(rankings, std::vector<int>(trials, 1000), ns, classes), DataError);
}

TEST_CASE("report rendering is stable and round-trips") {
  testing::ScratchDir dir("report");
  EvalReport report;
  report.config = {{"seed", "3"}, {"taps", "T1=5:pool1"}};
  report.rows.push_back(make_row("InferNet", 1, 200, 2.805, 0.0712, 3.0));
  report.rows.push_back(make_row("Chance", 1, 200, 1.0 / 3.0, 0.1, 3.0));
  report.pvalues.push_back({1, "InferNet", "Chance", 0.0123456789});

  const std::string csv = render_report(report, ReportFormat::Csv);
  CHECK(csv == render_report(report, ReportFormat::Csv));
  CHECK(csv.find("model,T,n,A_m,stderr,A_c,P_r\n") != std::string::npos);
  CHECK(csv.rfind("# seed=3\n", 0) == 0);

  emit_report(report, ReportFormat::Json, dir / "r.json");
  const EvalReport back = load_report_json(dir / "r.json");
  CHECK(back.config == report.config);
  REQUIRE(back.rows.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(std::abs(back.rows[i].a_m - report.rows[i].a_m) <= 1e-9);
    CHECK(std::abs(back.rows[i].p_r - report.rows[i].p_r) <= 1e-9);
  }
  CHECK(std::abs(back.pvalues[0].p - report.pvalues[0].p) <= 1e-9);

  const std::string header_only = render_report(EvalReport{}, ReportFormat::Csv);
  CHECK(header_only == "model,T,n,A_m,stderr,A_c,P_r\n\nT,model_a,model_b,p\n");
}
