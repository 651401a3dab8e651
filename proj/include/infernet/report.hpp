#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace infernet {

struct ReportRow {
  std::string model;
  int T = 0;
  int n = 0;
  double a_m = 0.0;
  double std_error = 0.0;
  double a_c = 0.0;
  double p_r = 0.0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct PairwiseP {
  int T = 0;
  std::string model_a;
  std::string model_b;
  double p = 1.0;

  friend bool operator==(const PairwiseP&, const PairwiseP&) = default;
};

// Ordered key/value pairs describing the run that produced a report.
using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

struct EvalReport {
  ConfigEcho config;
  std::vector<ReportRow> rows;
  std::vector<PairwiseP> pvalues;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// p_r is derived from a_m and a_c.
ReportRow make_row(std::string model, int T, int n, double a_m, double std_error, double a_c);

enum class ReportFormat { Csv, Json };

// CSV: "# key=value" echo lines, the model,T,n,A_m,stderr,A_c,P_r table, then
// a blank line and the T,model_a,model_b,p table. JSON mirrors the fields.
std::string render_report(const EvalReport& report, ReportFormat format);
void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path);
EvalReport load_report_json(const std::filesystem::path& path);

// Shortest text that reads back to the same double.
std::string format_double(double v);

// Writes `text` to `path`, throwing IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace infernet
