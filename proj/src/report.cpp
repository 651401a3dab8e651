#include "infernet/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "infernet/error.hpp"
#include "infernet/evaluation.hpp"

namespace infernet {

ReportRow make_row(std::string model, int T, int n, double a_m, double std_error, double a_c) {
  return {std::move(model), T, n, a_m, std_error, a_c, relative_performance(a_m, a_c)};
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string render_report(const EvalReport& report, ReportFormat format) {
  if (format == ReportFormat::Json) {
    nlohmann::ordered_json j;
    j["config"] = nlohmann::ordered_json::array();
    for (const auto& [k, v] : report.config) j["config"].push_back({k, v});
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
      j["rows"].push_back({{"model", r.model},
                           {"T", r.T},
                           {"n", r.n},
                           {"A_m", r.a_m},
                           {"stderr", r.std_error},
                           {"A_c", r.a_c},
                           {"P_r", r.p_r}});
    }
    j["pvalues"] = nlohmann::ordered_json::array();
    for (const auto& p : report.pvalues) {
      j["pvalues"].push_back({{"T", p.T}, {"model_a", p.model_a}, {"model_b", p.model_b}, {"p", p.p}});
    }
    return j.dump(2) + "\n";
  }
  std::ostringstream out;
  for (const auto& [k, v] : report.config) out << "# " << k << "=" << v << "\n";
  out << "model,T,n,A_m,stderr,A_c,P_r\n";
  for (const auto& r : report.rows) {
    out << r.model << "," << r.T << "," << r.n << "," << format_double(r.a_m) << "," << format_double(r.std_error)
        << "," << format_double(r.a_c) << "," << format_double(r.p_r) << "\n";
  }
  out << "\nT,model_a,model_b,p\n";
  for (const auto& p : report.pvalues) {
    out << p.T << "," << p.model_a << "," << p.model_b << "," << format_double(p.p) << "\n";
  }
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path) {
  write_text(path, render_report(report, format));
}

EvalReport load_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report " + path.string());
  EvalReport report;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& kv : j.at("config")) report.config.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
    for (const auto& r : j.at("rows")) {
      report.rows.push_back({r.at("model").get<std::string>(), r.at("T").get<int>(), r.at("n").get<int>(),
                             r.at("A_m").get<double>(), r.at("stderr").get<double>(), r.at("A_c").get<double>(),
                             r.at("P_r").get<double>()});
    }
    for (const auto& p : j.at("pvalues")) {
      report.pvalues.push_back({p.at("T").get<int>(), p.at("model_a").get<std::string>(),
                                p.at("model_b").get<std::string>(), p.at("p").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return report;
}

}  // namespace infernet
