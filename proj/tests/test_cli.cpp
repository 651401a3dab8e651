#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <json.hpp>

#include "infernet/dataset.hpp"
#include "infernet/synthgen.hpp"
#include "support/scratch.hpp"

using namespace infernet;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Result run_cli(const testing::ScratchDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd =
      std::string("\"") + INFERNET_CLI + "\" " + args + " > \"" + out.string() + "\" 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

}  // namespace

TEST_CASE("gen then eval with the chance model recovers (n + 1) / 2") {
  testing::ScratchDir dir("cli_eval");
  const auto data = (dir / "data").string();
  REQUIRE(run_cli(dir, "gen --out \"" + data + "\" --trials 5 --seed 3").code == 0);
  const auto r = run_cli(dir, "eval --manifest \"" + data + "/manifest.jsonl\" --out \"" + (dir / "out").string() +
                                  "\" --model chance --T 1 --seed 3");
  REQUIRE(r.code == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "out/report.json"));
  REQUIRE(report["rows"].size() == 1);
  CHECK(report["rows"][0]["A_c"].get<double>() == 3.0);
  CHECK(slurp(dir / "out/report.csv").find("# seed=3") != std::string::npos);
}

TEST_CASE("unknown flags exit 1 with usage on stderr") {
  testing::ScratchDir dir("cli_usage");
  const auto r = run_cli(dir, "eval --bogus");
  CHECK(r.code == 1);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(run_cli(dir, "--help").code == 0);
}

TEST_CASE("invalid data exits 2") {
  testing::ScratchDir dir("cli_data");
  const auto data = dir / "data";
  REQUIRE(run_cli(dir, "gen --out \"" + data.string() + "\" --trials 2 --seed 1").code == 0);
  {
    std::ofstream out(data / "manifest.jsonl", std::ios::app);
    out << R"({"kind":"fixations","trial":"t1","subject":"x","points":[[-1,5]]})" << "\n";
  }
  const auto r = run_cli(dir, "eval --manifest \"" + (data / "manifest.jsonl").string() + "\" --out \"" +
                                  (dir / "out").string() + "\" --model chance");
  CHECK(r.code == 2);
  CHECK(r.err.find("manifest.jsonl:") != std::string::npos);
}

TEST_CASE("infer finds a target that repeats the fixated object") {
  testing::ScratchDir dir("cli_infer");
  std::filesystem::create_directories(dir / "img");
  // Three distinct glyphs; the fixated one (left) is repeated as the target
  // (right).
  Image search(200, 120, 128);
  const GlyphStyle twin{Glyph::Triangle, {200, 60, 40}, 0.0};
  draw_glyph(search, twin, 40, 60, 32);
  draw_glyph(search, {Glyph::Disc, {40, 90, 200}, 0.0}, 100, 60, 32);
  draw_glyph(search, twin, 160, 60, 32);
  write_png(search, dir / "img/search.png");
  Image target(40, 40, 128);
  draw_glyph(target, twin, 20, 20, 32);
  write_png(target, dir / "img/target.png");

  Dataset ds;
  Trial t;
  t.id = "twin";
  t.task = TaskType::Natural;
  t.search_image = "img/search.png";
  t.target_image = "img/target.png";
  t.target_box = {140, 40, 40, 40};
  t.width = 200;
  t.height = 120;
  ds.trials.push_back(t);
  ds.sequences.push_back({"s1", "twin", {{100, 100}, {40, 60}, {160, 60}}});
  write_manifest(ds, dir / "manifest.jsonl");

  const auto r = run_cli(dir, "infer --manifest \"" + (dir / "manifest.jsonl").string() + "\" --out \"" +
                                  (dir / "out").string() + "\" --trial twin --model tempmatch --elim-side 40");
  REQUIRE(r.code == 0);
  std::filesystem::path trace;
  for (const auto& e : std::filesystem::directory_iterator(dir / "out")) {
    if (e.path().string().ends_with(".trace.json")) trace = e.path();
  }
  REQUIRE_FALSE(trace.empty());
  const auto j = nlohmann::json::parse(slurp(trace));
  CHECK(j["success_index"].get<int>() == 1);
}
