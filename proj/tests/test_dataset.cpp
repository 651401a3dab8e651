#include <doctest.h>

#include <fstream>

#include "infernet/dataset.hpp"
#include "infernet/error.hpp"
#include "infernet/synthgen.hpp"
#include "support/scratch.hpp"

using namespace infernet;

namespace {

// Two 64x48 trials, one array and one natural, with matching images.
std::filesystem::path write_fixture(const testing::ScratchDir& dir, const std::string& extra_line = "") {
  std::filesystem::create_directories(dir / "img");
  write_png(Image(64, 48, 90), dir / "img/s.png");
  write_png(Image(16, 16, 30), dir / "img/t.png");
  const auto path = dir / "manifest.jsonl";
  std::ofstream out(path);
  out << R"({"kind":"trial","id":"a1","task":"array","target_img":"img/t.png","search_img":"img/s.png",)"
      << R"("target_box":[0,0,16,16],"candidates":[{"id":"x","box":[0,0,16,16]},{"id":"y","box":[30,10,16,16]}],)"
      << R"("imagenet_class":null})" << "\n";
  out << R"({"kind":"trial","id":"n1","task":"natural","target_img":"img/t.png","search_img":"img/s.png",)"
      << R"("target_box":[40,20,10,10],"candidates":[],"imagenet_class":7})" << "\n";
  out << R"({"kind":"fixations","trial":"a1","subject":"s1","points":[[32,24],[35,15,210.5],[5,5]]})" << "\n";
  if (!extra_line.empty()) out << extra_line << "\n";
  return path;
}

Trial box_trial() {
  Trial t;
  t.id = "t";
  t.task = TaskType::Natural;
  t.width = 100;
  t.height = 100;
  t.target_box = {50, 50, 10, 10};
  return t;
}

FixationSequence seq(std::vector<Fixation> points, std::string subject = "s") {
  return {std::move(subject), "t", std::move(points)};
}

}  // namespace

TEST_CASE("load_manifest reads trials and fixations") {
  testing::ScratchDir dir("manifest");
  const Dataset ds = load_manifest(write_fixture(dir));
  REQUIRE(ds.trials.size() == 2);
  CHECK(ds.trials[0].task == TaskType::Array);
  CHECK(ds.trials[0].width == 64);
  CHECK(ds.trials[0].height == 48);
  CHECK(ds.trials[0].target_candidate()->id == "x");
  CHECK_FALSE(ds.trials[0].imagenet_class);
  CHECK(ds.trials[1].imagenet_class == 7);
  REQUIRE(ds.sequences.size() == 1);
  CHECK(ds.sequences[0].points[1].duration_ms == 210.5);
  CHECK(ds.sequences_for("a1").size() == 1);
  CHECK(ds.sequences_for("n1").empty());
  CHECK_THROWS_AS(ds.trial("zz"), DataError);
}

TEST_CASE("load_manifest reports the offending line") {
  testing::ScratchDir dir("manifest_bad");
  SUBCASE("fixation outside the image") {
    const auto path = write_fixture(dir, R"({"kind":"fixations","trial":"a1","subject":"s2","points":[[-1,5]]})");
    try {
      load_manifest(path);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("manifest.jsonl:4:") != std::string::npos);
      CHECK(msg.find("(-1,5)") != std::string::npos);
    }
  }
  SUBCASE("malformed json") {
    try {
      load_manifest(write_fixture(dir, "{not json"));
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find(":4:") != std::string::npos);
    }
  }
  SUBCASE("box outside the image") {
    const auto path = write_fixture(
        dir, R"({"kind":"trial","id":"b","task":"natural","target_img":"img/t.png","search_img":"img/s.png",)"
             R"("target_box":[60,40,10,10],"candidates":[],"imagenet_class":null})");
    CHECK_THROWS_AS(load_manifest(path), DataError);
  }
  SUBCASE("missing image") {
    const auto path = write_fixture(
        dir, R"({"kind":"trial","id":"b","task":"natural","target_img":"img/t.png","search_img":"img/none.png",)"
             R"("target_box":[0,0,10,10],"candidates":[],"imagenet_class":null})");
    CHECK_THROWS_AS(load_manifest(path), IoError);
  }
  SUBCASE("unknown trial") {
    const auto path = write_fixture(dir, R"({"kind":"fixations","trial":"q","subject":"s","points":[[1,1]]})");
    CHECK_THROWS_AS(load_manifest(path), DataError);
  }
}

TEST_CASE("manifest write then load is the identity") {
  testing::ScratchDir dir("manifest_rt");
  GenOptions opt;
  opt.trials = 4;
  opt.subjects = 2;
  opt.fixations = 2;
  opt.seed = 5;
  const Dataset written = write_synthetic_dataset(opt, dir.path());
  const Dataset loaded = load_manifest(dir / "manifest.jsonl");
  CHECK(loaded.trials == written.trials);
  CHECK(loaded.sequences == written.sequences);
  write_manifest(loaded, dir / "again.jsonl");
  const Dataset again = load_manifest(dir / "again.jsonl");
  CHECK(again.trials == loaded.trials);
  CHECK(again.sequences == loaded.sequences);
}

TEST_CASE("filter_error_fixations") {
  const Trial t = box_trial();
  const Fixation d1{10, 10}, d2{20, 80}, on{55, 55};
  ErrorFixationOptions keep;
  keep.skip_first = false;
  CHECK(filter_error_fixations(seq({d1, d2, on}), t, keep) == std::vector<Fixation>{d1, d2});
  CHECK(filter_error_fixations(seq({on}), t, keep).empty());
  CHECK(filter_error_fixations(seq({d1, on, d2}), t, keep) == std::vector<Fixation>{d1});
  // The default drops the trial-start fixation.
  CHECK(filter_error_fixations(seq({d1, d2, on}), t) == std::vector<Fixation>{d2});

  ErrorFixationOptions margin = keep;
  margin.target_margin = 5;
  CHECK(filter_error_fixations(seq({d1, {47, 52}, d2}), t, margin) == std::vector<Fixation>{d1});
}

TEST_CASE("common_fixations") {
  SUBCASE("shared object") {
    const auto c = common_fixations({seq({{30, 30}}, "a"), seq({{34, 28}}, "b")}, 10, 2);
    REQUIRE(c.size() == 1);
    CHECK(c[0].x == 32);
    CHECK(c[0].y == 29);
  }
  SUBCASE("disjoint scanpaths") {
    CHECK(common_fixations({seq({{10, 10}}, "a"), seq({{80, 80}}, "b")}, 10, 2).empty());
  }
  SUBCASE("one shared and one unique each") {
    const auto c = common_fixations(
        {seq({{50, 50}, {5, 90}}, "a"), seq({{52, 48}, {90, 5}}, "b"), seq({{48, 52}, {90, 90}}, "c")}, 8, 2);
    REQUIRE(c.size() == 1);
    CHECK(c[0].x == 50);
    CHECK(c[0].y == 50);
  }
  CHECK_THROWS(common_fixations({seq({{1, 1}})}, 5, 2));
}
