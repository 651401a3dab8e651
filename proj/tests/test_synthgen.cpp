#include <doctest.h>

#include <algorithm>
#include <map>

#include "infernet/dataset.hpp"
#include "infernet/error.hpp"
#include "infernet/synthgen.hpp"
#include "support/scratch.hpp"

using namespace infernet;

TEST_CASE("array trials are deterministic and valid") {
  ArraySpec spec;
  spec.seed = 17;
  const auto a = gen_array_trial(spec, "t1");
  const auto b = gen_array_trial(spec, "t1");
  CHECK(a.search == b.search);
  CHECK(a.target == b.target);
  CHECK(a.trial == b.trial);
  REQUIRE(a.trial.candidates.size() == 6);
  CHECK(std::count_if(a.trial.candidates.begin(), a.trial.candidates.end(),
                      [&](const Candidate& c) { return c.box == a.trial.target_box; }) == 1);
  Dataset ds;
  ds.trials.push_back(a.trial);
  CHECK_NOTHROW(validate_dataset(ds));

  spec.seed = 18;
  CHECK(gen_array_trial(spec, "t1").search != a.search);

  ArraySpec cramped;
  cramped.width = cramped.height = 50;
  CHECK_THROWS(gen_array_trial(cramped, "x"));
}

TEST_CASE("lattice placement keeps objects on cell centres") {
  ArraySpec spec;
  spec.width = spec.height = 288;
  spec.lattice = 32;
  spec.ring_radius = 101.2;
  spec.seed = 3;
  const auto g = gen_array_trial(spec, "l");
  for (const auto& c : g.trial.candidates) {
    CHECK(static_cast<int>(c.box.center_x()) % 32 == 16);
    CHECK(static_cast<int>(c.box.center_y()) % 32 == 16);
  }
}

TEST_CASE("scene trials are natural and valid") {
  SceneSpec spec;
  spec.seed = 4;
  const auto g = gen_scene_trial(spec, "s");
  CHECK(g.trial.task == TaskType::Natural);
  CHECK(g.trial.candidates.empty());
  CHECK(g.objects.size() == 16);
  Dataset ds;
  ds.trials.push_back(g.trial);
  CHECK_NOTHROW(validate_dataset(ds));
}

TEST_CASE("pixel_ncc of an object against its own pixels is one") {
  ArraySpec spec;
  spec.seed = 9;
  const auto g = gen_array_trial(spec, "n");
  const Rect box = g.objects[2].box;
  Image crop(box.w, box.h);
  for (int y = 0; y < box.h; ++y)
    for (int x = 0; x < box.w; ++x) std::copy_n(g.search.at(box.x + x, box.y + y), 3, crop.at(x, y));
  CHECK(pixel_ncc(g.search, box, crop) == doctest::Approx(1.0));
}

TEST_CASE("sample_fixations") {
  std::vector<Candidate> objects;
  for (int i = 0; i < 6; ++i) objects.push_back({"o" + std::to_string(i), {40 * i, 0, 30, 30}});
  const Rect target = objects[0].box;
  const std::vector<double> sim{1.0, 0.1, 0.9, 0.3, 0.2, 0.4};

  const auto s = sample_fixations(objects, target, sim, 4.0, 3, 5, 240, 40);
  CHECK(s.points.size() == 5);
  CHECK(s.points.front() == Fixation{120, 20});
  CHECK(target.contains(s.points.back().x, s.points.back().y));
  CHECK(sample_fixations(objects, target, sim, 4.0, 3, 5, 240, 40) == s);

  SUBCASE("infinite bias picks the most similar distractor first") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto f = sample_fixations(objects, target, sim, 1e6, 2, seed, 240, 40);
      CHECK(objects[2].box.contains(f.points[1].x, f.points[1].y));
      CHECK(objects[5].box.contains(f.points[2].x, f.points[2].y));
    }
  }
  SUBCASE("zero bias is uniform") {
    std::map<int, int> hits;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
      const auto f = sample_fixations(objects, target, sim, 0.0, 1, static_cast<std::uint64_t>(i), 240, 40);
      hits[f.points[1].x / 40]++;
    }
    CHECK(hits.count(0) == 0);
    double chi2 = 0.0;
    const double expected = draws / 5.0;
    for (int k = 1; k < 6; ++k) chi2 += (hits[k] - expected) * (hits[k] - expected) / expected;
    CHECK(chi2 < 18.47);  // chi-square, 4 dof, p = 0.001
  }
  CHECK_THROWS(sample_fixations(objects, target, sim, 4.0, 6, 1, 240, 40));
}

TEST_CASE("write_synthetic_dataset is reproducible") {
  testing::ScratchDir a("gen_a"), b("gen_b");
  GenOptions opt;
  opt.trials = 3;
  opt.seed = 8;
  const auto da = write_synthetic_dataset(opt, a.path());
  const auto db = write_synthetic_dataset(opt, b.path());
  CHECK(da.trials == db.trials);
  CHECK(da.sequences == db.sequences);
  CHECK(read_image(a / "images/t1_search.png") == read_image(b / "images/t1_search.png"));
}
