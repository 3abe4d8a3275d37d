#include "tomo/layout_config.hpp"
#include "tomo/pipeline.hpp"
#include "tomo/scenario.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace tomo;

TEST_CASE("parse_categories") {
  const auto c = parse_categories("0-3, 5-8,10-13");
  REQUIRE(c.size() == 3);
  CHECK(c[0].id == 1);
  CHECK(c[1].first_column == 5);
  CHECK(c[2].last_column == 13);
  CHECK_THROWS(parse_categories("3-1"));
  CHECK_THROWS(parse_categories("0-3, x"));
  CHECK_THROWS(parse_categories(""));
}

TEST_CASE("config parsing") {
  std::istringstream in(R"([layout]
k_x = 9
k_y = 3
spacing_m = 0.1
origin = 0 1.2 0
antenna_positions = 0.3 1.2 3.0 | 0.5 1.2 3.0 | 0.7 1.2 3.0
z_planes = 0.4
p_x = 3
p_y = 2
categories = 0-2, 6-8

[monitor]
power_threshold = 12.5

[dnn]
ensemble = 5
max_rss = 25

[window]
k_cw = 4
merge = median

[tracking]
eta2 = 7
)");
  const PipelineConfig c = parse_config(in);
  CHECK(c.layout.grid.size() == 27);
  CHECK(c.layout.antennas.size() == 3);
  CHECK(c.layout.antennas.position(2).x() == doctest::Approx(0.7));
  REQUIRE(c.layout.planes.size() == 1);
  CHECK(c.layout.reference_plane().width() == 24);
  CHECK(c.layout.reference_plane().height() == 4);
  CHECK(c.layout.categories.size() == 2);
  CHECK(c.monitor.power_threshold == 12.5);
  CHECK(c.dnn.ensemble == 5);
  CHECK(c.dnn.max_rss == 25.0);
  CHECK(c.window.k_cw == 4);
  CHECK(c.window.merge == WindowMerge::kMedian);
  CHECK(c.tracking.eta2 == 7.0);
  CHECK(c.imaging.alpha == 15.0);

  std::ostringstream out;
  write_config(out, c);
  std::istringstream back(out.str());
  const PipelineConfig d = parse_config(back);
  CHECK(d.layout.grid.size() == 27);
  CHECK(d.layout.antennas.position(1) == c.layout.antennas.position(1));
  CHECK(d.window.merge == WindowMerge::kMedian);
  CHECK(d.dnn.ensemble == 5);
  std::ostringstream again;
  write_config(again, d);
  CHECK(again.str() == out.str());
}

TEST_CASE("config rejects mistakes") {
  std::istringstream typo("[dnn]\nepoch = 3\n");
  CHECK_THROWS_WITH_AS(parse_config(typo), doctest::Contains("epoch"), std::invalid_argument);
  std::istringstream section("[network]\nepochs = 3\n");
  CHECK_THROWS(parse_config(section));
  std::istringstream bad_value("[dnn]\nepochs = many\n");
  CHECK_THROWS(parse_config(bad_value));
  std::istringstream overlap("[layout]\ncategories = 0-4, 3-6\n");
  CHECK_THROWS(parse_config(overlap));
  std::istringstream window("[window]\nk_cw = 40\n");
  CHECK_THROWS(parse_config(window));
  CHECK_THROWS(load_config("/nonexistent/shelf.cfg"));
}

TEST_CASE("default config matches the standard shelf") {
  std::istringstream empty("");
  const PipelineConfig c = parse_config(empty);
  CHECK(c.layout.grid.size() == 116);
  CHECK(c.layout.reference_plane().size() == 2100);
  CHECK(c.layout.categories.size() == 6);
  CHECK(c.schedule.rate_per_s == 475.0);
  CHECK(c.monitor.buffer_reads == 2000);
  const auto cfg_path = std::filesystem::path(TOMO_SOURCE_DIR) / "configs" / "shelf.cfg";
  const PipelineConfig file = load_config(cfg_path);
  CHECK(file.layout.grid.size() == 116);
  CHECK(file.layout.antennas.position(1) == c.layout.antennas.position(1));
  CHECK(file.layout.categories.centroid(5) == c.layout.categories.centroid(5));
}

TEST_CASE("pgm and json frames") {
  ImageFrame f(4, 3);
  f.at(0, 0) = 1.0;
  f.at(3, 2) = 0.5;
  f.at(1, 1) = 0.2;
  std::stringstream pgm;
  write_pgm(pgm, f);
  const std::string bytes = pgm.str();
  CHECK(bytes.rfind("P5\n4 3\n255\n", 0) == 0);
  REQUIRE(bytes.size() == 11 + 12);
  // First stored row is the top of the shelf (v = 2).
  CHECK(static_cast<unsigned char>(bytes[11 + 3]) == 128);
  CHECK(static_cast<unsigned char>(bytes[11 + 8]) == 255);
  CHECK(static_cast<unsigned char>(bytes[11 + 5]) == 51);
  const ImageFrame back = read_pgm(pgm);
  CHECK(back.at(0, 0) == 1.0);
  CHECK(back.at(1, 1) == doctest::Approx(0.2));

  const std::string json = frame_to_json(f);
  CHECK(json.find("\"width\":4") != std::string::npos);

  ImageFrame neg(2, 1);
  neg.values << -1.0, 0.5;
  normalize_frame(neg);
  CHECK(neg.values[0] == 0.0);
  CHECK(neg.values[1] == 1.0);
  ImageFrame zero(2, 2);
  normalize_frame(zero);
  CHECK(zero.values.isZero());
}

TEST_CASE("scene files") {
  const Layout l = Layout::standard_shelf();
  const ObstructionScene s = scene_from_json(R"({
    "duration_s": 30, "seed": 9,
    "obstacles": [
      {"category": 3, "semi_axis_x": 0.25, "start_s": 5, "end_s": 20},
      {"center_x": 0.4, "center_y": 0.2, "max_loss_db": 7}
    ]})",
                                             l);
  REQUIRE(s.obstacles.size() == 2);
  CHECK(s.seed == 9);
  CHECK(s.obstacles[0].category_id == 3);
  CHECK(s.obstacles[0].center_x == doctest::Approx(category_position(l, 3).x()));
  CHECK(s.obstacles[0].end_s == 20.0);
  CHECK(std::isinf(s.obstacles[1].end_s));
  CHECK(s.obstacles[1].max_loss_db == 7.0);

  const ObstructionScene back = scene_from_json(scene_to_json(s), l);
  CHECK(scene_to_json(back) == scene_to_json(s));
  CHECK(back.obstacles[1].center_y == 0.2);

  CHECK_THROWS(scene_from_json("{\"obstacles\": []}", l));
  CHECK_THROWS(scene_from_json(R"({"duration_s": 3, "obstacles": [{"center_x": 1}]})", l));
  CHECK_THROWS(scene_from_json(R"({"duration_s": 3, "obstacles": [{"category": 9}]})", l));
  CHECK_THROWS(scene_from_json("not json", l));
}

TEST_CASE("category positions") {
  const Layout l = Layout::standard_shelf();
  for (int id = 1; id <= 6; ++id) {
    const Eigen::Vector2d p = category_position(l, id);
    const Category& c = l.categories.category(id - 1);
    CHECK(p.x() == doctest::Approx(0.5 * (c.first_column + c.last_column) * 0.127));
    CHECK(p.y() == doctest::Approx(1.5 * 0.127));
  }
}

TEST_CASE("scenario names") {
  CHECK(scenario_named("1+4+6").categories == std::vector<int>{1, 4, 6});
  CHECK(scenario_named("1, 4,6").name == "1+4+6");
  CHECK(scenario_named("cat3").categories == std::vector<int>{3});
  CHECK(scenario_named("cat3").name == "cat3");
  CHECK_THROWS(scenario_named("walk"));
  CHECK_THROWS(scenario_named("1++2"));
  CHECK(two_person_suite().size() == 6);
  CHECK(three_person_suite().size() == 2);
  CHECK(single_person_suite(Layout::standard_shelf()).size() == 6);
}

TEST_CASE("window labels") {
  PipelineConfig cfg;
  TrainingSet set;
  WindowLabeler labeler(cfg, LabelShape{}, set);
  ObstructionScene s;
  s.obstacles.push_back(person_at(cfg.layout, 3, test_profile(), 2.0, 8.0));
  // Category 3 spans columns 10-13; its center column 11.5 lies in windows 7 to 12.
  const auto during = labeler.labels_for(s, 3.0);
  REQUIRE(during.size() == 24);
  for (int i = 0; i < 24; ++i) {
    const bool positive = i >= 7 && i <= 12;
    CHECK((during[static_cast<std::size_t>(i)] == during[0]) == !positive);
  }
  const auto before = labeler.labels_for(s, 1.0);
  for (int id : before) CHECK(id == during[0]);
  const auto again = labeler.labels_for(s, 4.0);
  CHECK(again == during);
}

TEST_CASE("calibration mismatch is reported") {
  PipelineConfig cfg;
  CalibrationProfile p;
  p.num_tags = 100;
  p.num_antennas = 2;
  p.num_channels = 50;
  CHECK_THROWS_WITH(check_calibration(cfg, p), doctest::Contains("K=100"));
  CHECK_THROWS(Pipeline(cfg, p, ImagingMode::kAnalytic));
  CHECK(parse_imaging_mode("dnn") == ImagingMode::kDnn);
  CHECK_THROWS(parse_imaging_mode("cnn"));
}

TEST_CASE("analytic pipeline end to end") {
  PipelineConfig cfg;
  const CalibrationProfile profile = calibrate_environment(cfg, 600.0, 3);
  ObstructionScene scene;
  scene.duration_s = 40.0;
  scene.seed = 12;
  scene.obstacles.push_back(person_at(cfg.layout, 3, test_profile(), 12.0));
  const auto reads = simulate(cfg, scene);
  Pipeline pipe(cfg, profile, ImagingMode::kAnalytic);
  int gated = 0;
  int peak_in_category = 0;
  for (const TickResult& t : monitor_reads(cfg, profile, reads)) {
    const TickOutcome out = pipe.process(t);
    if (t.timestamp_s <= 11.0) CHECK_FALSE(out.gated);
    if (!out.frame) continue;
    ++gated;
    Eigen::Index peak = 0;
    out.frame->values.maxCoeff(&peak);
    const int u = static_cast<int>(peak % 140);
    if (u >= 50 && u <= 65) ++peak_in_category;
  }
  CHECK(gated > 20);
  CHECK(peak_in_category >= gated * 9 / 10);
  CHECK(pipe.scores().count(2) > 0);
}

TEST_CASE("edge windows are balanced") {
  PipelineConfig cfg;
  const CalibrationProfile profile = calibrate_environment(cfg, 600.0, 5);
  ObstructionScene scene;
  scene.duration_s = 7.0;
  scene.seed = 4;
  scene.obstacles.push_back(person_at(cfg.layout, 6, test_profile(), 0.0));
  auto positives = [](const TrainingSet& set) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < set.size(); ++i) n += set.label(i).maxCoeff() > 0.0;
    return n;
  };
  TrainingSet plain;
  WindowLabeler a(cfg, LabelShape{}, plain);
  const int ticks = add_scene_samples(plain, a, cfg, profile, scene, 5.0);
  TrainingSet balanced;
  WindowLabeler b(cfg, LabelShape{}, balanced);
  CHECK(add_scene_samples(balanced, b, cfg, profile, scene, 5.0, true) == ticks);
  REQUIRE(ticks > 0);
  // Category 6 is covered by windows 22 and 23 only; each copy is repeated three times.
  const std::size_t per_tick = 2 * static_cast<std::size_t>(profile.num_antennas);
  CHECK(positives(plain) == per_tick * ticks);
  CHECK(positives(balanced) == 3 * per_tick * ticks);
  CHECK(balanced.size() - plain.size() == 2 * per_tick * ticks);
}

TEST_CASE("shipped scene files load") {
  const Layout l = Layout::standard_shelf();
  const auto dir = std::filesystem::path(TOMO_SOURCE_DIR) / "configs" / "scenes";
  CHECK(load_scene(dir / "empty.json", l).empty());
  const ObstructionScene two = load_scene(dir / "two_shoppers.json", l);
  REQUIRE(two.obstacles.size() == 2);
  CHECK(two.obstacles[1].category_id == 4);
  CHECK(two.obstacles[1].end_s == 50.0);
}
