#include <gtest/gtest.h>

#include <map>

#include "foodweight/dataset.hpp"
#include "foodweight/detect_eval.hpp"
#include "support/test_support.hpp"

using namespace foodweight;
using testing_support::TempDir;

namespace {

constexpr const char* kHeader = "image_id,path,x_min,y_min,x_max,y_max,label,weight_grams,container,orientation\n";

SampleRecord record(const std::string& id, const std::string& label, double weight, const std::string& container = "plate",
                    const std::string& orientation = "top") {
  return {id, id + ".png", BoundingBox(0, 0, 10, 10), label, weight, container, orientation};
}

std::map<Split, std::size_t> count(const SplitAssignment& a) {
  std::map<Split, std::size_t> n;
  for (const auto& [id, s] : a) ++n[s];
  return n;
}

}  // namespace

TEST(Manifest, ThreeRowFixture) {
  TempDir dir("manifest");
  testing_support::write_text(dir / "m.csv", std::string(kHeader) +
                                                 "a,a.png,0,0,10,10,Grape,12.5,plate,top\n"
                                                 "b,b.png,1,1,5,7,\"Steamed Bun with Meat\",80,bowl,side\n"
                                                 "c,c.png,2,3,4,5,Orange,140,plate,top\n");
  const auto r = load_manifest(dir / "m.csv", {nullptr, false});
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[1].label, "Steamed Bun with Meat");
  EXPECT_EQ(r[1].gt_box, BoundingBox(1, 1, 5, 7));
  EXPECT_EQ(r[2].weight_grams, 140.0);
}

TEST(Manifest, NegativeWeightNamesTheLine) {
  TempDir dir("manifest");
  testing_support::write_text(dir / "m.csv", std::string(kHeader) +
                                                 "a,a.png,0,0,10,10,Grape,12.5,plate,top\n"
                                                 "b,b.png,0,0,10,10,Grape,-5,plate,top\n");
  try {
    load_manifest(dir / "m.csv", {nullptr, false});
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Manifest, RejectsMalformedRows) {
  TempDir dir("manifest");
  const std::pair<const char*, const char*> bad[] = {
      {"short", "a,a.png,0,0,10,10,Grape,12.5,plate\n"},
      {"degenerate", "a,a.png,5,0,5,10,Grape,12.5,plate,top\n"},
      {"text", "a,a.png,0,0,ten,10,Grape,12.5,plate,top\n"},
      {"dup", "a,a.png,0,0,10,10,Grape,12.5,plate,top\na,a.png,0,0,10,10,Grape,12.5,plate,top\n"},
  };
  for (const auto& [name, body] : bad) {
    testing_support::write_text(dir / name, std::string(kHeader) + body);
    EXPECT_THROW(load_manifest(dir / name, {nullptr, false}), ParseError) << name;
  }
  testing_support::write_text(dir / "nohdr.csv", "image_id,path\n");
  EXPECT_THROW(load_manifest(dir / "nohdr.csv"), ParseError);
}

TEST(Manifest, UnknownClassAndMissingImage) {
  TempDir dir("manifest");
  testing_support::write_text(dir / "m.csv", std::string(kHeader) + "a,a.png,0,0,10,10,Durian,12.5,plate,top\n");
  const ClassRegistry reg(food_classes());
  EXPECT_THROW(load_manifest(dir / "m.csv", {&reg, false}), UnknownClass);
  EXPECT_THROW(load_manifest(dir / "m.csv"), MissingFile);
  EXPECT_THROW(load_manifest(dir / "absent.csv"), MissingFile);
}

TEST(Manifest, FourteenFoodClassesGiveRegistryOfFourteen) {
  std::vector<SampleRecord> recs;
  for (const auto& name : food_classes()) recs.push_back(record("id_" + name, name, 10));
  recs.push_back(record("extra", food_classes()[0], 20));
  EXPECT_EQ(registry_from(recs).size(), 14u);
}

TEST(Manifest, WriteLoadRoundTrip) {
  TempDir dir("manifest");
  std::vector<SampleRecord> recs{record("a", "Toast Bread", 0.1 + 0.2), record("b", "with, comma \"q\"", 1e-3)};
  write_manifest(dir / "m.csv", recs);
  const auto back = load_manifest(dir / "m.csv", {nullptr, false});
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].weight_grams, 0.1 + 0.2);
  EXPECT_EQ(back[1].label, recs[1].label);
}

TEST(StratifiedSplit, TenIdenticalRecords) {
  std::vector<SampleRecord> recs;
  for (int i = 0; i < 10; ++i) recs.push_back(record("r" + std::to_string(i), "a", 50));
  auto n = count(stratified_split(recs, {}, 3));
  EXPECT_EQ(n[Split::kTrain], 6u);
  EXPECT_EQ(n[Split::kVal], 2u);
  EXPECT_EQ(n[Split::kTest], 2u);
}

TEST(StratifiedSplit, TwoStrataOfFive) {
  std::vector<SampleRecord> recs;
  for (int i = 0; i < 5; ++i) recs.push_back(record("p" + std::to_string(i), "a", 50, "plate"));
  for (int i = 0; i < 5; ++i) recs.push_back(record("b" + std::to_string(i), "a", 50, "bowl"));
  const auto keys = stratum_keys(recs);
  ASSERT_EQ(std::set<std::string>(keys.begin(), keys.end()).size(), 2u);
  const auto a = stratified_split(recs, {}, 11);
  for (char prefix : {'p', 'b'}) {
    std::map<Split, int> n;
    for (const auto& [id, s] : a) {
      if (id[0] == prefix) ++n[s];
    }
    EXPECT_EQ(n[Split::kTrain], 3) << prefix;
    EXPECT_EQ(n[Split::kVal], 1) << prefix;
    EXPECT_EQ(n[Split::kTest], 1) << prefix;
  }
}

TEST(StratifiedSplit, DeterministicAndSeedSensitive) {
  Rng rng(5);
  std::vector<SampleRecord> recs;
  for (int i = 0; i < 60; ++i) recs.push_back(record("r" + std::to_string(i), "a", rng.uniform(1, 100)));
  EXPECT_EQ(stratified_split(recs, {}, 1), stratified_split(recs, {}, 1));
  EXPECT_NE(stratified_split(recs, {}, 1), stratified_split(recs, {}, 2));
  EXPECT_THROW(stratified_split({}, {}, 1), EmptyDataset);
  EXPECT_THROW(stratified_split(recs, {0.5, 0.5, 0.0}, 1), InvalidArgument);
  EXPECT_THROW(stratified_split(recs, {0.5, 0.3, 0.3}, 1), InvalidArgument);
}

TEST(StratifiedSplit, WeightBucketsAreWithinClassQuartiles) {
  std::vector<SampleRecord> recs;
  for (int i = 1; i <= 8; ++i) recs.push_back(record("a" + std::to_string(i), "a", i));
  recs.push_back(record("b1", "b", 1000));
  const auto b = weight_buckets(recs);
  EXPECT_EQ(b, (std::vector<int>{0, 0, 1, 1, 2, 2, 3, 3, 0}));
}

TEST(StratifiedSplit, PartitionAndPerStratumProportionsOnRandomRecords) {
  Rng rng(6);
  const char* containers[] = {"plate", "bowl"};
  const char* orientations[] = {"top", "side"};
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<SampleRecord> recs;
    const int n = 1 + static_cast<int>(rng.below(300));
    for (int i = 0; i < n; ++i) {
      recs.push_back(record("r" + std::to_string(i), std::string(1, static_cast<char>('a' + rng.below(4))),
                            std::round(rng.uniform(1, 20)), containers[rng.below(2)], orientations[rng.below(2)]));
    }
    const SplitRatios ratios{0.6, 0.2, 0.2};
    const auto a = stratified_split(recs, ratios, rng.next_u64());
    ASSERT_EQ(a.size(), recs.size());
    for (const auto& r : recs) ASSERT_TRUE(a.contains(r.image_id));
    const auto keys = stratum_keys(recs);
    std::map<std::string, std::map<Split, double>> per;
    std::map<std::string, double> sizes;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      ++per[keys[i]][a.at(recs[i].image_id)];
      ++sizes[keys[i]];
    }
    for (const auto& [key, n_s] : sizes) {
      ASSERT_LE(std::abs(per[key][Split::kTrain] - 0.6 * n_s), 1.0);
      ASSERT_LE(std::abs(per[key][Split::kVal] - 0.2 * n_s), 1.0);
      ASSERT_LE(std::abs(per[key][Split::kTest] - 0.2 * n_s), 1.0);
    }
  }
}

TEST(SplitJson, RoundTripAndValidation) {
  TempDir dir("split");
  const SplitAssignment a{{"x", Split::kTrain}, {"y", Split::kTest}, {"z", Split::kVal}};
  testing_support::write_text(dir / "s.json", to_json(a).dump());
  EXPECT_EQ(load_split(dir / "s.json"), a);
  testing_support::write_text(dir / "bad.json", R"({"x": "holdout"})");
  EXPECT_THROW(load_split(dir / "bad.json"), ParseError);
  EXPECT_THROW(load_split(dir / "none.json"), MissingFile);
}

TEST(SyntheticFixture, ZeroNoiseWeightsFollowTheLaw) {
  TempDir dir("fixture");
  FixtureSpec spec;
  spec.classes = 3;
  spec.per_class = 5;
  spec.image_width = 48;
  spec.image_height = 40;
  spec.seed = 9;
  generate_synthetic_fixture(spec, dir.path());
  const auto recs = load_manifest(dir / "manifest.csv");
  ASSERT_EQ(recs.size(), 15u);
  for (const auto& r : recs) {
    EXPECT_EQ(r.weight_grams, 0.002 * r.gt_box.width() * r.gt_box.height() + 20.0) << r.image_id;
    const Image img = read_image(dir / r.image_path);
    EXPECT_EQ(img.width(), 48);
    EXPECT_EQ(img.height(), 40);
  }
  const auto gts = load_ground_truth(dir / "ground_truth.json");
  ASSERT_EQ(gts.size(), recs.size());
  EXPECT_EQ(gts[0].weight_grams, recs[0].weight_grams);
}

TEST(SyntheticFixture, SameSeedIsByteIdentical) {
  TempDir a("fixture_a"), b("fixture_b");
  FixtureSpec spec;
  spec.classes = 2;
  spec.per_class = 3;
  spec.image_width = 32;
  spec.image_height = 32;
  spec.noise = 2.0;
  spec.seed = 4;
  const auto fa = generate_synthetic_fixture(spec, a.path());
  const auto fb = generate_synthetic_fixture(spec, b.path());
  EXPECT_EQ(testing_support::read_text(fa.manifest), testing_support::read_text(fb.manifest));
  EXPECT_EQ(testing_support::read_text(fa.ground_truth), testing_support::read_text(fb.ground_truth));
  for (const auto& r : fa.records) {
    EXPECT_EQ(testing_support::read_text(a / r.image_path), testing_support::read_text(b / r.image_path));
  }
  spec.seed = 5;
  TempDir c("fixture_c");
  EXPECT_NE(testing_support::read_text(generate_synthetic_fixture(spec, c.path()).manifest),
            testing_support::read_text(fa.manifest));
}

TEST(SyntheticFixture, FourteenByTwentyCounts) {
  TempDir dir("fixture");
  FixtureSpec spec;
  spec.image_width = 16;
  spec.image_height = 16;
  const auto files = generate_synthetic_fixture(spec, dir.path());
  ASSERT_EQ(files.records.size(), 280u);
  std::map<std::string, int> per;
  for (const auto& r : files.records) ++per[r.label];
  ASSERT_EQ(per.size(), 14u);
  for (const auto& [label, n] : per) EXPECT_EQ(n, 20) << label;
  EXPECT_EQ(per.count("Cherry Tomato"), 1u);
}

TEST(SyntheticFixture, Validation) {
  TempDir dir("fixture");
  FixtureSpec spec;
  spec.classes = 0;
  EXPECT_THROW(generate_synthetic_fixture(spec, dir.path()), InvalidArgument);
}

TEST(OracleDetector, PerfectWhenJitterAndDropAreZero) {
  std::vector<GroundTruth> gts;
  Rng rng(7);
  for (int i = 0; i < 40; ++i) {
    gts.push_back({"i" + std::to_string(i / 2), testing_support::random_box(rng, 100, 2),
                   std::string(1, static_cast<char>('a' + i % 3)), 0.0, {}, {}});
  }
  const auto dets = oracle_detector(gts, 0.0, 0.0, 1);
  ASSERT_EQ(dets.size(), gts.size());
  const auto r = evaluate_detections(dets, gts);
  EXPECT_EQ(r.map, 1.0);
  EXPECT_EQ(r.map_50, 1.0);
  EXPECT_EQ(r.map_75, 1.0);
  EXPECT_EQ(r.classification_accuracy, 1.0);
  EXPECT_EQ(r.average_iou, 1.0);
}

TEST(OracleDetector, DropIsSeededAndRoughlyHalf) {
  std::vector<GroundTruth> gts;
  for (int i = 0; i < 2000; ++i) gts.push_back({"i" + std::to_string(i), BoundingBox(0, 0, 10, 10), "a", 0.0, {}, {}});
  const auto a = oracle_detector(gts, 0.1, 0.5, 77);
  const auto b = oracle_detector(gts, 0.1, 0.5, 77);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].box, b[i].box);
  EXPECT_GT(a.size(), 900u);
  EXPECT_LT(a.size(), 1100u);
  EXPECT_THROW(oracle_detector(gts, 0.1, 1.0, 1), InvalidArgument);
  EXPECT_THROW(oracle_detector(gts, -0.1, 0.0, 1), InvalidArgument);
}

TEST(OracleDetector, SmallJitterGivesIouStrictlyInsideUnitInterval) {
  std::vector<GroundTruth> gts;
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    gts.push_back({"i" + std::to_string(i), testing_support::random_box(rng, 200, 20), "a", 0.0, {}, {}});
  }
  const auto dets = oracle_detector(gts, 0.05, 0.0, 3);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    EXPECT_EQ(dets[i].label, gts[i].label);
    EXPECT_GE(dets[i].score, 0.95);
  }
  const double iou = average_iou(dets, gts);
  EXPECT_GT(iou, 0.8);
  EXPECT_LT(iou, 1.0);
}
