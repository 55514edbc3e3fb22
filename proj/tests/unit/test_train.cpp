#include <gtest/gtest.h>

#include <vector>

#include "foodweight/nnet/train.hpp"
#include "foodweight/regress_eval.hpp"
#include "support/test_support.hpp"

using namespace foodweight;
using namespace foodweight::nnet;

namespace {

/// Crops of random size whose weight is 0.002 * area + 20.
std::vector<LabeledCrop> linear_dataset(int n, std::uint64_t seed, const ClassRegistry& reg) {
  Rng rng(seed);
  std::vector<LabeledCrop> out;
  for (int i = 0; i < n; ++i) {
    const int w = 16 + static_cast<int>(rng.below(120));
    const int h = 16 + static_cast<int>(rng.below(120));
    const double shade = 0.2 + 0.6 * rng.uniform();
    out.push_back({Image::filled(w, h, 3, shade), reg.names()[static_cast<std::size_t>(i) % reg.size()],
                   0.002 * w * h + 20.0});
  }
  return out;
}

}  // namespace

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.epochs = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.flip_probability = 1.5;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.pool_size = 13;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Train, EmptyDatasetThrows) {
  WeightModel m = WeightModel::initialize(ClassRegistry({"a"}), 3, 16, 0);
  EXPECT_THROW(train(m, std::span<const LabeledCrop>{}, TrainConfig{}), EmptyDataset);
}

TEST(Train, LinearDatasetReachesHighTrainingR2) {
  const ClassRegistry reg({"a", "b", "c", "d"});
  const auto data = linear_dataset(200, 1, reg);
  WeightModel m = WeightModel::initialize(reg, 3, 16, 2);
  TrainConfig cfg;
  cfg.seed = 3;
  const TrainResult r = train(m, data, cfg);
  ASSERT_EQ(r.epoch_loss.size(), 10u);
  std::vector<double> actual, predicted;
  for (const auto& s : data) {
    actual.push_back(s.weight_grams);
    predicted.push_back(predict(m, s.crop, s.label));
  }
  EXPECT_GT(r_squared(actual, predicted), 0.99);
}

TEST(Train, SameSeedGivesIdenticalHistoryAndParameters) {
  const ClassRegistry reg({"a", "b"});
  const auto data = linear_dataset(40, 4, reg);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 7;
  cfg.seed = 5;
  WeightModel a = WeightModel::initialize(reg, 3, 8, 6);
  WeightModel b = a;
  const auto ha = train(a, data, cfg);
  const auto hb = train(b, data, cfg);
  EXPECT_EQ(ha.epoch_loss, hb.epoch_loss);
  EXPECT_TRUE(a.params == b.params);

  cfg.threads = 3;
  WeightModel c = WeightModel::initialize(reg, 3, 8, 6);
  EXPECT_EQ(train(c, data, cfg).epoch_loss, ha.epoch_loss);
  EXPECT_TRUE(c.params == a.params);
}

TEST(Train, PartialLastBatchIsUsed) {
  const ClassRegistry reg({"a"});
  const auto data = linear_dataset(5, 7, reg);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 4;
  WeightModel m = WeightModel::initialize(reg, 3, 8, 8);
  Parameters before = m.params;
  train(m, data, cfg);
  // Two Adam steps were taken; after the least-squares readout, every block
  // except unused ones has moved.
  EXPECT_FALSE(m.params.layer1.weights == before.layer1.weights);
}

TEST(Train, PreprocessingIsFittedOnTrainingCrops) {
  const ClassRegistry reg({"a", "b"});
  const auto data = linear_dataset(30, 9, reg);
  WeightModel m = WeightModel::initialize(reg, 3, 8, 10);
  TrainConfig cfg;
  cfg.epochs = 1;
  train(m, data, cfg);
  std::vector<EngineeredFeatures> raw;
  for (const auto& s : data) raw.push_back(engineered_features(s.crop, s.label, reg));
  EXPECT_TRUE(m.scaler == fit_scaler(raw));
  EXPECT_GT(m.pixel_norm.std, 0.0);

  WeightModel id = WeightModel::initialize(reg, 3, 8, 10);
  cfg.scaler = ScalerMode::kIdentity;
  train(id, data, cfg);
  EXPECT_TRUE(id.scaler == FeatureScaler::identity());
}

TEST(FitReadout, RecoversExactLinearReadout) {
  Parameters p(4, 3);
  Rng rng(11);
  p.backbone.init_uniform(rng);
  p.layer1.init_uniform(rng);
  p.layer2.init_uniform(rng);
  p.layer3.init_uniform(rng);
  const Parameters truth = p;
  std::vector<TrainingExample> data(300);
  for (auto& ex : data) {
    ex.plain.pooled.resize(p.backbone.input_dim());
    for (double& v : ex.plain.pooled) v = rng.normal();
    for (double& v : ex.plain.engineered) v = rng.normal();
    ex.target = forward_prepared(truth, ex.plain);
  }
  p.layer3.init_uniform(rng);
  fit_readout(p, data, 1e-12);
  double worst = 0.0;
  for (const auto& ex : data) worst = std::max(worst, std::abs(forward_prepared(p, ex.plain) - ex.target));
  EXPECT_LT(worst, 1e-6);
}

TEST(Train, UniformReadoutKeepsInitialOutputLayerUntilOptimized) {
  const ClassRegistry reg({"a"});
  const auto data = linear_dataset(10, 12, reg);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.readout = ReadoutInit::kUniform;
  cfg.learning_rate = 1e-6;
  WeightModel m = WeightModel::initialize(reg, 3, 8, 13);
  const double b3 = m.params.layer3.bias[0];
  train(m, data, cfg);
  EXPECT_NEAR(m.params.layer3.bias[0], b3, 1e-5);
}
