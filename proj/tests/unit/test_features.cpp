#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "foodweight/dataset.hpp"
#include "foodweight/features.hpp"
#include "support/test_support.hpp"

using namespace foodweight;

TEST(ImageArea, Examples) {
  EXPECT_EQ(image_area(Image::filled(224, 224, 3, 0)), 50176.0);
  EXPECT_EQ(image_area(Image::filled(10, 20, 1, 0)), 200.0);
  EXPECT_EQ(image_area(Image::filled(3, 7, 1, 0)), 21.0);
}

TEST(AspectRatio, Examples) {
  EXPECT_EQ(aspect_ratio(Image::filled(9, 9, 1, 0)), 1.0);
  EXPECT_EQ(aspect_ratio(Image::filled(20, 10, 1, 0)), 2.0);
  EXPECT_EQ(aspect_ratio(Image::filled(7, 3, 1, 0)), 7.0 / 3.0);
}

TEST(EncodeFoodType, Examples) {
  const ClassRegistry reg(food_classes());
  ASSERT_EQ(reg.size(), 14u);
  EXPECT_EQ(encode_food_type(food_classes().front(), reg), 0.0);
  EXPECT_EQ(encode_food_type(food_classes().back(), reg), 13.0);
  EXPECT_THROW(encode_food_type("Durian", reg), UnknownClass);
}

TEST(ClassRegistry, RejectsDuplicates) { EXPECT_THROW(ClassRegistry({"a", "b", "a"}), InvalidArgument); }

TEST(ExtractFeatures, IdentityScalerExample) {
  const ClassRegistry reg({"a", "b", "c"});
  const FeatureVector f = extract_features(Image::filled(100, 100, 3, 0.5), "c", 0.7, reg, FeatureScaler::identity());
  EXPECT_EQ(f, (FeatureVector{0.7, 2.0, 10000.0, 1.0, 0.5}));
}

TEST(ExtractFeatures, IdentityScalerComposesTheThreeOps) {
  Rng rng(11);
  const ClassRegistry reg({"x", "y"});
  for (int i = 0; i < 100; ++i) {
    const Image crop = testing_support::random_image(rng);
    const FeatureVector f = extract_features(crop, "y", -1.25, reg, FeatureScaler::identity());
    ASSERT_EQ(f.alpha, -1.25);
    ASSERT_EQ(f.area, image_area(crop));
    ASSERT_EQ(f.aspect_ratio, aspect_ratio(crop));
    ASSERT_EQ(f.avg_pixel_intensity, average_pixel_intensity(crop));
    ASSERT_NEAR(image_area(crop), aspect_ratio(crop) * crop.height() * crop.height(), 1e-9);
    ASSERT_EQ(extract_features(crop, "y", -1.25, reg, FeatureScaler::identity()), f);
  }
  EXPECT_THROW(extract_features(Image::filled(2, 2, 1, 0), "z", 0, reg, FeatureScaler::identity()), UnknownClass);
}

TEST(FitScaler, Examples) {
  const std::vector<EngineeredFeatures> two{{0, 5, 1, 0}, {1, 5, 3, 1}};
  const FeatureScaler s = fit_scaler(two);
  EXPECT_EQ(s.shift[0], 0.5);
  EXPECT_EQ(s.scale[0], 0.5);
  EXPECT_EQ(s.shift[1], 5.0);
  EXPECT_EQ(s.scale[1], 1.0);
  EXPECT_THROW(fit_scaler(std::vector<EngineeredFeatures>{}), EmptyDataset);
}

TEST(FitScaler, StandardizesItsFittingSet) {
  Rng rng(12);
  const ClassRegistry reg({"p", "q", "r"});
  std::vector<Image> crops;
  std::vector<EngineeredFeatures> raw;
  for (int i = 0; i < 60; ++i) {
    crops.push_back(testing_support::random_image(rng));
    raw.push_back(engineered_features(crops.back(), reg.names()[i % 3], reg));
  }
  const FeatureScaler s = fit_scaler(raw);
  for (std::size_t f = 0; f < 4; ++f) {
    long double sum = 0, sq = 0;
    for (std::size_t i = 0; i < crops.size(); ++i) {
      const FeatureVector v = extract_features(crops[i], reg.names()[i % 3], 0.0, reg, s);
      const double x = v.as_array()[f + 1];
      sum += x;
      sq += static_cast<long double>(x) * x;
    }
    const long double mean = sum / crops.size();
    EXPECT_NEAR(static_cast<double>(mean), 0.0, 1e-9);
    EXPECT_NEAR(static_cast<double>(std::sqrt(sq / crops.size() - mean * mean)), 1.0, 1e-9);
  }
}

TEST(FeatureProperties, EngineeredFeaturesAreFlipInvariant) {
  Rng rng(13);
  const ClassRegistry reg({"only"});
  for (int i = 0; i < 200; ++i) {
    const Image crop = testing_support::random_image(rng, 40);
    ASSERT_EQ(engineered_features(flip_horizontal(crop), "only", reg), engineered_features(crop, "only", reg));
  }
}
