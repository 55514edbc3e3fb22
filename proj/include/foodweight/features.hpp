#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "foodweight/error.hpp"
#include "foodweight/imaging.hpp"

namespace foodweight {

/// Ordered list of class names; a label's encoding is its position.
class ClassRegistry {
 public:
  ClassRegistry() = default;
  explicit ClassRegistry(std::vector<std::string> names) : names_(std::move(names)) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (!index_.emplace(names_[i], i).second) {
        throw InvalidArgument("duplicate class name '" + names_[i] + "' in registry");
      }
    }
  }

  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  const std::vector<std::string>& names() const { return names_; }
  bool contains(const std::string& label) const { return index_.contains(label); }

  std::size_t index_of(const std::string& label) const {
    const auto it = index_.find(label);
    if (it == index_.end()) throw UnknownClass("'" + label + "' is not a registered class");
    return it->second;
  }

  friend bool operator==(const ClassRegistry& a, const ClassRegistry& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// The model input [alpha, FT, A, AR, API].
struct FeatureVector {
  double alpha = 0.0;
  double food_type = 0.0;
  double area = 0.0;
  double aspect_ratio = 0.0;
  double avg_pixel_intensity = 0.0;

  std::array<double, 5> as_array() const { return {alpha, food_type, area, aspect_ratio, avg_pixel_intensity}; }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// The four hand-engineered entries (FT, A, AR, API), before or after scaling.
using EngineeredFeatures = std::array<double, 4>;

inline double image_area(const Image& crop) {
  return static_cast<double>(crop.height()) * static_cast<double>(crop.width());
}

inline double aspect_ratio(const Image& crop) {
  return static_cast<double>(crop.width()) / static_cast<double>(crop.height());
}

inline double encode_food_type(const std::string& label, const ClassRegistry& registry) {
  return static_cast<double>(registry.index_of(label));
}

/// Per-feature affine standardization (v - shift) / scale for FT, A, AR, API.
struct FeatureScaler {
  std::array<double, 4> shift{0.0, 0.0, 0.0, 0.0};
  std::array<double, 4> scale{1.0, 1.0, 1.0, 1.0};

  static FeatureScaler identity() { return {}; }

  EngineeredFeatures apply(const EngineeredFeatures& raw) const {
    EngineeredFeatures out{};
    for (std::size_t i = 0; i < 4; ++i) out[i] = (raw[i] - shift[i]) / scale[i];
    return out;
  }

  void validate() const {
    for (std::size_t i = 0; i < 4; ++i) {
      if (!(scale[i] > 0.0) || !std::isfinite(scale[i]) || !std::isfinite(shift[i])) {
        throw InvalidArgument("feature scaler scales must be finite and positive");
      }
    }
  }

  friend bool operator==(const FeatureScaler&, const FeatureScaler&) = default;
};

inline constexpr std::array<const char*, 4> kEngineeredFeatureNames{"food_type", "area", "aspect_ratio",
                                                                     "avg_pixel_intensity"};

/// Shift = mean, scale = population std per feature. A feature with zero
/// variance keeps scale 1 and a warning goes to stderr.
inline FeatureScaler fit_scaler(std::span<const EngineeredFeatures> samples) {
  if (samples.empty()) throw EmptyDataset("fit_scaler needs at least one sample");
  const double n = static_cast<double>(samples.size());
  FeatureScaler s;
  for (std::size_t f = 0; f < 4; ++f) {
    double sum = 0.0;
    for (const auto& v : samples) sum += v[f];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& v : samples) ss += (v[f] - mean) * (v[f] - mean);
    const double sd = std::sqrt(ss / n);
    s.shift[f] = mean;
    if (sd > 0.0) {
      s.scale[f] = sd;
    } else {
      s.scale[f] = 1.0;
      std::cerr << "warning: feature '" << kEngineeredFeatureNames[f] << "' is constant; using scale 1\n";
    }
  }
  return s;
}

/// Unscaled (FT, A, AR, API) of a crop taken before any resize.
inline EngineeredFeatures engineered_features(const Image& crop, const std::string& label,
                                              const ClassRegistry& registry) {
  return {encode_food_type(label, registry), image_area(crop), aspect_ratio(crop),
          average_pixel_intensity(crop)};
}

/// Assembles [alpha, FT, A, AR, API]; the engineered entries go through
/// `scaler`, alpha is passed through unchanged.
inline FeatureVector extract_features(const Image& crop, const std::string& label, double backbone_alpha,
                                      const ClassRegistry& registry, const FeatureScaler& scaler) {
  if (!std::isfinite(backbone_alpha)) throw InvalidArgument("backbone output is not finite");
  const auto e = scaler.apply(engineered_features(crop, label, registry));
  return {backbone_alpha, e[0], e[1], e[2], e[3]};
}

}  // namespace foodweight
