#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <iostream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "foodweight/error.hpp"
#include "foodweight/features.hpp"
#include "foodweight/imaging.hpp"
#include "foodweight/nnet/adam.hpp"
#include "foodweight/nnet/model.hpp"
#include "foodweight/random.hpp"

namespace foodweight::nnet {

enum class ScalerMode { kStandardize, kIdentity };

inline std::string to_string(ScalerMode m) { return m == ScalerMode::kIdentity ? "identity" : "standardize"; }

inline ScalerMode parse_scaler_mode(const std::string& s) {
  if (s == "standardize") return ScalerMode::kStandardize;
  if (s == "identity") return ScalerMode::kIdentity;
  throw InvalidArgument("scaler mode must be 'standardize' or 'identity', got '" + s + "'");
}

/// How the head starts. kUniform uses the fan-in draw everywhere.
/// kLeastSquares replaces the output layer with a ridge fit of the targets on
/// the initial hidden activations, so optimization starts at gram scale.
/// kAffineLeastSquares first routes +x and -x of every input through dedicated
/// hidden units, so the fitted readout can express any affine function of X.
enum class ReadoutInit { kAffineLeastSquares, kLeastSquares, kUniform };

inline std::string to_string(ReadoutInit r) {
  switch (r) {
    case ReadoutInit::kAffineLeastSquares: return "affine-least-squares";
    case ReadoutInit::kLeastSquares: return "least-squares";
    case ReadoutInit::kUniform: return "uniform";
  }
  return "?";
}

inline ReadoutInit parse_readout_init(const std::string& s) {
  if (s == "affine-least-squares") return ReadoutInit::kAffineLeastSquares;
  if (s == "least-squares") return ReadoutInit::kLeastSquares;
  if (s == "uniform") return ReadoutInit::kUniform;
  throw InvalidArgument("readout init must be 'affine-least-squares', 'least-squares' or 'uniform', got '" + s +
                        "'");
}

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 32;
  int epochs = 10;
  std::uint64_t seed = 0;
  double flip_probability = 0.5;
  ScalerMode scaler = ScalerMode::kStandardize;
  int pool_size = 16;
  ReadoutInit readout = ReadoutInit::kAffineLeastSquares;
  double readout_ridge = 1e-3;  // per-sample ridge penalty on readout weights
  unsigned threads = 1;  // does not change results

  void validate() const {
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be > 0");
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
    if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) {
      throw InvalidArgument("flip_probability must be in [0,1]");
    }
    if (!(readout_ridge > 0.0)) throw InvalidArgument("readout_ridge must be > 0");
    ToyBackbone::validate_geometry(pool_size, 3);
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean squared error over the epoch's samples, grams^2
};

/// Random access to training crops; called twice per sample (statistics pass
/// and preparation pass) so large datasets never sit in memory decoded.
using CropSource = std::function<LabeledCrop(std::size_t)>;

/// One training sample after image work, in both flip orientations. The
/// engineered features are flip-invariant and shared.
struct TrainingExample {
  PreparedInput plain;
  std::vector<double> pooled_flipped;
  double target = 0.0;
};

/// Fits pixel normalization and the feature scaler on the training crops,
/// then prepares every sample for the backbone.
inline std::vector<TrainingExample> fit_preprocessing(WeightModel& model, std::size_t n,
                                                      const CropSource& source, ScalerMode mode) {
  if (n == 0) throw EmptyDataset("no training samples");
  PixelStatsAccumulator stats;
  std::vector<EngineeredFeatures> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const LabeledCrop s = source(i);
    raw[i] = engineered_features(s.crop, s.label, model.registry);
    const Image sized = resize(convert_channels(s.crop, model.params.backbone.channels), kBackboneInputSize,
                               kBackboneInputSize);
    stats.add(sized);
  }
  model.pixel_norm = stats.result();
  if (!(model.pixel_norm.std > 0.0)) {
    std::cerr << "warning: training crops have zero pixel variance; using std 1\n";
    model.pixel_norm.std = 1.0;
  }
  model.scaler = mode == ScalerMode::kStandardize ? fit_scaler(raw) : FeatureScaler::identity();

  std::vector<TrainingExample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const LabeledCrop s = source(i);
    if (!(s.weight_grams > 0.0)) throw InvalidArgument("training weights must be positive");
    out[i].plain = {backbone_input(s.crop, model.params.backbone, model.pixel_norm, false),
                    model.scaler.apply(raw[i])};
    out[i].pooled_flipped = backbone_input(s.crop, model.params.backbone, model.pixel_norm, true);
    out[i].target = s.weight_grams;
  }
  return out;
}

/// Mini-batch Adam on MSE over already prepared examples. Each epoch reshuffles
/// with the run generator and keeps the last partial batch; each sample is
/// mirrored with probability `flip_probability`.
inline TrainResult train_prepared(Parameters& params, std::span<const TrainingExample> data,
                                  const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw EmptyDataset("no training samples");
  Rng rng(cfg.seed ^ 0x5DEECE66DULL);
  AdamState adam = AdamState::for_parameters(params, cfg.learning_rate);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  std::vector<Example> batch;
  batch.reserve(bs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double sq_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) {
        const TrainingExample& ex = data[order[k]];
        const bool flip = rng.bernoulli(cfg.flip_probability);
        batch.push_back({{flip ? ex.pooled_flipped : ex.plain.pooled, ex.plain.engineered}, ex.target});
      }
      const BatchGradient g = backward(params, batch, cfg.threads);
      sq_sum += g.loss * static_cast<double>(batch.size());
      adam_step(params, g.grads, adam);
    }
    result.epoch_loss.push_back(sq_sum / static_cast<double>(data.size()));
  }
  return result;
}

/// Sets layer3 to the ridge least-squares fit of the targets on the current
/// last-hidden activations of the unflipped inputs. The bias is unpenalized.
inline void fit_readout(Parameters& params, std::span<const TrainingExample> data, double ridge) {
  if (data.empty()) throw EmptyDataset("no training samples");
  const int h = params.layer3.in_dim;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(h + 1, h + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(h + 1);
  Eigen::VectorXd row(h + 1);
  for (const auto& ex : data) {
    const ForwardTrace t = forward_trace(params, ex.plain);
    for (int k = 0; k < h; ++k) row[k] = t.a2[static_cast<std::size_t>(k)];
    row[h] = 1.0;
    gram.selfadjointView<Eigen::Lower>().rankUpdate(row);
    rhs += ex.target * row;
  }
  gram = gram.selfadjointView<Eigen::Lower>();
  const double penalty = ridge * static_cast<double>(data.size());
  for (int k = 0; k < h; ++k) gram(k, k) += penalty;
  const Eigen::VectorXd sol = gram.ldlt().solve(rhs);
  if (!sol.allFinite()) throw InvalidArgument("readout least-squares fit is not finite");
  for (int k = 0; k < h; ++k) params.layer3.w(0, k) = sol[k];
  params.layer3.bias[0] = sol[h];
}

/// Overwrites the first 2*kInputDim units of both hidden layers so that
/// a2[i] = relu(x[i]) and a2[kInputDim + i] = relu(-x[i]). Their difference
/// is x[i], which puts every affine map of the input within reach of a linear
/// readout. The remaining units keep their random draw.
inline void seed_affine_units(Parameters& params) {
  static_assert(2 * kInputDim <= kHidden2);
  auto& l1 = params.layer1;
  auto& l2 = params.layer2;
  for (int u = 0; u < 2 * kInputDim; ++u) {
    for (int c = 0; c < l1.in_dim; ++c) l1.w(u, c) = 0.0;
    l1.w(u, u % kInputDim) = u < kInputDim ? 1.0 : -1.0;
    l1.bias[static_cast<std::size_t>(u)] = 0.0;
    for (int c = 0; c < l2.in_dim; ++c) l2.w(u, c) = 0.0;
    l2.w(u, u) = 1.0;
    l2.bias[static_cast<std::size_t>(u)] = 0.0;
  }
}

/// Full training run: preprocessing fit plus optimization.
inline TrainResult train(WeightModel& model, std::size_t n, const CropSource& source, const TrainConfig& cfg) {
  cfg.validate();
  const auto data = fit_preprocessing(model, n, source, cfg.scaler);
  if (cfg.readout == ReadoutInit::kAffineLeastSquares) seed_affine_units(model.params);
  if (cfg.readout != ReadoutInit::kUniform) fit_readout(model.params, data, cfg.readout_ridge);
  return train_prepared(model.params, data, cfg);
}

inline TrainResult train(WeightModel& model, std::span<const LabeledCrop> samples, const TrainConfig& cfg) {
  return train(model, samples.size(), [&](std::size_t i) { return samples[i]; }, cfg);
}

}  // namespace foodweight::nnet
