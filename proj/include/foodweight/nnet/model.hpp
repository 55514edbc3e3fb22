#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "foodweight/error.hpp"
#include "foodweight/features.hpp"
#include "foodweight/imaging.hpp"
#include "foodweight/nnet/layers.hpp"
#include "foodweight/random.hpp"

namespace foodweight::nnet {

inline constexpr int kInputDim = 5;
inline constexpr int kHidden1 = 64;
inline constexpr int kHidden2 = 32;
inline constexpr int kOutputDim = 1;

/// A named view of one trainable tensor.
template <typename T>
struct ParamBlock {
  std::string_view name;
  std::span<T> values;
};

inline constexpr std::size_t kNumBlocks = 8;

/// Every trainable parameter of the model. Gradients use the same type.
struct Parameters {
  ToyBackbone backbone;
  DenseLayer layer1{kInputDim, kHidden1};
  DenseLayer layer2{kHidden1, kHidden2};
  DenseLayer layer3{kHidden2, kOutputDim};

  Parameters() = default;
  Parameters(int pool_size, int channels) : backbone(pool_size, channels) {}

  /// Same shapes, all zeros.
  Parameters zeros_like() const { return Parameters(backbone.pool_size, backbone.channels); }

  std::array<ParamBlock<double>, kNumBlocks> blocks() {
    return {{{"backbone.weights", backbone.weights},
             {"backbone.bias", backbone.bias},
             {"layer1.weights", layer1.weights},
             {"layer1.bias", layer1.bias},
             {"layer2.weights", layer2.weights},
             {"layer2.bias", layer2.bias},
             {"layer3.weights", layer3.weights},
             {"layer3.bias", layer3.bias}}};
  }

  std::array<ParamBlock<const double>, kNumBlocks> blocks() const {
    return {{{"backbone.weights", backbone.weights},
             {"backbone.bias", backbone.bias},
             {"layer1.weights", layer1.weights},
             {"layer1.bias", layer1.bias},
             {"layer2.weights", layer2.weights},
             {"layer2.bias", layer2.bias},
             {"layer3.weights", layer3.weights},
             {"layer3.bias", layer3.bias}}};
  }

  /// Rejects anything but the fixed 5 -> 64 -> 32 -> 1 head.
  void validate_shapes() const {
    auto check = [](const DenseLayer& l, int in, int out, const char* name) {
      if (l.in_dim != in || l.out_dim != out ||
          l.weights.size() != static_cast<std::size_t>(in) * out ||
          l.bias.size() != static_cast<std::size_t>(out)) {
        throw DimensionMismatch(std::string(name) + " must be (" + std::to_string(out) + ", " +
                                std::to_string(in) + ") with bias (" + std::to_string(out) + ")");
      }
    };
    check(layer1, kInputDim, kHidden1, "layer1");
    check(layer2, kHidden1, kHidden2, "layer2");
    check(layer3, kHidden2, kOutputDim, "layer3");
    ToyBackbone::validate_geometry(backbone.pool_size, backbone.channels);
    if (backbone.weights.size() != backbone.input_dim() || backbone.bias.size() != 1) {
      throw DimensionMismatch("backbone parameters do not match pool size and channels");
    }
  }

  friend bool operator==(const Parameters&, const Parameters&) = default;
};

/// Backbone plus regression head, together with the preprocessing state that
/// must travel with it (class registry, feature scaler, pixel normalization).
struct WeightModel {
  Parameters params;
  FeatureScaler scaler;
  ClassRegistry registry;
  PixelStats pixel_norm{0.0, 1.0};

  /// Fan-in-scaled uniform initialization from `seed`.
  static WeightModel initialize(ClassRegistry registry, int channels, int pool_size, std::uint64_t seed) {
    WeightModel m;
    m.params = Parameters(pool_size, channels);
    m.registry = std::move(registry);
    Rng rng(seed);
    m.params.backbone.init_uniform(rng);
    m.params.layer1.init_uniform(rng);
    m.params.layer2.init_uniform(rng);
    m.params.layer3.init_uniform(rng);
    return m;
  }
};

/// Everything the network needs for one sample once the image work is done.
struct PreparedInput {
  std::vector<double> pooled;       // backbone input
  EngineeredFeatures engineered{};  // scaled FT, A, AR, API
};

/// Intermediate values of one forward pass, kept for backpropagation.
struct ForwardTrace {
  std::array<double, kInputDim> x{};
  std::vector<double> z1, a1, z2, a2;
  double output = 0.0;
};

inline ForwardTrace forward_trace(const Parameters& p, const PreparedInput& in) {
  ForwardTrace t;
  const double alpha = backbone_forward(p.backbone, in.pooled);
  t.x = {alpha, in.engineered[0], in.engineered[1], in.engineered[2], in.engineered[3]};
  t.z1 = dense_forward(p.layer1, t.x);
  t.a1 = relu(t.z1);
  t.z2 = dense_forward(p.layer2, t.a1);
  t.a2 = relu(t.z2);
  t.output = dense_forward(p.layer3, t.a2)[0];
  return t;
}

inline double forward_prepared(const Parameters& p, const PreparedInput& in) {
  return forward_trace(p, in).output;
}

/// Image-side preprocessing for one crop using the model's persisted state.
inline PreparedInput prepare_input(const WeightModel& m, const Image& crop, const std::string& label,
                                   bool flipped = false) {
  return {backbone_input(crop, m.params.backbone, m.pixel_norm, flipped),
          m.scaler.apply(engineered_features(crop, label, m.registry))};
}

/// The 5-entry model input for a crop, alpha included.
inline FeatureVector model_features(const WeightModel& m, const Image& crop, const std::string& label) {
  const auto pooled = backbone_input(crop, m.params.backbone, m.pixel_norm);
  return extract_features(crop, label, backbone_forward(m.params.backbone, pooled), m.registry, m.scaler);
}

/// Predicted weight in grams for a raw (un-resized) crop.
inline double forward(const WeightModel& m, const Image& crop, const std::string& label) {
  return forward_prepared(m.params, prepare_input(m, crop, label));
}

inline double predict(const WeightModel& m, const Image& crop, const std::string& label) {
  return forward(m, crop, label);
}

inline double mse_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw DimensionMismatch("prediction and target lengths differ");
  if (pred.empty()) throw EmptyBatch("mse_loss on an empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = target[i] - pred[i];
    sum += r * r;
  }
  return sum / static_cast<double>(pred.size());
}

/// Adds dL/dparams for one sample to `grad`, given dL/d(output).
inline void accumulate_sample_gradient(const Parameters& p, const PreparedInput& in, const ForwardTrace& t,
                                       double d_output, Parameters& grad) {
  // layer 3
  std::vector<double> d_a2(kHidden2);
  for (int j = 0; j < kHidden2; ++j) {
    grad.layer3.w(0, j) += d_output * t.a2[j];
    d_a2[j] = p.layer3.w(0, j) * d_output;
  }
  grad.layer3.bias[0] += d_output;

  // relu 2, subgradient 0 at 0
  std::vector<double> d_z2(kHidden2);
  for (int j = 0; j < kHidden2; ++j) d_z2[j] = t.z2[j] > 0.0 ? d_a2[j] : 0.0;

  // layer 2
  std::vector<double> d_a1(kHidden1, 0.0);
  for (int j = 0; j < kHidden2; ++j) {
    if (d_z2[j] == 0.0) continue;
    for (int i = 0; i < kHidden1; ++i) {
      grad.layer2.w(j, i) += d_z2[j] * t.a1[i];
      d_a1[i] += p.layer2.w(j, i) * d_z2[j];
    }
    grad.layer2.bias[j] += d_z2[j];
  }

  std::vector<double> d_z1(kHidden1);
  for (int i = 0; i < kHidden1; ++i) d_z1[i] = t.z1[i] > 0.0 ? d_a1[i] : 0.0;

  // layer 1
  double d_alpha = 0.0;
  for (int i = 0; i < kHidden1; ++i) {
    if (d_z1[i] == 0.0) continue;
    for (int k = 0; k < kInputDim; ++k) grad.layer1.w(i, k) += d_z1[i] * t.x[k];
    grad.layer1.bias[i] += d_z1[i];
    d_alpha += p.layer1.w(i, 0) * d_z1[i];
  }

  // backbone
  for (std::size_t k = 0; k < in.pooled.size(); ++k) grad.backbone.weights[k] += d_alpha * in.pooled[k];
  grad.backbone.bias[0] += d_alpha;
}

struct Example {
  PreparedInput input;
  double target = 0.0;
};

struct BatchGradient {
  double loss = 0.0;
  Parameters grads;
};

namespace detail {

inline void add_into(Parameters& total, const Parameters& part) {
  auto tb = total.blocks();
  const auto pb = part.blocks();
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    for (std::size_t i = 0; i < tb[b].values.size(); ++i) tb[b].values[i] += pb[b].values[i];
  }
}

}  // namespace detail

/// Batch MSE and its exact gradient with respect to every parameter.
///
/// With threads > 1 per-sample gradients are computed concurrently and summed
/// in sample order. Each parameter receives one product per sample, so the
/// result is bit-identical to the sequential path.
inline BatchGradient backward(const Parameters& p, std::span<const Example> batch, unsigned threads = 1) {
  if (batch.empty()) throw EmptyBatch("backward on an empty batch");
  BatchGradient out{0.0, p.zeros_like()};
  const double n = static_cast<double>(batch.size());
  std::vector<double> sq(batch.size());
  if (threads <= 1 || batch.size() < 2) {
    for (std::size_t s = 0; s < batch.size(); ++s) {
      const ForwardTrace t = forward_trace(p, batch[s].input);
      const double r = t.output - batch[s].target;
      sq[s] = r * r;
      accumulate_sample_gradient(p, batch[s].input, t, 2.0 * r / n, out.grads);
    }
  } else {
    std::vector<Parameters> per_sample(batch.size(), p.zeros_like());
    const std::size_t workers = std::min<std::size_t>(threads, batch.size());
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          for (std::size_t s = w; s < batch.size(); s += workers) {
            const ForwardTrace t = forward_trace(p, batch[s].input);
            const double r = t.output - batch[s].target;
            sq[s] = r * r;
            accumulate_sample_gradient(p, batch[s].input, t, 2.0 * r / n, per_sample[s]);
          }
        });
      }
    }
    for (const auto& g : per_sample) detail::add_into(out.grads, g);
  }
  for (double v : sq) out.loss += v;
  out.loss /= n;
  return out;
}

struct LabeledCrop {
  Image crop;
  std::string label;
  double weight_grams = 0.0;
};

inline std::vector<Example> prepare_examples(const WeightModel& m, std::span<const LabeledCrop> samples) {
  std::vector<Example> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({prepare_input(m, s.crop, s.label), s.weight_grams});
  return out;
}

inline BatchGradient backward(const WeightModel& m, std::span<const LabeledCrop> batch) {
  if (batch.empty()) throw EmptyBatch("backward on an empty batch");
  const auto examples = prepare_examples(m, batch);
  return backward(m.params, examples);
}

inline double batch_loss(const Parameters& p, std::span<const Example> batch) {
  double sum = 0.0;
  for (const auto& ex : batch) {
    const double r = ex.target - forward_prepared(p, ex.input);
    sum += r * r;
  }
  return sum / static_cast<double>(batch.size());
}

}  // namespace foodweight::nnet
