#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "foodweight/error.hpp"
#include "foodweight/imaging.hpp"
#include "foodweight/random.hpp"

namespace foodweight::nnet {

/// Fully connected layer z = W a + b, with W stored row-major (out x in).
struct DenseLayer {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  DenseLayer() = default;
  DenseLayer(int in, int out)
      : in_dim(in),
        out_dim(out),
        weights(static_cast<std::size_t>(in) * out, 0.0),
        bias(static_cast<std::size_t>(out), 0.0) {}

  double& w(int row, int col) { return weights[static_cast<std::size_t>(row) * in_dim + col]; }
  double w(int row, int col) const { return weights[static_cast<std::size_t>(row) * in_dim + col]; }

  /// Uniform in [-sqrt(1/in), +sqrt(1/in)] for weights and biases.
  void init_uniform(Rng& rng) {
    const double bound = std::sqrt(1.0 / in_dim);
    for (double& v : weights) v = rng.uniform(-bound, bound);
    for (double& v : bias) v = rng.uniform(-bound, bound);
  }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

inline std::vector<double> dense_forward(const DenseLayer& layer, std::span<const double> input) {
  if (static_cast<int>(input.size()) != layer.in_dim) {
    throw DimensionMismatch("dense layer expects " + std::to_string(layer.in_dim) + " inputs, got " +
                            std::to_string(input.size()));
  }
  std::vector<double> out(layer.bias);
  for (int r = 0; r < layer.out_dim; ++r) {
    double acc = 0.0;
    const double* row = layer.weights.data() + static_cast<std::size_t>(r) * layer.in_dim;
    for (int c = 0; c < layer.in_dim; ++c) acc += row[c] * input[c];
    out[r] += acc;
  }
  return out;
}

inline std::vector<double> relu(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x = std::max(0.0, x);
  return out;
}

/// Side length of the square crop fed to the backbone.
inline constexpr int kBackboneInputSize = 224;

/// Stand-in image -> scalar feature extractor: average-pools the normalized
/// 224x224 crop onto a pool_size x pool_size grid and applies one linear unit.
struct ToyBackbone {
  int pool_size = 16;
  int channels = 3;
  std::vector<double> weights;
  std::vector<double> bias = {0.0};

  ToyBackbone() = default;
  ToyBackbone(int pool, int ch) : pool_size(pool), channels(ch), weights(input_dim(pool, ch), 0.0) {
    validate_geometry(pool, ch);
  }

  static std::size_t input_dim(int pool, int ch) { return static_cast<std::size_t>(pool) * pool * ch; }
  std::size_t input_dim() const { return input_dim(pool_size, channels); }

  static void validate_geometry(int pool, int ch) {
    if (pool <= 0 || kBackboneInputSize % pool != 0) {
      throw InvalidArgument("backbone pool size must divide " + std::to_string(kBackboneInputSize));
    }
    if (ch != 1 && ch != 3) throw InvalidArgument("backbone channels must be 1 or 3");
  }

  void init_uniform(Rng& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(input_dim()));
    for (double& v : weights) v = rng.uniform(-bound, bound);
    bias[0] = rng.uniform(-bound, bound);
  }

  friend bool operator==(const ToyBackbone&, const ToyBackbone&) = default;
};

/// Cell means of a tensor over a pool x pool grid, laid out (row, col, channel).
inline std::vector<double> average_pool(const PixelTensor& t, int pool) {
  if (t.width % pool != 0 || t.height % pool != 0) {
    throw DimensionMismatch("pool grid must divide the tensor dimensions");
  }
  const int cw = t.width / pool;
  const int ch = t.height / pool;
  const double inv = 1.0 / (static_cast<double>(cw) * ch);
  std::vector<double> out(static_cast<std::size_t>(pool) * pool * t.channels, 0.0);
  for (int gy = 0; gy < pool; ++gy) {
    for (int gx = 0; gx < pool; ++gx) {
      for (int c = 0; c < t.channels; ++c) {
        double sum = 0.0;
        for (int y = gy * ch; y < (gy + 1) * ch; ++y) {
          for (int x = gx * cw; x < (gx + 1) * cw; ++x) sum += t.at(x, y, c);
        }
        out[(static_cast<std::size_t>(gy) * pool + gx) * t.channels + c] = sum * inv;
      }
    }
  }
  return out;
}

inline double backbone_forward(const ToyBackbone& bb, std::span<const double> pooled) {
  if (pooled.size() != bb.weights.size()) throw DimensionMismatch("backbone input size mismatch");
  double acc = bb.bias[0];
  for (std::size_t i = 0; i < pooled.size(); ++i) acc += bb.weights[i] * pooled[i];
  return acc;
}

/// Crop -> backbone input: channel conversion, 224x224 resize, normalization,
/// pooling, optionally on the mirrored crop.
inline std::vector<double> backbone_input(const Image& crop, const ToyBackbone& bb, const PixelStats& norm,
                                          bool flipped = false) {
  const Image sized = resize(convert_channels(crop, bb.channels), kBackboneInputSize, kBackboneInputSize);
  PixelTensor t = normalize(sized, norm.mean, norm.std);
  if (flipped) t = flip_horizontal(t);
  return average_pool(t, bb.pool_size);
}

}  // namespace foodweight::nnet
