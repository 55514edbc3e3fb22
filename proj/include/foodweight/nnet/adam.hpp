#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "foodweight/error.hpp"
#include "foodweight/nnet/model.hpp"

namespace foodweight::nnet {

/// Bias-corrected Adam moments for every parameter block.
struct AdamState {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::array<std::vector<double>, kNumBlocks> m;
  std::array<std::vector<double>, kNumBlocks> v;

  static AdamState for_parameters(const Parameters& p, double lr) {
    AdamState s;
    s.learning_rate = lr;
    const auto blocks = p.blocks();
    for (std::size_t b = 0; b < kNumBlocks; ++b) {
      s.m[b].assign(blocks[b].values.size(), 0.0);
      s.v[b].assign(blocks[b].values.size(), 0.0);
    }
    return s;
  }
};

inline void adam_step(Parameters& params, const Parameters& grads, AdamState& state) {
  auto pb = params.blocks();
  const auto gb = grads.blocks();
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    if (pb[b].values.size() != gb[b].values.size() || state.m[b].size() != pb[b].values.size()) {
      throw DimensionMismatch(std::string("adam: shape mismatch in ") + std::string(pb[b].name));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    auto& m = state.m[b];
    auto& v = state.v[b];
    auto theta = pb[b].values;
    const auto g = gb[b].values;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      theta[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace foodweight::nnet
