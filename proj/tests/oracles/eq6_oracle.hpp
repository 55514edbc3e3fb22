#pragma once

// Closed-form evaluation of the regression head written as one nested sum in
// long double, reading the raw parameter arrays directly:
//   Y = W3 . max(0, W2 . max(0, W1 . X + b1) + b2) + b3,  X = [alpha, FT, A, AR, API]
// with alpha = w_bb . pooled + b_bb.

#include <algorithm>
#include <array>
#include <vector>

namespace oracle {

struct RawHead {
  const std::vector<double>& w_bb;
  double b_bb;
  const std::vector<double>& w1;  // 64 x 5, row-major
  const std::vector<double>& b1;
  const std::vector<double>& w2;  // 32 x 64
  const std::vector<double>& b2;
  const std::vector<double>& w3;  // 1 x 32
  double b3;
};

/// Views any parameter set shaped like the library's (field names only).
template <typename P>
RawHead raw_head(const P& p) {
  return {p.backbone.weights, p.backbone.bias[0], p.layer1.weights, p.layer1.bias,
          p.layer2.weights,   p.layer2.bias,      p.layer3.weights, p.layer3.bias[0]};
}

inline long double eq6(const RawHead& p, const std::vector<double>& pooled, const std::array<double, 4>& engineered) {
  long double alpha = p.b_bb;
  for (std::size_t i = 0; i < pooled.size(); ++i) alpha += static_cast<long double>(p.w_bb[i]) * pooled[i];
  const long double x[5] = {alpha, engineered[0], engineered[1], engineered[2], engineered[3]};
  long double y = p.b3;
  for (int k = 0; k < 32; ++k) {
    long double z2 = p.b2[k];
    for (int j = 0; j < 64; ++j) {
      long double z1 = p.b1[j];
      for (int i = 0; i < 5; ++i) z1 += static_cast<long double>(p.w1[j * 5 + i]) * x[i];
      z2 += static_cast<long double>(p.w2[k * 64 + j]) * std::max(0.0L, z1);
    }
    y += static_cast<long double>(p.w3[k]) * std::max(0.0L, z2);
  }
  return y;
}

}  // namespace oracle
