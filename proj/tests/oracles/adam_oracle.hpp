#pragma once

// Textbook bias-corrected Adam in long double on a flat vector.

#include <cmath>
#include <vector>

namespace oracle {

struct ReferenceAdam {
  long double lr, b1 = 0.9L, b2 = 0.999L, eps = 1e-8L;
  std::vector<long double> m, v;
  long double b1_pow = 1.0L, b2_pow = 1.0L;

  ReferenceAdam(long double learning_rate, std::size_t n) : lr(learning_rate), m(n, 0.0L), v(n, 0.0L) {}

  void step(std::vector<long double>& theta, const std::vector<long double>& g) {
    b1_pow *= b1;
    b2_pow *= b2;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = b1 * m[i] + (1 - b1) * g[i];
      v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
      const long double mh = m[i] / (1 - b1_pow);
      const long double vh = v[i] / (1 - b2_pow);
      theta[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
};

}  // namespace oracle
