#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "foodweight/error.hpp"
#include "foodweight/nnet/model.hpp"

namespace foodweight::nnet {

struct BlockCheck {
  std::string name;
  double max_relative_error = 0.0;
  bool flagged = false;
};

struct GradientCheckReport {
  std::vector<BlockCheck> blocks;

  double max_relative_error() const {
    double m = 0.0;
    for (const auto& b : blocks) m = std::max(m, b.max_relative_error);
    return m;
  }
  bool passed() const {
    return std::none_of(blocks.begin(), blocks.end(), [](const BlockCheck& b) { return b.flagged; });
  }
};

/// |a - n| / max(|a|, |n|); entries where both sides are below `floor` in
/// magnitude are compared on the floor instead, so that gradients that are
/// zero up to roundoff do not register as 100% error.
inline double relative_error(double analytic, double numeric, double floor = 1e-10) {
  const double diff = std::abs(analytic - numeric);
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return diff / scale;
}

namespace detail {

inline long double dense_extended(const DenseLayer& l, int row, const std::vector<long double>& in) {
  long double acc = l.bias[static_cast<std::size_t>(row)];
  for (int c = 0; c < l.in_dim; ++c) acc += static_cast<long double>(l.w(row, c)) * in[static_cast<std::size_t>(c)];
  return acc;
}

/// Batch MSE evaluated in long double. Finite differences of a double loss
/// lose about eps*L/h absolutely to cancellation, which swamps gradient
/// entries near 1e-8; the wider type pushes that floor far below them.
inline long double extended_batch_loss(const Parameters& p, std::span<const Example> batch) {
  long double sum = 0.0L;
  for (const auto& ex : batch) {
    long double alpha = p.backbone.bias[0];
    for (std::size_t i = 0; i < ex.input.pooled.size(); ++i) {
      alpha += static_cast<long double>(p.backbone.weights[i]) * ex.input.pooled[i];
    }
    std::vector<long double> x{alpha, ex.input.engineered[0], ex.input.engineered[1], ex.input.engineered[2],
                               ex.input.engineered[3]};
    std::vector<long double> a1(static_cast<std::size_t>(p.layer1.out_dim));
    for (int r = 0; r < p.layer1.out_dim; ++r) a1[r] = std::max(0.0L, dense_extended(p.layer1, r, x));
    std::vector<long double> a2(static_cast<std::size_t>(p.layer2.out_dim));
    for (int r = 0; r < p.layer2.out_dim; ++r) a2[r] = std::max(0.0L, dense_extended(p.layer2, r, a1));
    const long double res = ex.target - dense_extended(p.layer3, 0, a2);
    sum += res * res;
  }
  return sum / static_cast<long double>(batch.size());
}

}  // namespace detail

/// Compares `analytic` against central differences of the batch loss,
/// parameter by parameter, and flags every block whose worst entry exceeds tol.
/// The step actually taken, (theta+h) - (theta-h) as represented, is the
/// divisor.
inline GradientCheckReport compare_gradients(const Parameters& params, std::span<const Example> batch,
                                             const Parameters& analytic, double h, double tol) {
  if (!(h > 0.0 && h <= 1e-3)) throw InvalidArgument("finite-difference step must be in (0, 1e-3]");
  if (batch.empty()) throw EmptyBatch("gradient check on an empty batch");
  Parameters probe = params;
  auto pb = probe.blocks();
  const auto ab = analytic.blocks();
  GradientCheckReport report;
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    BlockCheck check{std::string(pb[b].name)};
    auto values = pb[b].values;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      const double hi = saved + h;
      const double lo = saved - h;
      values[i] = hi;
      const long double up = detail::extended_batch_loss(probe, batch);
      values[i] = lo;
      const long double down = detail::extended_batch_loss(probe, batch);
      values[i] = saved;
      const auto numeric = static_cast<double>((up - down) / (static_cast<long double>(hi) - lo));
      check.max_relative_error = std::max(check.max_relative_error, relative_error(ab[b].values[i], numeric));
    }
    check.flagged = check.max_relative_error > tol;
    report.blocks.push_back(std::move(check));
  }
  return report;
}

inline GradientCheckReport gradient_check(const Parameters& params, std::span<const Example> batch, double h,
                                          double tol) {
  return compare_gradients(params, batch, backward(params, batch).grads, h, tol);
}

}  // namespace foodweight::nnet
