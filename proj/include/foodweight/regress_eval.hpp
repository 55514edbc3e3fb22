#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "foodweight/error.hpp"

namespace foodweight {

namespace detail {

inline void check_pair(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw DimensionMismatch("actual and predicted lengths differ");
  if (actual.empty()) throw EmptyInput("metric over zero samples");
}

}  // namespace detail

/// Mean squared error, grams^2.
inline double mse(std::span<const double> actual, std::span<const double> predicted) {
  detail::check_pair(actual, predicted);
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double r = actual[i] - predicted[i];
    sum += r * r;
  }
  return sum / static_cast<double>(actual.size());
}

inline double rmse(std::span<const double> actual, std::span<const double> predicted) {
  return std::sqrt(mse(actual, predicted));
}

inline double mae(std::span<const double> actual, std::span<const double> predicted) {
  detail::check_pair(actual, predicted);
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) sum += std::abs(actual[i] - predicted[i]);
  return sum / static_cast<double>(actual.size());
}

/// Mean absolute percentage error, in percent.
inline double mape(std::span<const double> actual, std::span<const double> predicted) {
  detail::check_pair(actual, predicted);
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0) throw ZeroActual("actual value at index " + std::to_string(i) + " is zero");
    sum += std::abs((actual[i] - predicted[i]) / actual[i]);
  }
  return sum / static_cast<double>(actual.size()) * 100.0;
}

/// Coefficient of determination 1 - SS_res / SS_tot; negative for models worse
/// than predicting the mean.
inline double r_squared(std::span<const double> actual, std::span<const double> predicted) {
  detail::check_pair(actual, predicted);
  if (actual.size() < 2) throw ConstantActuals("r_squared needs at least two samples");
  double mean = 0.0;
  for (double a : actual) mean += a;
  mean /= static_cast<double>(actual.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
  }
  if (ss_tot == 0.0) throw ConstantActuals("all actual values are equal");
  return 1.0 - ss_res / ss_tot;
}

struct RegressionReport {
  double mse = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  double mape = 0.0;                    // percent
  std::optional<double> r_squared;      // undefined for constant actuals
};

inline RegressionReport regression_report(std::span<const double> actual, std::span<const double> predicted) {
  RegressionReport r;
  r.mse = mse(actual, predicted);
  r.rmse = std::sqrt(r.mse);
  r.mae = mae(actual, predicted);
  r.mape = mape(actual, predicted);
  try {
    r.r_squared = r_squared(actual, predicted);
  } catch (const ConstantActuals&) {
    r.r_squared.reset();
  }
  return r;
}

inline nlohmann::json to_json(const RegressionReport& r) {
  nlohmann::json j = {{"mse", r.mse}, {"rmse", r.rmse}, {"mae", r.mae}, {"mape_percent", r.mape}};
  j["r_squared"] = r.r_squared ? nlohmann::json(*r.r_squared) : nlohmann::json(nullptr);
  return j;
}

/// Backbone | Dataset | MSE | RMSE | MAE | MAPE | R-Squared.
inline std::string format_regression_table(const std::vector<std::pair<std::string, RegressionReport>>& rows,
                                           const std::string& backbone) {
  const int bw = static_cast<int>(std::max<std::size_t>(10, backbone.size() + 2));
  std::ostringstream os;
  os << std::left << std::setw(bw) << "Backbone" << std::setw(10) << "Dataset" << std::right << std::setw(12)
     << "MSE" << std::setw(10) << "RMSE" << std::setw(10) << "MAE" << std::setw(11) << "MAPE" << std::setw(11)
     << "R-Squared" << '\n';
  os << std::fixed << std::setprecision(4);
  for (const auto& [dataset, r] : rows) {
    std::ostringstream mape;
    mape << std::fixed << std::setprecision(4) << r.mape << '%';
    os << std::left << std::setw(bw) << backbone << std::setw(10) << dataset << std::right << std::setw(12) << r.mse
       << std::setw(10) << r.rmse << std::setw(10) << r.mae << std::setw(11) << mape.str() << std::setw(11);
    if (r.r_squared) {
      os << *r.r_squared;
    } else {
      os << "n/a";
    }
    os << '\n';
  }
  return os.str();
}

/// One evaluated prediction for the per-class breakdown.
struct WeightSample {
  std::string label;
  double actual = 0.0;
  double predicted = 0.0;
  double confidence = 1.0;
};

struct ClassRow {
  std::string label;
  std::size_t count = 0;
  double avg_confidence = 0.0;
  double avg_actual = 0.0;
  double avg_predicted = 0.0;
  double avg_error = 0.0;           // actual - predicted
  double avg_absolute_error = 0.0;
};

struct PerClassReport {
  std::vector<ClassRow> classes;  // sorted by label
  ClassRow total;                 // sample-weighted over every sample
};

namespace detail {

inline ClassRow summarize(const std::string& label, std::span<const WeightSample* const> samples) {
  ClassRow row;
  row.label = label;
  row.count = samples.size();
  for (const WeightSample* s : samples) {
    row.avg_confidence += s->confidence;
    row.avg_actual += s->actual;
    row.avg_predicted += s->predicted;
    row.avg_error += s->actual - s->predicted;
    row.avg_absolute_error += std::abs(s->actual - s->predicted);
  }
  const double n = static_cast<double>(samples.size());
  row.avg_confidence /= n;
  row.avg_actual /= n;
  row.avg_predicted /= n;
  row.avg_error /= n;
  row.avg_absolute_error /= n;
  return row;
}

}  // namespace detail

/// Per-class means plus a TOTAL row averaged over samples, not over classes.
/// Signed error is actual - predicted, so over-prediction is negative.
inline PerClassReport per_class_report(std::span<const WeightSample> samples) {
  if (samples.empty()) throw EmptyDataset("per-class report over zero samples");
  std::map<std::string, std::vector<const WeightSample*>> by_class;
  std::vector<const WeightSample*> all;
  for (const auto& s : samples) {
    by_class[s.label].push_back(&s);
    all.push_back(&s);
  }
  PerClassReport r;
  for (const auto& [label, group] : by_class) r.classes.push_back(detail::summarize(label, group));
  r.total = detail::summarize("TOTAL", all);
  return r;
}

inline nlohmann::json to_json(const ClassRow& row) {
  return {{"class", row.label},
          {"count", row.count},
          {"average_confidence", row.avg_confidence},
          {"average_actual_weight", row.avg_actual},
          {"average_predicted_weight", row.avg_predicted},
          {"average_weight_error", row.avg_error},
          {"average_absolute_weight_error", row.avg_absolute_error}};
}

inline nlohmann::json to_json(const PerClassReport& r) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& row : r.classes) classes.push_back(to_json(row));
  return {{"classes", std::move(classes)}, {"total", to_json(r.total)}};
}

inline std::string format_per_class_table(const PerClassReport& r) {
  std::size_t name_width = 6;
  for (const auto& row : r.classes) name_width = std::max(name_width, row.label.size() + 2);
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(name_width)) << "class" << std::right << std::setw(12) << "Avg Conf"
     << std::setw(12) << "Avg Actual" << std::setw(12) << "Avg Pred" << std::setw(12) << "Avg Error" << std::setw(12)
     << "Avg |Error|" << '\n';
  os << std::fixed << std::setprecision(4);
  auto line = [&](const ClassRow& row) {
    os << std::left << std::setw(static_cast<int>(name_width)) << row.label << std::right << std::setw(12)
       << row.avg_confidence << std::setw(12) << row.avg_actual << std::setw(12) << row.avg_predicted << std::setw(12)
       << row.avg_error << std::setw(12) << row.avg_absolute_error << '\n';
  };
  for (const auto& row : r.classes) line(row);
  line(r.total);
  return os.str();
}

}  // namespace foodweight
