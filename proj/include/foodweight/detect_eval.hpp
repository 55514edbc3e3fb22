#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "foodweight/error.hpp"
#include "foodweight/geometry.hpp"

namespace foodweight {

struct Detection {
  std::string image_id;
  BoundingBox box;
  std::string label;
  double score = 1.0;
};

/// Annotated box. Weight and tags are carried for the regression side and are
/// ignored by detection metrics.
struct GroundTruth {
  std::string image_id;
  BoundingBox box;
  std::string label;
  double weight_grams = 0.0;
  std::string container;
  std::string orientation;
};

enum class Interpolation { kAllPoint, kElevenPoint };

inline std::string to_string(Interpolation i) { return i == Interpolation::kAllPoint ? "all-point" : "11-point"; }

/// IoU thresholds 0.50, 0.55, ..., 0.95.
inline std::vector<double> coco_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

struct MatchResult {
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (detection index, ground-truth index)
  std::vector<std::size_t> false_positives;                  // detection indices
  std::vector<std::size_t> false_negatives;                  // ground-truth indices
  std::vector<bool> is_true_positive;                        // per detection
};

/// Detection indices by descending score; equal scores keep input order.
inline std::vector<std::size_t> score_order(const std::vector<Detection>& dets) {
  std::vector<std::size_t> idx(dets.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  return idx;
}

/// Greedy matching: detections in descending score order each claim the
/// still-unmatched ground truth of the same image and class with the highest
/// IoU >= threshold. Everything left over is a false positive or negative.
inline MatchResult match_detections(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                                    double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) throw InvalidArgument("IoU threshold must be in (0,1]");
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> gt_groups;
  for (std::size_t g = 0; g < gts.size(); ++g) gt_groups[{gts[g].image_id, gts[g].label}].push_back(g);

  MatchResult r;
  r.is_true_positive.assign(dets.size(), false);
  std::vector<bool> gt_taken(gts.size(), false);
  for (std::size_t d : score_order(dets)) {
    const auto it = gt_groups.find({dets[d].image_id, dets[d].label});
    std::size_t best = gts.size();
    double best_iou = -1.0;
    if (it != gt_groups.end()) {
      for (std::size_t g : it->second) {
        if (gt_taken[g]) continue;
        const double v = iou(dets[d].box, gts[g].box);
        if (v >= iou_threshold && v > best_iou) {
          best_iou = v;
          best = g;
        }
      }
    }
    if (best < gts.size()) {
      gt_taken[best] = true;
      r.is_true_positive[d] = true;
      r.matches.emplace_back(d, best);
    } else {
      r.false_positives.push_back(d);
    }
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!gt_taken[g]) r.false_negatives.push_back(g);
  }
  return r;
}

namespace detail {

/// AP from score-ranked TP flags for one class.
inline double ap_from_ranked(const std::vector<bool>& ranked_tp, std::size_t n_gt, Interpolation interp) {
  if (n_gt == 0) return 0.0;
  const std::size_t n = ranked_tp.size();
  std::vector<double> precision(n), recall(n);
  std::size_t tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (ranked_tp[k]) ++tp;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / static_cast<double>(n_gt);
  }
  // precision envelope: best precision at this recall or beyond
  for (std::size_t k = n; k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);

  if (interp == Interpolation::kElevenPoint) {
    double sum = 0.0;
    for (int i = 0; i <= 10; ++i) {
      const double r = i / 10.0;
      const auto it = std::find_if(recall.begin(), recall.end(), [&](double v) { return v >= r; });
      if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
    }
    return sum / 11.0;
  }
  // Recall grows by exactly 1/n_gt at each true positive and is flat
  // otherwise, so the area under the envelope is a sum over TP ranks.
  double ap = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (ranked_tp[k]) ap += precision[k];
  }
  return ap / static_cast<double>(n_gt);
}

}  // namespace detail

/// Per-class AP at one threshold for every class that has ground truth.
inline std::map<std::string, double> per_class_average_precision(const std::vector<Detection>& dets,
                                                                 const std::vector<GroundTruth>& gts,
                                                                 double iou_threshold,
                                                                 Interpolation interp = Interpolation::kAllPoint) {
  const MatchResult m = match_detections(dets, gts, iou_threshold);
  std::map<std::string, std::size_t> n_gt;
  for (const auto& g : gts) ++n_gt[g.label];
  std::map<std::string, std::vector<bool>> ranked;
  for (std::size_t d : score_order(dets)) ranked[dets[d].label].push_back(m.is_true_positive[d]);
  std::map<std::string, double> out;
  for (const auto& [label, count] : n_gt) out[label] = detail::ap_from_ranked(ranked[label], count, interp);
  return out;
}

/// AP of one class; 0 for a class without ground truth (such classes are left
/// out of the mAP mean rather than scored).
inline double average_precision(const std::string& label, const std::vector<Detection>& dets,
                                const std::vector<GroundTruth>& gts, double iou_threshold,
                                Interpolation interp = Interpolation::kAllPoint) {
  const auto all = per_class_average_precision(dets, gts, iou_threshold, interp);
  const auto it = all.find(label);
  return it == all.end() ? 0.0 : it->second;
}

/// Per-class AP averaged over `thresholds`.
inline std::map<std::string, double> per_class_ap_over_thresholds(const std::vector<Detection>& dets,
                                                                  const std::vector<GroundTruth>& gts,
                                                                  const std::vector<double>& thresholds,
                                                                  Interpolation interp) {
  if (thresholds.empty()) throw InvalidArgument("at least one IoU threshold is required");
  std::map<std::string, double> sum;
  for (double t : thresholds) {
    for (const auto& [label, ap] : per_class_average_precision(dets, gts, t, interp)) sum[label] += ap;
  }
  for (auto& [label, v] : sum) v /= static_cast<double>(thresholds.size());
  return sum;
}

/// Mean over classes of per-class AP, itself averaged over the thresholds.
inline double mean_average_precision(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                                     const std::vector<double>& thresholds,
                                     Interpolation interp = Interpolation::kAllPoint) {
  if (gts.empty()) throw NoGroundTruth("no ground-truth boxes in any class");
  const auto per_class = per_class_ap_over_thresholds(dets, gts, thresholds, interp);
  double sum = 0.0;
  for (const auto& [label, ap] : per_class) sum += ap;
  return sum / static_cast<double>(per_class.size());
}

/// Per image, the detection with the highest score (first in input order on
/// ties) and the ground truth it overlaps most (any class).
struct TopDetection {
  std::size_t detection = 0;
  std::optional<std::size_t> best_gt;
  double iou = 0.0;
};

inline std::vector<TopDetection> top_detections(const std::vector<Detection>& dets,
                                                const std::vector<GroundTruth>& gts) {
  std::map<std::string, std::size_t> top;
  for (std::size_t d = 0; d < dets.size(); ++d) {
    const auto it = top.find(dets[d].image_id);
    if (it == top.end()) {
      top.emplace(dets[d].image_id, d);
    } else if (dets[d].score > dets[it->second].score) {
      it->second = d;
    }
  }
  std::map<std::string, std::vector<std::size_t>> gts_by_image;
  for (std::size_t g = 0; g < gts.size(); ++g) gts_by_image[gts[g].image_id].push_back(g);

  std::vector<TopDetection> out;
  for (const auto& [image, d] : top) {
    TopDetection t{d, std::nullopt, 0.0};
    if (const auto it = gts_by_image.find(image); it != gts_by_image.end()) {
      for (std::size_t g : it->second) {
        const double v = iou(dets[d].box, gts[g].box);
        if (!t.best_gt || v > t.iou) {
          t.best_gt = g;
          t.iou = v;
        }
      }
    }
    out.push_back(t);
  }
  return out;
}

/// Share of per-image top detections whose label matches the ground truth they
/// best overlap, counting only overlaps with IoU >= iou_threshold.
inline double classification_accuracy(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                                      double iou_threshold = 0.5) {
  if (dets.empty()) throw NoPredictions("classification accuracy needs at least one detection");
  const auto tops = top_detections(dets, gts);
  std::size_t correct = 0;
  for (const auto& t : tops) {
    if (t.best_gt && t.iou >= iou_threshold && gts[*t.best_gt].label == dets[t.detection].label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(tops.size());
}

/// Mean IoU between each image's top detection and its best-overlapping ground
/// truth; an image without ground truth contributes 0.
inline double average_iou(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts) {
  if (dets.empty()) throw NoPredictions("average IoU needs at least one detection");
  const auto tops = top_detections(dets, gts);
  double sum = 0.0;
  for (const auto& t : tops) sum += t.iou;
  return sum / static_cast<double>(tops.size());
}

struct DetectionEvalConfig {
  std::vector<double> thresholds = coco_thresholds();
  Interpolation interpolation = Interpolation::kAllPoint;
  double accuracy_iou = 0.5;
};

struct DetectionReport {
  double map = 0.0;
  double map_50 = 0.0;
  double map_75 = 0.0;
  double classification_accuracy = 0.0;
  double average_iou = 0.0;
  std::map<std::string, double> per_class_ap;
  std::vector<double> thresholds;
  Interpolation interpolation = Interpolation::kAllPoint;
};

inline DetectionReport evaluate_detections(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                                           const DetectionEvalConfig& cfg = {}) {
  DetectionReport r;
  r.thresholds = cfg.thresholds;
  r.interpolation = cfg.interpolation;
  r.per_class_ap = per_class_ap_over_thresholds(dets, gts, cfg.thresholds, cfg.interpolation);
  r.map = mean_average_precision(dets, gts, cfg.thresholds, cfg.interpolation);
  r.map_50 = mean_average_precision(dets, gts, {0.5}, cfg.interpolation);
  r.map_75 = mean_average_precision(dets, gts, {0.75}, cfg.interpolation);
  r.classification_accuracy = classification_accuracy(dets, gts, cfg.accuracy_iou);
  r.average_iou = average_iou(dets, gts);
  return r;
}

inline nlohmann::json to_json(const DetectionReport& r) {
  return {{"map", r.map},
          {"map_50", r.map_50},
          {"map_75", r.map_75},
          {"classification_accuracy", r.classification_accuracy},
          {"average_iou", r.average_iou},
          {"per_class_ap", r.per_class_ap},
          {"map_iou_thresholds", r.thresholds},
          {"interpolation", to_string(r.interpolation)}};
}

/// Fixed-width table in the column order Method | Dataset | mAP | mAP@0.5 |
/// mAP@0.75 | Classification Accuracy | Average IoU.
inline std::string format_detection_table(const std::vector<std::pair<std::string, DetectionReport>>& rows,
                                          const std::string& method) {
  std::ostringstream os;
  os << std::left << std::setw(14) << "Method" << std::setw(10) << "Dataset" << std::right << std::setw(9)
     << "mAP" << std::setw(10) << "mAP@0.5" << std::setw(10) << "mAP@0.75" << std::setw(16)
     << "Class. Acc." << std::setw(13) << "Average IoU" << '\n';
  os << std::fixed << std::setprecision(4);
  for (const auto& [dataset, r] : rows) {
    os << std::left << std::setw(14) << method << std::setw(10) << dataset << std::right << std::setw(9) << r.map
       << std::setw(10) << r.map_50 << std::setw(10) << r.map_75 << std::setw(16) << r.classification_accuracy
       << std::setw(13) << r.average_iou << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// JSON files: detection dump and ground truth.

namespace detail {

inline std::string image_id_from_json(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ParseError("image_id must be a string or integer");
}

inline nlohmann::json read_json_array(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw ParseError(path.string() + ": expected a JSON array");
  return j;
}

inline BoundingBox box_from_json(const nlohmann::json& e) {
  return BoundingBox(e.at("x_min").get<double>(), e.at("y_min").get<double>(), e.at("x_max").get<double>(),
                     e.at("y_max").get<double>());
}

}  // namespace detail

inline Detection detection_from_json(const nlohmann::json& e) {
  Detection d{detail::image_id_from_json(e.at("image_id")), detail::box_from_json(e), e.at("label").get<std::string>(),
              e.at("score").get<double>()};
  if (!(d.score >= 0.0 && d.score <= 1.0)) throw ParseError("score must lie in [0,1]");
  return d;
}

inline GroundTruth ground_truth_from_json(const nlohmann::json& e) {
  GroundTruth g{detail::image_id_from_json(e.at("image_id")), detail::box_from_json(e),
                e.at("label").get<std::string>(), 0.0, {}, {}};
  if (e.contains("weight_grams")) g.weight_grams = e.at("weight_grams").get<double>();
  if (e.contains("container")) g.container = e.at("container").get<std::string>();
  if (e.contains("orientation")) g.orientation = e.at("orientation").get<std::string>();
  return g;
}

template <typename T, typename Parse>
std::vector<T> load_json_entries(const std::filesystem::path& path, Parse parse) {
  const nlohmann::json j = detail::read_json_array(path);
  std::vector<T> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    try {
      out.push_back(parse(j[i]));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + " entry " + std::to_string(i) + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError(path.string() + " entry " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<Detection> load_detections(const std::filesystem::path& path) {
  return load_json_entries<Detection>(path, detection_from_json);
}

inline std::vector<GroundTruth> load_ground_truth(const std::filesystem::path& path) {
  return load_json_entries<GroundTruth>(path, ground_truth_from_json);
}

inline nlohmann::json to_json(const Detection& d) {
  return {{"image_id", d.image_id}, {"x_min", d.box.x_min()}, {"y_min", d.box.y_min()}, {"x_max", d.box.x_max()},
          {"y_max", d.box.y_max()}, {"label", d.label},       {"score", d.score}};
}

inline nlohmann::json to_json(const GroundTruth& g) {
  return {{"image_id", g.image_id},         {"x_min", g.box.x_min()},   {"y_min", g.box.y_min()},
          {"x_max", g.box.x_max()},         {"y_max", g.box.y_max()},   {"label", g.label},
          {"weight_grams", g.weight_grams}, {"container", g.container}, {"orientation", g.orientation}};
}

}  // namespace foodweight
