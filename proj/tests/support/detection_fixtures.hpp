#pragma once

// Small detection scenarios (each at most 20 images) shared by the unit and
// acceptance suites.

#include <string>
#include <vector>

#include "foodweight/dataset.hpp"
#include "foodweight/detect_eval.hpp"
#include "foodweight/random.hpp"

namespace testing_support {

struct DetectionFixture {
  std::string name;
  std::vector<foodweight::Detection> dets;
  std::vector<foodweight::GroundTruth> gts;
};

inline foodweight::GroundTruth gt(const std::string& img, double x0, double y0, double x1, double y1,
                                  const std::string& label) {
  return {img, foodweight::BoundingBox(x0, y0, x1, y1), label, 0.0, {}, {}};
}

inline foodweight::Detection det(const std::string& img, double x0, double y0, double x1, double y1,
                                 const std::string& label, double score) {
  return {img, foodweight::BoundingBox(x0, y0, x1, y1), label, score};
}

/// One class, three ground truths over two images, four ranked detections
/// (TP, FP, TP, TP at IoU 0.5; the last is only ~0.909 IoU).
inline DetectionFixture three_gt_four_det() {
  return {"three_gt_four_det",
          {det("A", 0, 0, 10, 10, "apple", 0.9), det("A", 50, 50, 60, 60, "apple", 0.8),
           det("B", 0, 0, 10, 10, "apple", 0.7), det("A", 20, 20, 30, 31, "apple", 0.6)},
          {gt("A", 0, 0, 10, 10, "apple"), gt("A", 20, 20, 30, 30, "apple"), gt("B", 0, 0, 10, 10, "apple")}};
}

/// Three classes, duplicate detections, a mislabelled box and a class that
/// only appears among the detections.
inline DetectionFixture confusion_and_duplicates() {
  return {"confusion_and_duplicates",
          {det("i1", 10, 10, 50, 50, "rice", 0.95), det("i1", 12, 11, 50, 52, "rice", 0.90),
           det("i2", 0, 0, 40, 30, "corn", 0.85), det("i2", 60, 60, 90, 95, "toast", 0.80),
           det("i3", 5, 5, 45, 45, "rice", 0.40), det("i3", 50, 0, 80, 40, "ghost", 0.70),
           det("i4", 20, 20, 70, 60, "toast", 0.65), det("i4", 0, 0, 15, 15, "corn", 0.30)},
          {gt("i1", 10, 10, 50, 50, "rice"), gt("i2", 0, 0, 40, 30, "toast"), gt("i2", 60, 60, 90, 90, "toast"),
           gt("i3", 5, 5, 40, 45, "corn"), gt("i4", 22, 18, 70, 62, "toast"), gt("i4", 0, 0, 16, 14, "corn")}};
}

/// Equal scores, so results hinge on stable input order.
inline DetectionFixture tied_scores() {
  return {"tied_scores",
          {det("t1", 0, 0, 10, 10, "pear", 0.5), det("t1", 0, 0, 10, 10, "pear", 0.5),
           det("t2", 30, 30, 40, 40, "pear", 0.5), det("t2", 0, 0, 10, 10, "pear", 0.5),
           det("t3", 1, 1, 11, 11, "plum", 0.5)},
          {gt("t1", 0, 0, 10, 10, "pear"), gt("t2", 0, 0, 10, 10, "pear"), gt("t3", 0, 0, 10, 10, "plum"),
           gt("t3", 20, 20, 30, 30, "plum")}};
}

/// Boxes whose IoU with the ground truth straddles the COCO thresholds, plus
/// an image that has detections but no ground truth.
inline DetectionFixture threshold_ladder() {
  DetectionFixture f{"threshold_ladder", {}, {}};
  for (int i = 0; i < 8; ++i) {
    const std::string img = "L" + std::to_string(i);
    f.gts.push_back(gt(img, 0, 0, 100, 100, i % 2 ? "bun" : "guava"));
    const double shift = 3.0 + 6.0 * i;  // IoU falls from ~0.94 to ~0.39
    f.dets.push_back(det(img, shift, 0, 100 + shift, 100, i % 2 ? "bun" : "guava", 1.0 - 0.1 * i));
  }
  f.dets.push_back(det("orphan", 0, 0, 10, 10, "bun", 0.99));
  return f;
}

/// 3 classes x `per_class` images from the seeded oracle detector with
/// jitter and drops, plus seeded spurious boxes.
inline DetectionFixture seeded_desk(std::uint64_t seed, int per_class = 10) {
  DetectionFixture f{"seeded_desk_" + std::to_string(seed), {}, {}};
  foodweight::Rng rng(seed);
  const char* classes[] = {"orange", "papaya", "spinach"};
  for (int c = 0; c < 3; ++c) {
    for (int k = 0; k < per_class; ++k) {
      const std::string img = "d" + std::to_string(c) + "_" + std::to_string(k);
      const int objects = 1 + static_cast<int>(rng.below(2));
      for (int o = 0; o < objects; ++o) {
        const double x = rng.uniform(0, 120), y = rng.uniform(0, 120);
        const double w = rng.uniform(15, 60), h = rng.uniform(15, 60);
        f.gts.push_back(gt(img, x, y, x + w, y + h, classes[(c + o) % 3]));
      }
    }
  }
  f.dets = foodweight::oracle_detector(f.gts, 0.12, 0.2, seed + 100);
  for (int s = 0; s < 6; ++s) {
    const std::string img = "d" + std::to_string(rng.below(3)) + "_" + std::to_string(rng.below(per_class));
    const double x = rng.uniform(0, 150), y = rng.uniform(0, 150);
    f.dets.push_back(det(img, x, y, x + 20, y + 20, classes[rng.below(3)], rng.uniform(0.05, 0.95)));
  }
  return f;
}

inline std::vector<DetectionFixture> hand_fixtures() {
  return {three_gt_four_det(), confusion_and_duplicates(), tied_scores(), threshold_ladder(), seeded_desk(11),
          seeded_desk(12)};
}

/// The hand fixtures plus desk scenes of at most 18 images each.
inline std::vector<DetectionFixture> small_fixtures() {
  return {three_gt_four_det(), confusion_and_duplicates(), tied_scores(), threshold_ladder(), seeded_desk(21, 6),
          seeded_desk(22, 6), seeded_desk(23, 5)};
}

}  // namespace testing_support
