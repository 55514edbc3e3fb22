#pragma once

// End-to-end commands behind the command-line tool. Each takes a plain options
// struct, throws foodweight::Error on failure, writes its data files, and
// returns any human-readable table for the caller to print.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "foodweight/codec.hpp"
#include "foodweight/dataset.hpp"
#include "foodweight/detect_eval.hpp"
#include "foodweight/error.hpp"
#include "foodweight/geometry.hpp"
#include "foodweight/imaging.hpp"
#include "foodweight/nnet/checkpoint.hpp"
#include "foodweight/nnet/model.hpp"
#include "foodweight/nnet/train.hpp"
#include "foodweight/regress_eval.hpp"

namespace foodweight::pipeline {

inline constexpr const char* kBackboneName = "ToyPooledLinear";

/// Parses "a:step:b" (inclusive range) or a comma-separated list.
inline std::vector<double> parse_thresholds(const std::string& text) {
  auto num = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw InvalidArgument("bad IoU threshold list '" + text + "'");
    }
  };
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw InvalidArgument("threshold range must be start:step:stop");
    const double a = num(parts[0]), step = num(parts[1]), b = num(parts[2]);
    if (!(step > 0.0) || b < a) throw InvalidArgument("threshold range must increase");
    const int n = static_cast<int>(std::floor((b - a) / step + 1e-9));
    for (int i = 0; i <= n; ++i) out.push_back(a + step * i);
  } else {
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(num(p));
  }
  if (out.empty()) throw InvalidArgument("no IoU thresholds given");
  for (double t : out) {
    if (!(t > 0.0 && t <= 1.0 + 1e-12)) throw InvalidArgument("IoU thresholds must lie in (0,1]");
  }
  for (double& t : out) t = std::min(t, 1.0);
  return out;
}

inline SplitRatios parse_ratios(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');) {
    try {
      v.push_back(std::stod(p));
    } catch (const std::exception&) {
      throw InvalidArgument("bad ratio list '" + text + "'");
    }
  }
  if (v.size() != 3) throw InvalidArgument("ratios must be three comma-separated values");
  SplitRatios r{v[0], v[1], v[2]};
  r.validate();
  return r;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

inline void ensure_parent_dir(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
}

// ---------------------------------------------------------------------------
// gen-fixture

struct GenFixtureOptions {
  FixtureSpec spec;
  std::filesystem::path out_dir;
  double detection_jitter = 0.0;
  double detection_drop = 0.0;
};

struct GenFixtureOutputs {
  FixtureFiles files;
  std::filesystem::path detections;
};

inline GenFixtureOutputs run_gen_fixture(const GenFixtureOptions& opt) {
  GenFixtureOutputs out{generate_synthetic_fixture(opt.spec, opt.out_dir), opt.out_dir / "detections.json"};
  std::vector<GroundTruth> gts;
  for (const auto& r : out.files.records) gts.push_back(to_ground_truth(r));
  // separate stream so detections never perturb the fixture itself
  const auto dets = oracle_detector(gts, opt.detection_jitter, opt.detection_drop, opt.spec.seed + 1);
  write_json_file(out.detections, detections_to_json(dets));
  return out;
}

// ---------------------------------------------------------------------------
// split

struct SplitOptions {
  std::filesystem::path manifest;
  SplitRatios ratios;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

inline SplitAssignment run_split(const SplitOptions& opt) {
  const auto records = load_manifest(opt.manifest);
  const auto split = stratified_split(records, opt.ratios, opt.seed);
  ensure_parent_dir(opt.out);
  write_json_file(opt.out, to_json(split));
  return split;
}

// ---------------------------------------------------------------------------
// shared crop loading

/// Loads the image of a record and cuts out its (clamped) ground-truth box.
inline Image load_crop(const std::filesystem::path& image_path, const BoundingBox& box) {
  const Image img = read_image(image_path);
  return crop(img, clamp_to_image(box, img.width(), img.height()));
}

struct SplitPredictions {
  std::vector<double> actual;
  std::vector<double> predicted;
};

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::filesystem::path manifest;
  std::filesystem::path split;
  std::filesystem::path checkpoint;  // output
  std::filesystem::path out_dir;     // reports and loss history
  nnet::TrainConfig config;
};

struct TrainOutputs {
  nnet::WeightModel model;
  nnet::TrainResult history;
  std::map<Split, RegressionReport> reports;
  std::string table;
};

inline TrainOutputs run_train(const TrainOptions& opt) {
  opt.config.validate();
  const auto records = load_manifest(opt.manifest);
  const auto assignment = load_split(opt.split);
  const std::filesystem::path base = opt.manifest.parent_path();

  std::map<Split, std::vector<const SampleRecord*>> by_split;
  std::size_t unassigned = 0;
  for (const auto& r : records) {
    const auto it = assignment.find(r.image_id);
    if (it == assignment.end()) {
      ++unassigned;
      continue;
    }
    by_split[it->second].push_back(&r);
  }
  if (unassigned > 0) std::cerr << "warning: " << unassigned << " manifest records have no split entry\n";
  const auto& train_set = by_split[Split::kTrain];
  if (train_set.empty()) throw EmptyDataset("split file assigns no records to train");

  const int channels = read_image(base / train_set.front()->image_path).channels();
  TrainOutputs out;
  out.model = nnet::WeightModel::initialize(registry_from(records), channels, opt.config.pool_size, opt.config.seed);
  const nnet::CropSource source = [&](std::size_t i) {
    const SampleRecord& r = *train_set[i];
    return nnet::LabeledCrop{load_crop(base / r.image_path, r.gt_box), r.label, r.weight_grams};
  };
  out.history = nnet::train(out.model, train_set.size(), source, opt.config);

  std::vector<std::pair<std::string, RegressionReport>> rows;
  nlohmann::json split_reports = nlohmann::json::object();
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    const auto& members = by_split[s];
    if (members.empty()) continue;
    SplitPredictions p;
    for (const SampleRecord* r : members) {
      p.actual.push_back(r->weight_grams);
      p.predicted.push_back(nnet::predict(out.model, load_crop(base / r->image_path, r->gt_box), r->label));
    }
    const RegressionReport rep = regression_report(p.actual, p.predicted);
    out.reports[s] = rep;
    rows.emplace_back(to_string(s), rep);
    nlohmann::json j = to_json(rep);
    j["samples"] = members.size();
    split_reports[to_string(s)] = std::move(j);
  }

  std::ostringstream table;
  table << "# seed: " << opt.config.seed << '\n' << format_regression_table(rows, kBackboneName);
  out.table = table.str();

  ensure_parent_dir(opt.checkpoint);
  nnet::save_checkpoint(opt.checkpoint, out.model, opt.config);
  std::error_code ec;
  std::filesystem::create_directories(opt.out_dir, ec);
  if (ec) throw IoError("cannot create " + opt.out_dir.string() + ": " + ec.message());
  write_json_file(opt.out_dir / "loss_history.json",
                  {{"seed", opt.config.seed}, {"metric", "train_mse_grams2"}, {"epoch_loss", out.history.epoch_loss}});
  write_json_file(opt.out_dir / "report.json",
                  {{"seed", opt.config.seed}, {"backbone", kBackboneName}, {"splits", split_reports}});
  write_text_file(opt.out_dir / "report.txt", out.table);
  return out;
}

// ---------------------------------------------------------------------------
// predict

/// A box to weigh: from a ground-truth file or a detection dump.
struct BoxQuery {
  std::string image_id;
  BoundingBox box;
  std::string label;
  std::optional<double> score;
};

inline std::vector<BoxQuery> load_box_queries(const std::filesystem::path& path) {
  return load_json_entries<BoxQuery>(path, [](const nlohmann::json& e) {
    BoxQuery q{detail::image_id_from_json(e.at("image_id")), detail::box_from_json(e), e.at("label").get<std::string>(),
               std::nullopt};
    if (e.contains("score")) q.score = e.at("score").get<double>();
    return q;
  });
}

struct PredictOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path input;       // ground truth or detections JSON
  std::filesystem::path images_dir;  // <image_id>.png / .jpg lookup
  std::filesystem::path manifest;    // optional: image paths by id instead
  std::filesystem::path out;
};

struct Prediction {
  BoxQuery query;
  double predicted_weight_grams = 0.0;
};

inline nlohmann::json to_json(const Prediction& p) {
  nlohmann::json j = {{"image_id", p.query.image_id},
                      {"label", p.query.label},
                      {"x_min", p.query.box.x_min()},
                      {"y_min", p.query.box.y_min()},
                      {"x_max", p.query.box.x_max()},
                      {"y_max", p.query.box.y_max()},
                      {"predicted_weight_grams", p.predicted_weight_grams}};
  if (p.query.score) j["score"] = *p.query.score;
  return j;
}

inline std::vector<Prediction> run_predict(const PredictOptions& opt) {
  const nnet::Checkpoint ck = nnet::load_checkpoint(opt.checkpoint);
  const auto queries = load_box_queries(opt.input);

  std::map<std::string, std::filesystem::path> paths;
  if (!opt.manifest.empty()) {
    for (const auto& r : load_manifest(opt.manifest)) paths[r.image_id] = opt.manifest.parent_path() / r.image_path;
  }
  auto locate = [&](const std::string& id) {
    if (const auto it = paths.find(id); it != paths.end()) return it->second;
    for (const char* ext : {".png", ".jpg", ".jpeg"}) {
      const auto p = opt.images_dir / (id + ext);
      if (std::filesystem::exists(p)) return p;
    }
    throw MissingFile("no image found for image_id '" + id + "'");
  };

  std::vector<Prediction> out;
  for (const auto& q : queries) {
    if (!ck.model.registry.contains(q.label)) {
      throw UnknownClass("'" + q.label + "' (image " + q.image_id + ") is not in the checkpoint's class registry");
    }
    out.push_back({q, nnet::predict(ck.model, load_crop(locate(q.image_id), q.box), q.label)});
  }
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : out) j.push_back(to_json(p));
  ensure_parent_dir(opt.out);
  write_json_file(opt.out, j);
  return out;
}

// ---------------------------------------------------------------------------
// eval-detections

struct EvalDetectionsOptions {
  std::filesystem::path detections;
  std::filesystem::path ground_truth;
  std::vector<double> thresholds = coco_thresholds();
  Interpolation interpolation = Interpolation::kAllPoint;
  std::filesystem::path out;  // JSON report; empty to skip
};

struct EvalDetectionsOutputs {
  DetectionReport report;
  std::vector<std::string> orphan_images;  // present in only one of the files
  std::string table;
};

/// Restricts both sides to the image ids they share, returning the rest.
inline std::vector<std::string> intersect_images(std::vector<Detection>& dets, std::vector<GroundTruth>& gts) {
  std::set<std::string> det_ids, gt_ids;
  for (const auto& d : dets) det_ids.insert(d.image_id);
  for (const auto& g : gts) gt_ids.insert(g.image_id);
  std::vector<std::string> orphans;
  std::set_symmetric_difference(det_ids.begin(), det_ids.end(), gt_ids.begin(), gt_ids.end(),
                                std::back_inserter(orphans));
  std::erase_if(dets, [&](const Detection& d) { return !gt_ids.contains(d.image_id); });
  std::erase_if(gts, [&](const GroundTruth& g) { return !det_ids.contains(g.image_id); });
  return orphans;
}

inline EvalDetectionsOutputs run_eval_detections(const EvalDetectionsOptions& opt) {
  auto dets = load_detections(opt.detections);
  auto gts = load_ground_truth(opt.ground_truth);
  EvalDetectionsOutputs out;
  out.orphan_images = intersect_images(dets, gts);
  if (!out.orphan_images.empty()) {
    std::cerr << "warning: " << out.orphan_images.size() << " image ids appear in only one file:";
    for (const auto& id : out.orphan_images) std::cerr << ' ' << id;
    std::cerr << '\n';
  }
  if (gts.empty()) throw NoGroundTruth("no image has both detections and ground truth");
  DetectionEvalConfig cfg;
  cfg.thresholds = opt.thresholds;
  cfg.interpolation = opt.interpolation;
  out.report = evaluate_detections(dets, gts, cfg);
  out.table = format_detection_table({{"eval", out.report}}, "detector");
  if (!opt.out.empty()) {
    nlohmann::json j = to_json(out.report);
    j["orphan_image_ids"] = out.orphan_images;
    ensure_parent_dir(opt.out);
    write_json_file(opt.out, j);
  }
  return out;
}

// ---------------------------------------------------------------------------
// report

struct ReportOptions {
  std::filesystem::path predictions;
  std::filesystem::path ground_truth;
  std::filesystem::path out;  // JSON report; empty to skip
};

struct ReportOutputs {
  PerClassReport per_class;
  RegressionReport regression;
  std::string table;
};

/// Pairs each prediction with the ground truth it overlaps most in the same
/// image. The class is the ground-truth label; a missing score counts as 1.
inline std::vector<WeightSample> join_predictions(const std::vector<BoxQuery>& preds,
                                                  const std::vector<double>& weights,
                                                  const std::vector<GroundTruth>& gts) {
  std::map<std::string, std::vector<const GroundTruth*>> by_image;
  for (const auto& g : gts) by_image[g.image_id].push_back(&g);
  std::vector<WeightSample> out;
  std::size_t unmatched = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto it = by_image.find(preds[i].image_id);
    const GroundTruth* best = nullptr;
    double best_iou = -1.0;
    if (it != by_image.end()) {
      for (const GroundTruth* g : it->second) {
        const double v = iou(preds[i].box, g->box);
        if (v > best_iou) {
          best_iou = v;
          best = g;
        }
      }
    }
    if (!best) {
      ++unmatched;
      continue;
    }
    out.push_back({best->label, best->weight_grams, weights[i], preds[i].score.value_or(1.0)});
  }
  if (unmatched > 0) std::cerr << "warning: " << unmatched << " predictions have no ground truth in their image\n";
  return out;
}

inline ReportOutputs run_report(const ReportOptions& opt) {
  const nlohmann::json raw = detail::read_json_array(opt.predictions);
  std::vector<BoxQuery> preds;
  std::vector<double> weights;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    try {
      const auto& e = raw[i];
      preds.push_back({detail::image_id_from_json(e.at("image_id")), detail::box_from_json(e),
                       e.at("label").get<std::string>(),
                       e.contains("score") ? std::optional<double>(e.at("score").get<double>()) : std::nullopt});
      weights.push_back(e.at("predicted_weight_grams").get<double>());
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(opt.predictions.string() + " entry " + std::to_string(i) + ": " + ex.what());
    }
  }
  const auto gts = load_ground_truth(opt.ground_truth);
  const auto samples = join_predictions(preds, weights, gts);

  ReportOutputs out;
  out.per_class = per_class_report(samples);
  std::vector<double> actual, predicted;
  for (const auto& s : samples) {
    actual.push_back(s.actual);
    predicted.push_back(s.predicted);
  }
  out.regression = regression_report(actual, predicted);
  out.table = format_per_class_table(out.per_class) + '\n' +
              format_regression_table({{"eval", out.regression}}, kBackboneName);
  if (!opt.out.empty()) {
    ensure_parent_dir(opt.out);
    write_json_file(opt.out, {{"per_class", to_json(out.per_class)}, {"regression", to_json(out.regression)}});
  }
  return out;
}

}  // namespace foodweight::pipeline
