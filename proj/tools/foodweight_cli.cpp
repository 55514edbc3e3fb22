// foodweight: command-line front end for fixture generation, splitting,
// training, prediction and evaluation.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "foodweight.hpp"

namespace fw = foodweight;
namespace pl = foodweight::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"Estimate food weight from bounding-box crops"};
  app.set_config("--config", "", "TOML config file; command-line flags take precedence");
  app.require_subcommand(1);

  // gen-fixture
  pl::GenFixtureOptions gen;
  std::string gen_out;
  auto* c_gen = app.add_subcommand("gen-fixture", "Write a synthetic dataset with known ground truth");
  c_gen->add_option("--out", gen_out, "Output directory")->required();
  c_gen->add_option("--seed", gen.spec.seed, "Random seed")->capture_default_str();
  c_gen->add_option("--classes", gen.spec.classes, "Number of classes")->capture_default_str();
  c_gen->add_option("--per-class", gen.spec.per_class, "Samples per class")->capture_default_str();
  c_gen->add_option("--width", gen.spec.image_width, "Image width")->capture_default_str();
  c_gen->add_option("--height", gen.spec.image_height, "Image height")->capture_default_str();
  c_gen->add_option("--slope", gen.spec.slope, "Grams per square pixel of box area")->capture_default_str();
  c_gen->add_option("--intercept", gen.spec.intercept, "Weight intercept, grams")->capture_default_str();
  c_gen->add_option("--noise", gen.spec.noise, "Std of weight noise, grams")->capture_default_str();
  c_gen->add_option("--jitter", gen.detection_jitter, "Detection box jitter, fraction of box size")
      ->capture_default_str();
  c_gen->add_option("--drop", gen.detection_drop, "Fraction of objects the detector misses")->capture_default_str();

  // split
  pl::SplitOptions split;
  std::string split_manifest, split_out, ratios = "0.6,0.2,0.2";
  auto* c_split = app.add_subcommand("split", "Stratified train/val/test split");
  c_split->add_option("--manifest", split_manifest, "Manifest CSV")->required();
  c_split->add_option("--out", split_out, "Split JSON to write")->required();
  c_split->add_option("--seed", split.seed, "Random seed")->capture_default_str();
  c_split->add_option("--ratios", ratios, "train,val,test fractions")->capture_default_str();

  // train
  pl::TrainOptions train;
  std::string train_manifest, train_split, train_ckpt, train_out, scaler = "standardize", readout = "affine-least-squares";
  auto* c_train = app.add_subcommand("train", "Train the weight regressor");
  c_train->add_option("--manifest", train_manifest, "Manifest CSV")->required();
  c_train->add_option("--split", train_split, "Split JSON")->required();
  c_train->add_option("--checkpoint", train_ckpt, "Checkpoint to write")->required();
  c_train->add_option("--out", train_out, "Directory for reports and loss history")->required();
  c_train->add_option("--seed", train.config.seed, "Random seed")->capture_default_str();
  c_train->add_option("--epochs", train.config.epochs, "Epochs")->capture_default_str();
  c_train->add_option("--batch-size", train.config.batch_size, "Batch size")->capture_default_str();
  c_train->add_option("--learning-rate", train.config.learning_rate, "Adam learning rate")->capture_default_str();
  c_train->add_option("--flip-prob", train.config.flip_probability, "Horizontal flip probability")
      ->capture_default_str();
  c_train->add_option("--pool-size", train.config.pool_size, "Backbone pooling window (divides 224)")
      ->capture_default_str();
  c_train->add_option("--scaler", scaler, "Feature scaling")
      ->check(CLI::IsMember({"standardize", "identity"}))
      ->capture_default_str();
  c_train->add_option("--readout-init", readout, "Head initialization")
      ->check(CLI::IsMember({"affine-least-squares", "least-squares", "uniform"}))
      ->capture_default_str();
  c_train->add_option("--readout-ridge", train.config.readout_ridge, "Ridge penalty of the least-squares readout")
      ->capture_default_str();
  c_train->add_option("--threads", train.config.threads, "Worker threads (results are identical)")
      ->capture_default_str();

  // predict
  pl::PredictOptions pred;
  std::string pred_ckpt, pred_input, pred_images, pred_manifest, pred_out;
  auto* c_pred = app.add_subcommand("predict", "Predict weights for boxes");
  c_pred->add_option("--checkpoint", pred_ckpt, "Checkpoint")->required();
  c_pred->add_option("--input", pred_input, "Ground-truth or detections JSON")->required();
  c_pred->add_option("--images", pred_images, "Directory holding <image_id>.png/.jpg");
  c_pred->add_option("--manifest", pred_manifest, "Manifest CSV giving image paths");
  c_pred->add_option("--out", pred_out, "Predictions JSON to write")->required();

  // eval-detections
  std::string ev_dets, ev_gt, ev_out, thresholds = "0.5:0.05:0.95";
  bool eleven_point = false;
  auto* c_eval = app.add_subcommand("eval-detections", "mAP, accuracy and IoU of a detection dump");
  c_eval->add_option("--detections", ev_dets, "Detections JSON")->required();
  c_eval->add_option("--ground-truth", ev_gt, "Ground-truth JSON")->required();
  c_eval->add_option("--iou-thresholds", thresholds, "start:step:stop or comma list")->capture_default_str();
  c_eval->add_flag("--eleven-point", eleven_point, "Use 11-point interpolated AP");
  c_eval->add_option("--out", ev_out, "Report JSON to write");

  // report
  std::string rep_pred, rep_gt, rep_out;
  auto* c_rep = app.add_subcommand("report", "Per-class weight error report");
  c_rep->add_option("--predictions", rep_pred, "Predictions JSON")->required();
  c_rep->add_option("--ground-truth", rep_gt, "Ground-truth JSON")->required();
  c_rep->add_option("--out", rep_out, "Report JSON to write");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_gen) {
      gen.out_dir = gen_out;
      std::cerr << "seed: " << gen.spec.seed << '\n';
      const auto out = pl::run_gen_fixture(gen);
      std::cout << out.files.manifest.string() << '\n'
                << out.files.ground_truth.string() << '\n'
                << out.detections.string() << '\n';
    } else if (*c_split) {
      split.manifest = split_manifest;
      split.out = split_out;
      split.ratios = pl::parse_ratios(ratios);
      std::cerr << "seed: " << split.seed << '\n';
      pl::run_split(split);
      std::cout << split.out.string() << '\n';
    } else if (*c_train) {
      train.manifest = train_manifest;
      train.split = train_split;
      train.checkpoint = train_ckpt;
      train.out_dir = train_out;
      train.config.scaler = fw::nnet::parse_scaler_mode(scaler);
      train.config.readout = fw::nnet::parse_readout_init(readout);
      std::cout << pl::run_train(train).table;
    } else if (*c_pred) {
      if (pred_images.empty() && pred_manifest.empty()) {
        throw fw::InvalidArgument("predict needs --images or --manifest");
      }
      pred.checkpoint = pred_ckpt;
      pred.input = pred_input;
      pred.images_dir = pred_images;
      pred.manifest = pred_manifest;
      pred.out = pred_out;
      const auto out = pl::run_predict(pred);
      std::cout << out.size() << " predictions written to " << pred.out.string() << '\n';
    } else if (*c_eval) {
      pl::EvalDetectionsOptions opt;
      opt.detections = ev_dets;
      opt.ground_truth = ev_gt;
      opt.thresholds = pl::parse_thresholds(thresholds);
      opt.interpolation = eleven_point ? fw::Interpolation::kElevenPoint : fw::Interpolation::kAllPoint;
      opt.out = ev_out;
      std::cout << pl::run_eval_detections(opt).table;
    } else if (*c_rep) {
      pl::ReportOptions opt;
      opt.predictions = rep_pred;
      opt.ground_truth = rep_gt;
      opt.out = rep_out;
      std::cout << pl::run_report(opt).table;
    }
  } catch (const fw::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
