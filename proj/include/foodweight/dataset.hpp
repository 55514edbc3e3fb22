#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "foodweight/codec.hpp"
#include "foodweight/detect_eval.hpp"
#include "foodweight/error.hpp"
#include "foodweight/features.hpp"
#include "foodweight/geometry.hpp"
#include "foodweight/imaging.hpp"
#include "foodweight/random.hpp"

namespace foodweight {

/// The fourteen food types of the reference dataset.
inline const std::vector<std::string>& food_classes() {
  static const std::vector<std::string> names = {
      "Cherry Tomato", "Oatmeal",   "Steamed Rice", "Stir Fried Spinach",    "Sweet Corn",
      "Grape",         "Guava",     "Orange",       "Papaya",                "Pineapple",
      "Red Apple",     "Steamed Bun with Meat",     "Sweet Potato",          "Toast Bread"};
  return names;
}

struct SampleRecord {
  std::string image_id;
  std::string image_path;  // as written in the manifest, relative to its directory
  BoundingBox gt_box;
  std::string label;
  double weight_grams = 0.0;
  std::string container;
  std::string orientation;
};

inline GroundTruth to_ground_truth(const SampleRecord& r) {
  return {r.image_id, r.gt_box, r.label, r.weight_grams, r.container, r.orientation};
}

/// Registry of the distinct labels, sorted by name.
inline ClassRegistry registry_from(const std::vector<SampleRecord>& records) {
  std::set<std::string> labels;
  for (const auto& r : records) labels.insert(r.label);
  return ClassRegistry(std::vector<std::string>(labels.begin(), labels.end()));
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_real(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

// ---------------------------------------------------------------------------
// Manifest CSV

inline constexpr std::array<const char*, 10> kManifestColumns{
    "image_id", "path", "x_min", "y_min", "x_max", "y_max", "label", "weight_grams", "container", "orientation"};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline double parse_real(const std::string& s, const std::string& what) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
    throw ParseError(what + ": '" + s + "' is not a finite number");
  }
  return v;
}

}  // namespace detail

struct ManifestOptions {
  const ClassRegistry* registry = nullptr;  // when set, labels outside it are rejected
  bool check_files = true;                  // image paths must exist
};

inline std::vector<SampleRecord> load_manifest(const std::filesystem::path& path, const ManifestOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open manifest " + path.string());
  const std::filesystem::path base = path.parent_path();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty manifest");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* name : kManifestColumns) {
    if (!col.contains(name)) throw ParseError(path.string() + ": missing column '" + name + "'");
  }

  std::vector<SampleRecord> out;
  std::set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + " line " + std::to_string(line_no);
    const auto f = detail::split_csv_line(line);
    if (f.size() != header.size()) throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields");
    auto get = [&](const char* name) -> const std::string& { return f[col.at(name)]; };

    const double x0 = detail::parse_real(get("x_min"), where + " x_min");
    const double y0 = detail::parse_real(get("y_min"), where + " y_min");
    const double x1 = detail::parse_real(get("x_max"), where + " x_max");
    const double y1 = detail::parse_real(get("y_max"), where + " y_max");
    const double weight = detail::parse_real(get("weight_grams"), where + " weight_grams");
    if (!(weight > 0.0)) throw ParseError(where + ": weight_grams must be positive");
    std::optional<BoundingBox> box;
    try {
      box.emplace(x0, y0, x1, y1);
    } catch (const DegenerateBox& e) {
      throw ParseError(where + ": " + e.what());
    }
    SampleRecord r{get("image_id"), get("path"), *box, get("label"), weight, get("container"), get("orientation")};
    if (r.image_id.empty()) throw ParseError(where + ": empty image_id");
    if (!seen.insert(r.image_id).second) throw ParseError(where + ": duplicate image_id '" + r.image_id + "'");
    if (opt.registry && !opt.registry->contains(r.label)) {
      throw UnknownClass(where + ": '" + r.label + "' is not a registered class");
    }
    if (opt.check_files && !std::filesystem::exists(base / r.image_path)) {
      throw MissingFile(where + ": image " + (base / r.image_path).string() + " not found");
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_manifest(const std::filesystem::path& path, const std::vector<SampleRecord>& records) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  for (std::size_t i = 0; i < kManifestColumns.size(); ++i) out << (i ? "," : "") << kManifestColumns[i];
  out << '\n';
  for (const auto& r : records) {
    out << detail::csv_field(r.image_id) << ',' << detail::csv_field(r.image_path) << ','
        << format_real(r.gt_box.x_min()) << ',' << format_real(r.gt_box.y_min()) << ','
        << format_real(r.gt_box.x_max()) << ',' << format_real(r.gt_box.y_max()) << ','
        << detail::csv_field(r.label) << ',' << format_real(r.weight_grams) << ',' << detail::csv_field(r.container)
        << ',' << detail::csv_field(r.orientation) << '\n';
  }
  if (!out) throw IoError("failed writing manifest " + path.string());
}

// ---------------------------------------------------------------------------
// Stratified split

enum class Split { kTrain, kVal, kTest };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw ParseError("unknown split name '" + s + "'");
}

using SplitAssignment = std::map<std::string, Split>;

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;

  void validate() const {
    if (!(train > 0.0 && val > 0.0 && test > 0.0)) throw InvalidArgument("split ratios must all be positive");
    if (std::abs(train + val + test - 1.0) > 1e-9) throw InvalidArgument("split ratios must sum to 1");
  }
};

/// Weight quartile of each record within its class: number of the class's
/// quartile cut points (nearest-rank) strictly below the weight, 0..3.
inline std::vector<int> weight_buckets(const std::vector<SampleRecord>& records) {
  std::map<std::string, std::vector<double>> by_class;
  for (const auto& r : records) by_class[r.label].push_back(r.weight_grams);
  std::map<std::string, std::array<double, 3>> cuts;
  for (auto& [label, w] : by_class) {
    std::sort(w.begin(), w.end());
    std::array<double, 3> q{};
    for (int k = 1; k <= 3; ++k) {
      const auto rank = static_cast<std::size_t>(std::ceil(k * static_cast<double>(w.size()) / 4.0));
      q[k - 1] = w[std::max<std::size_t>(rank, 1) - 1];
    }
    cuts[label] = q;
  }
  std::vector<int> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const auto& q = cuts[r.label];
    out.push_back(static_cast<int>(std::count_if(q.begin(), q.end(), [&](double c) { return r.weight_grams > c; })));
  }
  return out;
}

/// Stratum key (label, container, orientation, weight bucket) per record.
inline std::vector<std::string> stratum_keys(const std::vector<SampleRecord>& records) {
  const auto buckets = weight_buckets(records);
  std::vector<std::string> keys;
  keys.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    keys.push_back(records[i].label + '\x1f' + records[i].container + '\x1f' + records[i].orientation + '\x1f' +
                   std::to_string(buckets[i]));
  }
  return keys;
}

/// Cut sizes of a stratum of n records at the cumulative ratios: train gets
/// floor(n*r1), val floor(n*(r1+r2)) - train, test the remainder.
inline std::array<std::size_t, 3> stratum_cut_sizes(std::size_t n, const SplitRatios& ratios) {
  // absorb representation error such as 0.6 * 10 = 5.999...
  auto cut = [n](double r) {
    return std::min(n, static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9)));
  };
  const std::size_t a = cut(ratios.train);
  const std::size_t b = std::max(a, cut(ratios.train + ratios.val));
  return {a, b - a, n - b};
}

/// Groups records into strata, shuffles each stratum with the seed and cuts it
/// at the cumulative ratios. Strata are visited in key order.
inline SplitAssignment stratified_split(const std::vector<SampleRecord>& records, const SplitRatios& ratios,
                                        std::uint64_t seed) {
  ratios.validate();
  if (records.empty()) throw EmptyDataset("nothing to split");
  const auto keys = stratum_keys(records);
  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < records.size(); ++i) strata[keys[i]].push_back(i);

  Rng rng(seed);
  SplitAssignment out;
  for (auto& [key, members] : strata) {
    rng.shuffle(std::span<std::size_t>(members));
    const auto sizes = stratum_cut_sizes(members.size(), ratios);
    for (std::size_t k = 0; k < members.size(); ++k) {
      const Split s = k < sizes[0] ? Split::kTrain : (k < sizes[0] + sizes[1] ? Split::kVal : Split::kTest);
      if (!out.emplace(records[members[k]].image_id, s).second) {
        throw InvalidArgument("duplicate image_id '" + records[members[k]].image_id + "'");
      }
    }
  }
  return out;
}

inline nlohmann::json to_json(const SplitAssignment& a) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, s] : a) j[id] = to_string(s);
  return j;
}

inline SplitAssignment load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open split file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(path.string() + ": expected an object of image_id -> split");
  SplitAssignment out;
  for (const auto& [id, v] : j.items()) {
    if (!v.is_string()) throw ParseError(path.string() + ": split of '" + id + "' must be a string");
    out[id] = parse_split(v.get<std::string>());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic fixtures

struct FixtureSpec {
  int classes = 14;
  int per_class = 20;
  int image_width = 160;
  int image_height = 160;
  double slope = 0.002;     // grams per px^2 of box area
  double intercept = 20.0;  // grams
  double noise = 0.0;       // std of additive Gaussian weight noise, grams
  double min_size = 0.15;   // box side range as a fraction of the image side
  double max_size = 0.85;
  std::uint64_t seed = 0;

  void validate() const {
    if (classes < 1 || per_class < 1) throw InvalidArgument("fixture counts must be >= 1");
    if (image_width < 8 || image_height < 8) throw InvalidArgument("fixture images must be at least 8x8");
    if (!(min_size > 0.0 && min_size <= max_size && max_size <= 1.0)) {
      throw InvalidArgument("fixture size range must satisfy 0 < min <= max <= 1");
    }
    if (!(noise >= 0.0)) throw InvalidArgument("noise must be >= 0");
  }
};

struct FixtureFiles {
  std::filesystem::path manifest;
  std::filesystem::path ground_truth;
  std::filesystem::path images_dir;
  std::vector<SampleRecord> records;
};

/// Class names for a fixture: the reference food types first, then generic.
inline std::vector<std::string> fixture_class_names(int count) {
  std::vector<std::string> names;
  for (int i = 0; i < count; ++i) {
    names.push_back(i < static_cast<int>(food_classes().size()) ? food_classes()[i]
                                                                 : "class_" + std::to_string(i + 1));
  }
  return names;
}

namespace detail {

inline std::array<double, 3> class_color(int k) {
  // spread hues around the wheel; bright enough to stand out from background
  const double h = std::fmod(k * 0.381966, 1.0) * 6.0;
  const double x = 1.0 - std::abs(std::fmod(h, 2.0) - 1.0);
  std::array<double, 3> rgb{};
  switch (static_cast<int>(h)) {
    case 0: rgb = {1, x, 0}; break;
    case 1: rgb = {x, 1, 0}; break;
    case 2: rgb = {0, 1, x}; break;
    case 3: rgb = {0, x, 1}; break;
    case 4: rgb = {x, 0, 1}; break;
    default: rgb = {1, 0, x}; break;
  }
  for (double& c : rgb) c = 0.25 + 0.7 * c;
  return rgb;
}

inline Image render_shape(int w, int h, const PixelRect& r, bool ellipse, const std::array<double, 3>& color,
                          Rng& rng) {
  std::vector<double> px(static_cast<std::size_t>(w) * h * 3);
  const double cx = 0.5 * (r.x0 + r.x1);
  const double cy = 0.5 * (r.y0 + r.y1);
  const double rx = 0.5 * r.width();
  const double ry = 0.5 * r.height();
  std::size_t k = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool inside = x >= r.x0 && x < r.x1 && y >= r.y0 && y < r.y1;
      if (inside && ellipse) {
        const double dx = (x + 0.5 - cx) / rx;
        const double dy = (y + 0.5 - cy) / ry;
        inside = dx * dx + dy * dy <= 1.0;
      }
      const double bg = 0.12 + 0.08 * rng.uniform();
      for (int c = 0; c < 3; ++c) {
        // quantize now so the in-memory image equals its decoded PNG
        const double v = inside ? color[c] : bg;
        px[k++] = std::round(v * 255.0) / 255.0;
      }
    }
  }
  return Image(w, h, 3, std::move(px));
}

}  // namespace detail

/// Renders one filled rectangle or ellipse per image (shape and colour fixed
/// per class) and assigns weight = slope * box_area + intercept + noise.
/// Writes images/, manifest.csv and ground_truth.json under `out_dir`.
inline FixtureFiles generate_synthetic_fixture(const FixtureSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "images").string() + ": " + ec.message());

  static const std::array<const char*, 3> containers{"plate", "bowl", "tray"};
  static const std::array<const char*, 2> orientations{"top", "side"};
  const auto names = fixture_class_names(spec.classes);

  Rng rng(spec.seed);
  FixtureFiles files{out_dir / "manifest.csv", out_dir / "ground_truth.json", out_dir / "images", {}};
  int serial = 0;
  for (int c = 0; c < spec.classes; ++c) {
    const bool ellipse = (c % 2) == 1;
    const auto color = detail::class_color(c);
    for (int i = 0; i < spec.per_class; ++i) {
      auto side = [&](int extent) {
        const int lo = std::max(1, static_cast<int>(std::round(spec.min_size * extent)));
        const int hi = std::max(lo, static_cast<int>(std::round(spec.max_size * extent)));
        return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
      };
      const int bw = side(spec.image_width);
      const int bh = side(spec.image_height);
      const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.image_width - bw + 1)));
      const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.image_height - bh + 1)));
      const PixelRect rect{x0, y0, x0 + bw, y0 + bh};
      const std::string container = containers[rng.below(containers.size())];
      const std::string orientation = orientations[rng.below(orientations.size())];
      double weight = spec.slope * static_cast<double>(bw) * static_cast<double>(bh) + spec.intercept;
      if (spec.noise > 0.0) weight = std::max(0.1, weight + spec.noise * rng.normal());

      const Image img = detail::render_shape(spec.image_width, spec.image_height, rect, ellipse, color, rng);
      char id[32];
      std::snprintf(id, sizeof id, "img_%05d", ++serial);
      const std::string rel = std::string("images/") + id + ".png";
      write_png(out_dir / rel, img);
      files.records.push_back({id, rel, BoundingBox(x0, y0, x0 + bw, y0 + bh), names[c], weight, container,
                               orientation});
    }
  }
  write_manifest(files.manifest, files.records);

  nlohmann::json gt = nlohmann::json::array();
  for (const auto& r : files.records) gt.push_back(to_json(to_ground_truth(r)));
  std::ofstream out(files.ground_truth, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot write " + files.ground_truth.string());
  out << gt.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + files.ground_truth.string());
  return files;
}

/// Stand-in detector: each ground-truth box moved by up to +/- jitter times
/// its width/height per coordinate, scored 1 minus the mean relative offset,
/// and dropped with probability drop_rate. Labels are copied.
inline std::vector<Detection> oracle_detector(const std::vector<GroundTruth>& gts, double jitter, double drop_rate,
                                              std::uint64_t seed) {
  if (!(jitter >= 0.0 && jitter < 0.5)) throw InvalidArgument("jitter must lie in [0, 0.5)");
  if (!(drop_rate >= 0.0 && drop_rate < 1.0)) throw InvalidArgument("drop_rate must lie in [0, 1)");
  Rng rng(seed);
  std::vector<Detection> out;
  for (const auto& g : gts) {
    const bool drop = rng.uniform() < drop_rate;
    std::array<double, 4> u{};
    for (double& v : u) v = rng.uniform(-1.0, 1.0);
    if (drop) continue;
    if (jitter == 0.0) {
      out.push_back({g.image_id, g.box, g.label, 1.0});
      continue;
    }
    const double w = g.box.width();
    const double h = g.box.height();
    const BoundingBox box(std::max(0.0, g.box.x_min() + u[0] * jitter * w),
                          std::max(0.0, g.box.y_min() + u[1] * jitter * h), g.box.x_max() + u[2] * jitter * w,
                          g.box.y_max() + u[3] * jitter * h);
    const double offset = (std::abs(u[0]) + std::abs(u[1]) + std::abs(u[2]) + std::abs(u[3])) * jitter / 4.0;
    out.push_back({g.image_id, box, g.label, std::clamp(1.0 - offset, 0.0, 1.0)});
  }
  return out;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

inline nlohmann::json detections_to_json(const std::vector<Detection>& dets) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& d : dets) j.push_back(to_json(d));
  return j;
}

}  // namespace foodweight
