#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "foodweight/error.hpp"
#include "foodweight/geometry.hpp"
#include "foodweight/random.hpp"

namespace foodweight {

/// Dense row-major, channel-interleaved grid of reals. Carries no range
/// constraint; used for normalized network inputs.
struct PixelTensor {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> values;

  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  double at(int x, int y, int c) const { return values[index(x, y, c)]; }
};

/// Raster with intensities in [0,1]; 1 (gray) or 3 (RGB) channels.
class Image {
 public:
  Image(int width, int height, int channels, std::vector<double> pixels)
      : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)) {
    if (width <= 0 || height <= 0) throw InvalidArgument("image dimensions must be positive");
    if (channels != 1 && channels != 3) throw InvalidArgument("image must have 1 or 3 channels");
    if (pixels_.size() != static_cast<std::size_t>(width) * height * channels) {
      throw DimensionMismatch("pixel buffer length does not match width*height*channels");
    }
    for (double p : pixels_) {
      if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("pixel intensity outside [0,1]");
    }
  }

  /// Image filled with one intensity per channel.
  static Image filled(int width, int height, int channels, double value) {
    return Image(width, height, channels,
                 std::vector<double>(static_cast<std::size_t>(width) * height * channels, value));
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::span<const double> pixels() const { return pixels_; }

  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }
  double at(int x, int y, int c = 0) const { return pixels_[index(x, y, c)]; }

  PixelTensor to_tensor() const { return {width_, height_, channels_, pixels_}; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_;
  int height_;
  int channels_;
  std::vector<double> pixels_;
};

/// Copies the outward-rounded pixel region of `b`. The region must lie inside
/// the image; clamp detector boxes first.
inline Image crop(const Image& img, const BoundingBox& b) {
  const PixelRect r = crop_region(b);
  if (r.x1 > img.width() || r.y1 > img.height()) {
    std::ostringstream os;
    os << "box extends past " << img.width() << "x" << img.height() << " image";
    throw DegenerateBox(os.str());
  }
  const int c = img.channels();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(r.width()) * r.height() * c);
  const auto src = img.pixels();
  for (int y = r.y0; y < r.y1; ++y) {
    const auto row = src.subspan(img.index(r.x0, y, 0), static_cast<std::size_t>(r.width()) * c);
    out.insert(out.end(), row.begin(), row.end());
  }
  return Image(r.width(), r.height(), c, std::move(out));
}

namespace detail {

// Corner-aligned source coordinate: output ends map onto input ends.
inline double source_coord(int dst, int dst_size, int src_size) {
  if (dst_size == 1) return 0.5 * (src_size - 1);
  return static_cast<double>(dst) * (src_size - 1) / (dst_size - 1);
}

template <typename Grid>
std::vector<double> bilinear(const Grid& g, int w, int h, int channels) {
  std::vector<double> out(static_cast<std::size_t>(w) * h * channels);
  std::size_t k = 0;
  for (int y = 0; y < h; ++y) {
    const double sy = source_coord(y, h, g.height());
    const int y0 = std::min(static_cast<int>(sy), g.height() - 1);
    const int y1 = std::min(y0 + 1, g.height() - 1);
    const double ty = sy - y0;
    for (int x = 0; x < w; ++x) {
      const double sx = source_coord(x, w, g.width());
      const int x0 = std::min(static_cast<int>(sx), g.width() - 1);
      const int x1 = std::min(x0 + 1, g.width() - 1);
      const double tx = sx - x0;
      for (int c = 0; c < channels; ++c) {
        const double top = std::lerp(g.at(x0, y0, c), g.at(x1, y0, c), tx);
        const double bottom = std::lerp(g.at(x0, y1, c), g.at(x1, y1, c), tx);
        out[k++] = std::lerp(top, bottom, ty);
      }
    }
  }
  return out;
}

}  // namespace detail

/// Bilinear resize with corner-aligned sampling.
inline Image resize(const Image& img, int w, int h) {
  if (w <= 0 || h <= 0) throw InvalidArgument("resize target must be positive");
  if (w == img.width() && h == img.height()) return img;
  auto out = detail::bilinear(img, w, h, img.channels());
  // lerp between values in [0,1] stays in [0,1] up to rounding
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return Image(w, h, img.channels(), std::move(out));
}

inline Image flip_horizontal(const Image& img) {
  const int w = img.width();
  const int c = img.channels();
  std::vector<double> out(img.pixels().size());
  const auto src = img.pixels();
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) out[img.index(w - 1 - x, y, ch)] = src[img.index(x, y, ch)];
    }
  }
  return Image(w, img.height(), c, std::move(out));
}

inline PixelTensor flip_horizontal(const PixelTensor& t) {
  PixelTensor out{t.width, t.height, t.channels, std::vector<double>(t.values.size())};
  for (int y = 0; y < t.height; ++y) {
    for (int x = 0; x < t.width; ++x) {
      for (int c = 0; c < t.channels; ++c) {
        out.values[t.index(t.width - 1 - x, y, c)] = t.values[t.index(x, y, c)];
      }
    }
  }
  return out;
}

/// Flips with probability `p` drawing one value from `rng`.
inline Image random_horizontal_flip(const Image& img, double p, Rng& rng) {
  return rng.bernoulli(p) ? flip_horizontal(img) : img;
}

/// Mean over every intensity of every channel. Columns x and w-1-x are added
/// pairwise first, so a mirrored image yields the bit-identical value.
inline double average_pixel_intensity(const Image& img) {
  const int w = img.width();
  double sum = 0.0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < w / 2; ++x) {
      for (int c = 0; c < img.channels(); ++c) sum += img.at(x, y, c) + img.at(w - 1 - x, y, c);
    }
    if (w % 2 == 1) {
      for (int c = 0; c < img.channels(); ++c) sum += img.at(w / 2, y, c);
    }
  }
  return sum / static_cast<double>(img.pixels().size());
}

struct PixelStats {
  double mean = 0.0;
  double std = 0.0;
};

/// Pooled mean and population standard deviation, merged image by image
/// (Chan et al. pairwise update) so callers can stream images through.
class PixelStatsAccumulator {
 public:
  void add(std::span<const double> values) {
    if (values.empty()) return;
    const double n_b = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean_b = sum / n_b;
    double m2_b = 0.0;
    for (double v : values) m2_b += (v - mean_b) * (v - mean_b);

    const double n = count_ + n_b;
    const double delta = mean_b - mean_;
    mean_ += delta * n_b / n;
    m2_ += m2_b + delta * delta * count_ * n_b / n;
    count_ = n;
  }

  void add(const Image& img) { add(img.pixels()); }

  double count() const { return count_; }

  PixelStats result() const {
    if (count_ == 0.0) throw EmptyDataset("no pixels accumulated");
    return {mean_, std::sqrt(m2_ / count_)};
  }

 private:
  double count_ = 0.0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

inline PixelStats pixel_mean_std(std::span<const Image> imgs) {
  if (imgs.empty()) throw EmptyDataset("pixel_mean_std needs at least one image");
  PixelStatsAccumulator acc;
  for (const auto& img : imgs) acc.add(img);
  return acc.result();
}

/// Maps each intensity to (p - mean) / std. Output is a tensor, not an image:
/// values leave [0,1].
inline PixelTensor normalize(const Image& img, double mean, double std) {
  if (!(std > 0.0)) throw ZeroStd("normalization std must be positive");
  PixelTensor t = img.to_tensor();
  for (double& v : t.values) v = (v - mean) / std;
  return t;
}

inline PixelTensor denormalize(const PixelTensor& t, double mean, double std) {
  PixelTensor out = t;
  for (double& v : out.values) v = v * std + mean;
  return out;
}

/// Converts between gray and RGB; gray->RGB replicates, RGB->gray averages.
inline Image convert_channels(const Image& img, int channels) {
  if (img.channels() == channels) return img;
  const std::size_t n = static_cast<std::size_t>(img.width()) * img.height();
  const auto src = img.pixels();
  std::vector<double> out;
  out.reserve(n * channels);
  if (channels == 3) {
    for (std::size_t i = 0; i < n; ++i) out.insert(out.end(), 3, src[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) out.push_back((src[3 * i] + src[3 * i + 1] + src[3 * i + 2]) / 3.0);
  }
  return Image(img.width(), img.height(), channels, std::move(out));
}

}  // namespace foodweight
