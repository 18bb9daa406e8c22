// Copyright 2026 The xaimos Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace xaimos {

template <typename Scalar>
using Raster = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Per-pixel importance in [0, 1], rows = height, cols = width.
class ExplanationMap {
 public:
  ExplanationMap() = default;
  // Checks every value is finite and inside [0, 1].
  explicit ExplanationMap(Raster<float> values);

  // Min-max rescales arbitrary finite values into [0, 1]. A constant raster
  // keeps its value clamped to [0, 1].
  static ExplanationMap normalized(const Raster<float>& raw);

  int width() const { return static_cast<int>(values_.cols()); }
  int height() const { return static_cast<int>(values_.rows()); }
  Eigen::Index size() const { return values_.size(); }
  const Raster<float>& values() const { return values_; }
  // Row-major flat view.
  Eigen::Map<const Eigen::ArrayXf> flat() const {
    return {values_.data(), values_.size()};
  }

 private:
  Raster<float> values_;
};

// Image with `channels` interleaved values per pixel in [0, 1].
// pixels has one row per pixel in raster order.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> pixels;

  static Image filled(int width, int height, int channels, float value);
  Eigen::Index pixel_count() const { return pixels.rows(); }
};

// Pixel indices sorted by descending importance; ties keep raster order.
using PixelOrder = std::vector<Eigen::Index>;

PixelOrder rank_pixels(const ExplanationMap& map);

enum class BaselineKind { kBlack, kMean, kBlur };

BaselineKind parse_baseline(std::string_view s);

struct BaselineConfig {
  BaselineKind kind = BaselineKind::kBlack;
  double blur_sigma = 5.0;  // pixels, for kBlur
};

Image make_baseline(const Image& image, const BaselineConfig& cfg);

// Separable Gaussian blur with edge clamping.
Image gaussian_blur(const Image& image, double sigma);

struct ScoreCurve {
  std::vector<double> fractions;
  std::vector<double> scores;
};

// Number of pixels changed at each point: ceil(i * n / steps), i = 0..steps.
std::vector<Eigen::Index> masking_schedule(Eigen::Index n_pixels, double step);

class Scorer {
 public:
  virtual ~Scorer() = default;
  // One target-class probability per image, in input order.
  virtual std::vector<double> score(std::span<const Image> images,
                                    const std::string& target_class) = 0;
};

// Point t replaces the top ceil(t * w * h) ranked pixels with the baseline.
// Point 0 is the unmodified image.
ScoreCurve deletion_curve(const Image& image, const ExplanationMap& map,
                          Scorer& scorer, const std::string& target_class,
                          double step = 0.01, const BaselineConfig& baseline = {});

// Starts from the baseline and reveals top-ranked pixels; the last point is
// the unmodified image.
ScoreCurve insertion_curve(const Image& image, const ExplanationMap& map,
                           Scorer& scorer, const std::string& target_class,
                           double step = 0.01, const BaselineConfig& baseline = {});

// Trapezoidal area over the curve's fractions.
double auc(const ScoreCurve& curve);

struct MapComparison {
  double pcc = 0.0;
  double sim = 0.0;
};

MapComparison compare_to_reference(const ExplanationMap& map,
                                   const ExplanationMap& reference);

}  // namespace xaimos
