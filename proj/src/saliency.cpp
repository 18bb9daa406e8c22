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

#include "xaimos/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xaimos/errors.hpp"
#include "xaimos/npstats.hpp"

namespace xaimos {

ExplanationMap::ExplanationMap(Raster<float> values) : values_(std::move(values)) {
  if (!values_.allFinite() || (values_ < 0.0f).any() || (values_ > 1.0f).any()) {
    throw ValidationError("explanation map values must lie in [0, 1]");
  }
}

ExplanationMap ExplanationMap::normalized(const Raster<float>& raw) {
  if (raw.size() == 0) throw ValidationError("explanation map is empty");
  if (!raw.allFinite()) throw ValidationError("explanation map has non-finite values");
  const float lo = raw.minCoeff();
  const float hi = raw.maxCoeff();
  if (hi > lo) return ExplanationMap((raw - lo) / (hi - lo));
  return ExplanationMap(raw.cwiseMax(0.0f).cwiseMin(1.0f));
}

Image Image::filled(int width, int height, int channels, float value) {
  Image img;
  img.width = width;
  img.height = height;
  img.channels = channels;
  img.pixels.setConstant(static_cast<Eigen::Index>(width) * height, channels, value);
  return img;
}

PixelOrder rank_pixels(const ExplanationMap& map) {
  const auto flat = map.flat();
  PixelOrder order(static_cast<std::size_t>(flat.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return flat(a) > flat(b);
  });
  return order;
}

BaselineKind parse_baseline(std::string_view s) {
  if (s == "black") return BaselineKind::kBlack;
  if (s == "mean") return BaselineKind::kMean;
  if (s == "blur") return BaselineKind::kBlur;
  throw ValidationError("baseline must be black, mean or blur");
}

Image gaussian_blur(const Image& image, double sigma) {
  if (!(sigma > 0)) throw ValidationError("blur sigma must be positive");
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  Eigen::VectorXf kernel(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) {
    kernel(i + radius) = static_cast<float>(std::exp(-0.5 * i * i / (sigma * sigma)));
  }
  kernel /= kernel.sum();

  const int w = image.width;
  const int h = image.height;
  auto at = [&](const Image& img, int x, int y) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return img.pixels.row(static_cast<Eigen::Index>(y) * w + x);
  };
  Image tmp = image;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Eigen::RowVectorXf acc = Eigen::RowVectorXf::Zero(image.channels);
      for (int i = -radius; i <= radius; ++i) acc += kernel(i + radius) * at(image, x + i, y);
      tmp.pixels.row(static_cast<Eigen::Index>(y) * w + x) = acc;
    }
  }
  Image out = image;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Eigen::RowVectorXf acc = Eigen::RowVectorXf::Zero(image.channels);
      for (int i = -radius; i <= radius; ++i) acc += kernel(i + radius) * at(tmp, x, y + i);
      out.pixels.row(static_cast<Eigen::Index>(y) * w + x) = acc;
    }
  }
  return out;
}

Image make_baseline(const Image& image, const BaselineConfig& cfg) {
  switch (cfg.kind) {
    case BaselineKind::kBlack:
      return Image::filled(image.width, image.height, image.channels, 0.0f);
    case BaselineKind::kMean: {
      Image out = image;
      const Eigen::RowVectorXf mean = image.pixels.colwise().mean();
      out.pixels.rowwise() = mean;
      return out;
    }
    case BaselineKind::kBlur:
      return gaussian_blur(image, cfg.blur_sigma);
  }
  throw ValidationError("unknown baseline");
}

std::vector<Eigen::Index> masking_schedule(Eigen::Index n_pixels, double step) {
  if (!(step > 0) || step > 1) throw ValidationError("step must lie in (0, 1]");
  const double raw = 1.0 / step;
  const auto steps = static_cast<Eigen::Index>(std::llround(raw));
  if (std::fabs(raw - static_cast<double>(steps)) > 1e-6) {
    throw ValidationError("step must divide 1 into a whole number of steps");
  }
  std::vector<Eigen::Index> counts;
  counts.reserve(static_cast<std::size_t>(steps + 1));
  for (Eigen::Index i = 0; i <= steps; ++i) {
    counts.push_back((i * n_pixels + steps - 1) / steps);
  }
  return counts;
}

namespace {

enum class Direction { kDelete, kInsert };

ScoreCurve masking_curve(Direction dir, const Image& image, const ExplanationMap& map,
                         Scorer& scorer, const std::string& target_class,
                         double step, const BaselineConfig& baseline_cfg) {
  if (map.width() != image.width || map.height() != image.height) {
    throw ValidationError("image and explanation map dimensions differ");
  }
  if (image.pixels.rows() != static_cast<Eigen::Index>(image.width) * image.height) {
    throw ValidationError("image pixel buffer does not match its dimensions");
  }
  const PixelOrder order = rank_pixels(map);
  const auto schedule = masking_schedule(image.pixel_count(), step);
  const Image baseline = make_baseline(image, baseline_cfg);

  // Source of changed pixels and the starting canvas.
  const Image& start = dir == Direction::kDelete ? image : baseline;
  const Image& fill = dir == Direction::kDelete ? baseline : image;

  std::vector<Image> frames;
  frames.reserve(schedule.size());
  Image canvas = start;
  Eigen::Index done = 0;
  for (Eigen::Index target : schedule) {
    for (; done < target; ++done) {
      const Eigen::Index p = order[static_cast<std::size_t>(done)];
      canvas.pixels.row(p) = fill.pixels.row(p);
    }
    frames.push_back(canvas);
  }
  ScoreCurve curve;
  curve.scores = scorer.score(frames, target_class);
  if (curve.scores.size() != frames.size()) {
    throw ValidationError("scorer returned " + std::to_string(curve.scores.size()) +
                          " scores for " + std::to_string(frames.size()) + " images");
  }
  for (double s : curve.scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("scorer returned a score outside [0, 1]");
  }
  const double n = static_cast<double>(schedule.size() - 1);
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    curve.fractions.push_back(static_cast<double>(i) / n);
  }
  return curve;
}

}  // namespace

ScoreCurve deletion_curve(const Image& image, const ExplanationMap& map,
                          Scorer& scorer, const std::string& target_class,
                          double step, const BaselineConfig& baseline) {
  return masking_curve(Direction::kDelete, image, map, scorer, target_class, step,
                       baseline);
}

ScoreCurve insertion_curve(const Image& image, const ExplanationMap& map,
                           Scorer& scorer, const std::string& target_class,
                           double step, const BaselineConfig& baseline) {
  return masking_curve(Direction::kInsert, image, map, scorer, target_class, step,
                       baseline);
}

double auc(const ScoreCurve& curve) {
  if (curve.fractions.size() != curve.scores.size() || curve.scores.size() < 2) {
    throw ValidationError("auc: need at least two matching curve points");
  }
  // Integrated relative to the first score so a flat curve is exact.
  const double s0 = curve.scores.front();
  double area = 0.0;
  for (std::size_t i = 1; i < curve.scores.size(); ++i) {
    const double dx = curve.fractions[i] - curve.fractions[i - 1];
    if (!(dx > 0)) throw ValidationError("auc: fractions must increase");
    area += dx * ((curve.scores[i] - s0) + (curve.scores[i - 1] - s0)) / 2.0;
  }
  return s0 * (curve.fractions.back() - curve.fractions.front()) + area;
}

MapComparison compare_to_reference(const ExplanationMap& map,
                                   const ExplanationMap& reference) {
  if (map.width() != reference.width() || map.height() != reference.height()) {
    throw ValidationError("map and reference dimensions differ");
  }
  MapComparison out;
  out.pcc = npstats::correlation(map.flat(), reference.flat());
  out.sim = npstats::histogram_similarity(map.flat(), reference.flat());
  return out;
}

}  // namespace xaimos
