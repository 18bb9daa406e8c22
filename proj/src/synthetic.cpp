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

#include "xaimos/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "xaimos/errors.hpp"

namespace xaimos::synthetic {

std::optional<ParticipantId> outlier_id(const Config& cfg) {
  if (!cfg.outlier) return std::nullopt;
  return static_cast<ParticipantId>(*cfg.outlier + 1);
}

StudyDataset generate(const Config& cfg) {
  const int n_methods = static_cast<int>(cfg.methods.size());
  if (n_methods == 0 || cfg.method_shift.size() != cfg.methods.size()) {
    throw ValidationError("synthetic: method_shift must match methods");
  }
  if (cfg.outlier && (*cfg.outlier < 0 || *cfg.outlier >= cfg.offline)) {
    throw ValidationError("synthetic: outlier index outside offline group");
  }
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> base(cfg.base_low, cfg.base_high);
  std::normal_distribution<double> noise(0.0, cfg.noise_sd);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  StudyDataset ds;
  const Distortion kinds[] = {Distortion::kAdditiveGaussianNoise,
                              Distortion::kGaussianBlur,
                              Distortion::kBrightnessShift};
  // latent[i][k]
  std::vector<std::vector<double>> latent(static_cast<std::size_t>(cfg.images));
  StimulusId next_stimulus = 1;
  for (int i = 0; i < cfg.images; ++i) {
    const double b = base(rng);
    const bool well = i % 2 == 0;
    const std::string truth = "class_" + std::to_string(i % 10);
    for (int k = 0; k < n_methods; ++k) {
      latent[static_cast<std::size_t>(i)].push_back(
          b + cfg.method_shift[static_cast<std::size_t>(k)]);
      StimulusRecord s;
      s.stimulus_id = next_stimulus++;
      s.image_id = i + 1;
      s.method.name = cfg.methods[static_cast<std::size_t>(k)];
      s.distortion = {kinds[(i / 2) % 3],
                      (i / 6) % 2 ? DistortionLevel::kStrong : DistortionLevel::kWeak};
      s.classification = well ? Classification::kWell : Classification::kPoor;
      s.ground_truth_label = truth;
      s.predicted_label = well ? truth : "class_other";
      s.image_path = "images/" + std::to_string(i + 1) + ".png";
      s.overlay_path = "overlays/" + std::to_string(i + 1) + "_" + s.method.name + ".png";
      ds.stimuli.push_back(std::move(s));
    }
  }

  const TimePoint t0 = TimePoint{} + std::chrono::hours(24 * 365 * 55);
  const int total = cfg.offline + cfg.online;
  for (int j = 0; j < total; ++j) {
    ParticipantRecord p;
    p.participant_id = j + 1;
    p.group = j < cfg.offline ? Group::kOffline : Group::kOnline;
    p.age = 18 + j % 12;
    p.ishihara_pass = true;
    ds.participants.push_back(p);
    const bool is_outlier = cfg.outlier && j == *cfg.outlier;
    const double offset = is_outlier ? cfg.outlier_offset : 0.0;

    for (int k = 0; k < n_methods; ++k) {
      std::vector<int> scores(static_cast<std::size_t>(cfg.images));
      double target = 0.0;
      for (int i = 0; i < cfg.images; ++i) {
        const double mu = latent[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] + offset;
        target += std::clamp(mu, 1.0, 5.0);
        scores[static_cast<std::size_t>(i)] =
            static_cast<int>(std::clamp(std::lround(mu + noise(rng)), 1L, 5L));
      }
      if (cfg.balanced_totals) {
        int diff = static_cast<int>(std::lround(target));
        for (int s : scores) diff -= s;
        std::uniform_int_distribution<int> pick(0, cfg.images - 1);
        while (diff != 0) {
          auto& s = scores[static_cast<std::size_t>(pick(rng))];
          if (diff > 0 && s < 5) {
            ++s;
            --diff;
          } else if (diff < 0 && s > 1) {
            --s;
            ++diff;
          }
        }
      }
      for (int i = 0; i < cfg.images; ++i) {
        OpinionScore o;
        o.participant_id = p.participant_id;
        o.stimulus_id = static_cast<StimulusId>(i * n_methods + k + 1);
        if (cfg.unrated_rate <= 0.0 || unit(rng) >= cfg.unrated_rate) {
          o.score = scores[static_cast<std::size_t>(i)];
        }
        o.elapsed_ms = 3000 + (i * 37 + k * 11 + j * 5) % 15000;
        o.timestamp = t0 + std::chrono::seconds(25 * (j * cfg.images * n_methods +
                                                      i * n_methods + k));
        ds.scores.push_back(o);
      }
    }
  }
  validate(ds);
  return ds;
}

}  // namespace xaimos::synthetic
