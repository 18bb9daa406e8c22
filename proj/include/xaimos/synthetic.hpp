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
#include <optional>
#include <string>
#include <vector>

#include "xaimos/studydata.hpp"

namespace xaimos::synthetic {

// Seeded generator for studies with known structure. Each image has a latent
// quality drawn uniformly from [base_low, base_high]; a method's latent MOS
// adds its entry in `method_shift`. A rater's score is the rounded latent
// plus Gaussian noise, clamped to 1..5.
//
// With `balanced_totals`, every ordinary rater's score total per method is
// nudged (+-1 steps on random images) to the rounded latent total, so
// ordinary raters share one AOS per method and the outlier screen sees no
// spread except the planted rater.
struct Config {
  int offline = 15;
  int online = 15;
  int images = 50;
  std::vector<std::string> methods{"grad-cam", "mlfem", "fem"};
  std::vector<double> method_shift{0.0, 0.0, 0.0};
  double base_low = 2.0;
  double base_high = 3.5;
  double noise_sd = 0.8;
  // Index into the offline group of a rater whose latent MOS is offset.
  std::optional<int> outlier;
  double outlier_offset = 1.5;
  bool balanced_totals = true;
  // Probability a stimulus is left unrated by a rater.
  double unrated_rate = 0.0;
  std::uint64_t seed = 1;
};

StudyDataset generate(const Config& cfg);

// Participant id of the planted outlier for `cfg`, if any.
std::optional<ParticipantId> outlier_id(const Config& cfg);

}  // namespace xaimos::synthetic
