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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xaimos/time_util.hpp"

namespace xaimos {

using ParticipantId = std::int64_t;
using StimulusId = std::int64_t;
using ImageId = std::int64_t;

struct MethodId {
  std::string name;
  int index = 0;

  friend bool operator==(const MethodId&, const MethodId&) = default;
};

enum class Distortion { kAdditiveGaussianNoise, kGaussianBlur, kBrightnessShift };
enum class DistortionLevel { kWeak, kStrong };
enum class Classification { kWell, kPoor };
enum class Group { kOffline, kOnline };

struct DistortionKind {
  Distortion kind = Distortion::kAdditiveGaussianNoise;
  DistortionLevel level = DistortionLevel::kWeak;

  friend bool operator==(const DistortionKind&, const DistortionKind&) = default;
};

std::string_view to_string(Distortion d);
std::string_view to_string(DistortionLevel l);
std::string_view to_string(Classification c);
std::string_view to_string(Group g);
Distortion parse_distortion(std::string_view s);
DistortionLevel parse_level(std::string_view s);
Classification parse_classification(std::string_view s);
Group parse_group(std::string_view s);

struct StimulusRecord {
  StimulusId stimulus_id = 0;
  ImageId image_id = 0;
  MethodId method;
  DistortionKind distortion;
  Classification classification = Classification::kWell;
  std::string ground_truth_label;
  std::string predicted_label;
  std::string image_path;
  std::string overlay_path;

  friend bool operator==(const StimulusRecord&, const StimulusRecord&) = default;
};

struct ParticipantRecord {
  ParticipantId participant_id = 0;
  Group group = Group::kOffline;
  int age = 0;
  bool ishihara_pass = false;
  bool excluded_as_outlier = false;

  friend bool operator==(const ParticipantRecord&,
                         const ParticipantRecord&) = default;
};

struct OpinionScore {
  ParticipantId participant_id = 0;
  StimulusId stimulus_id = 0;
  std::optional<int> score;  // 1..5; empty when the stimulus went unrated
  std::int64_t elapsed_ms = 0;
  TimePoint timestamp{};

  friend bool operator==(const OpinionScore&, const OpinionScore&) = default;
};

struct StudyDataset {
  std::vector<ParticipantRecord> participants;
  std::vector<StimulusRecord> stimuli;
  std::vector<OpinionScore> scores;
  std::vector<MethodId> methods;  // ordered by index
  int images_per_method = 0;      // N_I

  const StimulusRecord& stimulus(StimulusId id) const;
  const ParticipantRecord& participant(ParticipantId id) const;

  friend bool operator==(const StudyDataset&, const StudyDataset&) = default;
};

struct LoadOptions {
  // Reject raters outside the recruited age band (18..29).
  bool enforce_age_screening = false;
  // When false, a missing participants.csv or scores.csv reads as empty.
  bool require_ratings = true;
};

// Reads participants.csv, stimuli.csv and scores.csv from `root`.
StudyDataset load_study(const std::filesystem::path& root,
                        const LoadOptions& options = {});

// Cross-reference checks shared by load_study and in-memory construction.
// Fills in `methods` and `images_per_method`.
void validate(StudyDataset& ds, const LoadOptions& options = {});

void export_scores(const StudyDataset& ds, const std::filesystem::path& path);
void export_participants(const StudyDataset& ds,
                         const std::filesystem::path& path);
void export_stimuli(const StudyDataset& ds, const std::filesystem::path& path);
// Writes all three files so the directory is loadable by load_study.
void export_study(const StudyDataset& ds, const std::filesystem::path& root);

std::string scores_csv(const StudyDataset& ds);
std::string participants_csv(const StudyDataset& ds);
std::string stimuli_csv(const StudyDataset& ds);

// Selector for one stratum: {distortion kind | all} x {well | poor | any}.
struct Stratum {
  std::optional<Distortion> distortion;        // empty = all kinds
  std::optional<Classification> classification;  // empty = any

  friend bool operator==(const Stratum&, const Stratum&) = default;
};

// Parses "all:poor", "gaussian-blur:well", "all:any".
Stratum parse_stratum(std::string_view s);
std::string to_string(const Stratum& s);
bool matches(const Stratum& s, const StimulusRecord& r);

std::vector<StimulusRecord> stratify(const StudyDataset& ds,
                                     const Stratum& stratum);

// The 8 strata of the result tables: {all, 3 kinds} x {poor, well}.
std::vector<Stratum> table_strata();

}  // namespace xaimos
