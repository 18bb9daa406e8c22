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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "xaimos/npstats.hpp"
#include "xaimos/studydata.hpp"

namespace xaimos {

// ---------------------------------------------------------------------------
// Average opinion scores per (group, participant, method).

struct AosEntry {
  Group group = Group::kOffline;
  ParticipantId participant = 0;
  int method = 0;
  double aos = 0.0;
  int n_images = 0;  // rated images the average is taken over
};

struct AosTable {
  std::vector<AosEntry> entries;  // sorted by (group, participant, method)

  const AosEntry* find(ParticipantId participant, int method) const;
};

AosTable average_opinion_scores(const StudyDataset& ds);

// ---------------------------------------------------------------------------
// Outlier screening.

enum class OutlierPass { kSinglePass, kIterative };

struct OutlierConfig {
  double k_sigma = 2.0;
  npstats::StdMode std_mode = npstats::StdMode::kSample;
  OutlierPass pass = OutlierPass::kSinglePass;
};

struct OutlierFlag {
  ParticipantId participant = 0;
  Group group = Group::kOffline;
  int method = 0;
  double aos = 0.0;
  double group_mean = 0.0;
  double group_std = 0.0;
};

struct OutlierReport {
  std::vector<OutlierFlag> flagged;
  std::vector<ParticipantId> removed;           // sorted, unique
  std::vector<ParticipantId> surviving_offline;  // sorted
  std::vector<ParticipantId> surviving_online;   // sorted

  std::set<ParticipantId> surviving() const;
};

// Each group is screened independently. A participant whose AOS for any
// method lies more than k_sigma group standard deviations from the group
// mean is removed from the group entirely.
OutlierReport filter_outliers(const StudyDataset& ds, const AosTable& aos,
                              const OutlierConfig& cfg = {});

// ---------------------------------------------------------------------------
// MOS per (image, method).

struct MosEntry {
  ImageId image = 0;
  int method = 0;
  double mos = 0.0;
  std::optional<double> std;  // absent with fewer than two raters
  int n_raters = 0;
};

struct MosTable {
  std::vector<MethodId> methods;
  std::vector<MosEntry> entries;   // sorted by (image, method)
  std::vector<StimulusId> gaps;    // stimuli with no surviving rating

  const MosEntry* find(ImageId image, int method) const;
};

MosTable compute_mos(const StudyDataset& ds,
                     const std::set<ParticipantId>& raters,
                     npstats::StdMode std_mode = npstats::StdMode::kSample);

struct QuantizerConfig {
  double step = 0.0001;
};

// Delta * floor(x / Delta + 1/2), evaluated on the shortest decimal form of
// x and Delta in integer arithmetic so decimal ties such as 2.33335 round up
// regardless of binary representation error.
double quantize(double x, double step);
// Lattice index floor(x / Delta + 1/2) used as the category key.
std::int64_t quantize_index(double x, double step);

MosTable quantize_mos(const MosTable& mos, const QuantizerConfig& cfg = {});

// ---------------------------------------------------------------------------
// Homogeneity of the offline and online groups.

struct HomogeneityConfig {
  QuantizerConfig quantizer;
  std::uint64_t seed = 0;
  double pooling_min_expected = 5.0;
  int repeats = 1;  // >1 reports the draw with the median p-value
};

struct HomogeneityReport {
  npstats::TestReport test;
  int group_size = 0;  // N = min(|offline|, |online|)
  std::vector<ParticipantId> offline_used;
  std::vector<ParticipantId> online_used;
  Eigen::MatrixXd table;            // 2 x C pooled counts
  std::vector<double> category_upper;  // upper MOSQ bound of each pooled bin
  bool pooling_collapsed = false;
  std::uint64_t draw_seed = 0;
};

HomogeneityReport test_homogeneity(const StudyDataset& ds,
                                   const OutlierReport& groups,
                                   const HomogeneityConfig& cfg = {});

// Uniform draw of k ids without replacement; deterministic in seed.
std::vector<ParticipantId> seeded_subsample(std::vector<ParticipantId> ids,
                                            std::size_t k, std::uint64_t seed);

// Merges adjacent columns of a 2 x C table until each expected count meets
// the threshold. Returns the pooled table and, per pooled column, the index
// of the last source column it absorbed.
std::pair<Eigen::MatrixXd, std::vector<int>> pool_adjacent(
    const Eigen::MatrixXd& counts, double min_expected);

// ---------------------------------------------------------------------------
// Method comparison within a stratum.

struct PairResult {
  int method_a = 0;
  int method_b = 0;
  std::optional<npstats::TestReport> test;  // empty: not run
};

struct MethodSummary {
  int method = 0;
  double mean = 0.0;
  double std = 0.0;
  int n_images = 0;
};

struct ComparisonReport {
  Stratum stratum;
  std::vector<MethodId> methods;
  npstats::TestReport omnibus;
  std::vector<PairResult> posthoc;  // all C(k,2) pairs, in index order
  std::vector<MethodSummary> summaries;
  std::optional<int> winner;
  double alpha = 0.05;

  bool posthoc_run() const;
};

// Highest-mean method of a stratum whose omnibus test is significant; empty
// when the omnibus is not significant or the top mean is tied.
std::optional<int> select_winner(const ComparisonReport& report);

ComparisonReport compare_methods(
    const StudyDataset& ds, const MosTable& mos, const Stratum& stratum,
    double alpha = 0.05,
    npstats::StdMode std_mode = npstats::StdMode::kSample);

// ---------------------------------------------------------------------------
// Correlation with automatic metrics.

struct AutoMetrics {
  double iauc = 0.0;
  double dauc = 0.0;

  friend bool operator==(const AutoMetrics&, const AutoMetrics&) = default;
};

using MetricsTable = std::map<std::pair<ImageId, std::string>, AutoMetrics>;

MetricsTable load_metrics(const std::filesystem::path& path);
std::string metrics_csv(const MetricsTable& metrics);
void write_metrics(const MetricsTable& metrics, const std::filesystem::path& path);

enum class CorrelationScope { kOverall, kPerMethod };

struct CorrelationRow {
  std::string scope;   // "overall" or a method name
  std::string metric;  // "dauc" or "iauc"
  npstats::TestReport test;
};

std::vector<CorrelationRow> correlate_with_automatic(const MosTable& mos,
                                                     const MetricsTable& metrics,
                                                     CorrelationScope scope);

}  // namespace xaimos
