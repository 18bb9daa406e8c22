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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "quantizer_oracle.hpp"
#include "study_builder.hpp"
#include "test_util.hpp"
#include "xaimos/errors.hpp"
#include "xaimos/mospipeline.hpp"
#include "xaimos/synthetic.hpp"

namespace xaimos {
namespace {

using testing::StudyBuilder;

const std::vector<std::string> kAbc{"A", "B", "C"};

TEST(Aos, MeanOverRatedImages) {
  StudyBuilder b(kAbc, 3);
  const auto p = b.add(Group::kOffline);
  b.rate(p, 1, 0, 3).rate(p, 2, 0, 4).rate(p, 3, 0, 5);
  b.rate(p, 1, 1, 5).rate(p, 2, 1, 5).rate(p, 3, 1, std::nullopt);
  const auto aos = average_opinion_scores(b.build());
  ASSERT_NE(aos.find(p, 0), nullptr);
  EXPECT_DOUBLE_EQ(aos.find(p, 0)->aos, 4.0);
  EXPECT_EQ(aos.find(p, 0)->n_images, 3);
  EXPECT_DOUBLE_EQ(aos.find(p, 1)->aos, 5.0);
  EXPECT_EQ(aos.find(p, 1)->n_images, 2);
  // Nothing rated for C: no entry.
  EXPECT_EQ(aos.find(p, 2), nullptr);
}

TEST(Aos, UniformRatings) {
  StudyBuilder b(kAbc, 2);
  for (int j = 0; j < 4; ++j) {
    const auto p = b.add(j % 2 ? Group::kOnline : Group::kOffline);
    for (int i = 1; i <= 2; ++i) {
      for (int k = 0; k < 3; ++k) b.rate(p, i, k, 2);
    }
  }
  const auto aos = average_opinion_scores(b.build());
  EXPECT_EQ(aos.entries.size(), 12u);
  for (const auto& e : aos.entries) EXPECT_EQ(e.aos, 2.0);
}

// One image per method, so each rater's AOS is their single score.
StudyBuilder single_image_study(const std::vector<int>& offline_a,
                                const std::vector<int>& online_a = {}) {
  StudyBuilder b(kAbc, 1);
  for (const auto* g : {&offline_a, &online_a}) {
    for (int s : *g) {
      const auto p = b.add(g == &offline_a ? Group::kOffline : Group::kOnline);
      b.rate(p, 1, 0, s).rate(p, 1, 1, 3).rate(p, 1, 2, 3);
    }
  }
  return b;
}

TEST(Outliers, FlagsSixthRater) {
  const auto ds = single_image_study({3, 3, 3, 3, 3, 5}).build();
  const auto report = filter_outliers(ds, average_opinion_scores(ds));
  ASSERT_EQ(report.flagged.size(), 1u);
  const auto& f = report.flagged[0];
  EXPECT_EQ(f.participant, 6);
  EXPECT_EQ(f.method, 0);
  const std::vector<double> v{3, 3, 3, 3, 3, 5};
  EXPECT_NEAR(f.group_mean, oracle::mean(v), 1e-12);
  EXPECT_NEAR(f.group_std, oracle::sample_std(v), 1e-12);
  EXPECT_NEAR(f.group_mean, 3.3333, 1e-4);
  EXPECT_NEAR(f.group_std, 0.8165, 1e-4);
  EXPECT_GT(std::fabs(f.aos - f.group_mean), 2 * f.group_std);
  EXPECT_EQ(report.removed, std::vector<ParticipantId>{6});
  EXPECT_EQ(report.surviving_offline, (std::vector<ParticipantId>{1, 2, 3, 4, 5}));
  EXPECT_TRUE(report.surviving_online.empty());
}

TEST(Outliers, AllEqualFlagsNobody) {
  const auto ds = single_image_study({4, 4, 4, 4}).build();
  const auto report = filter_outliers(ds, average_opinion_scores(ds));
  EXPECT_TRUE(report.flagged.empty());
  EXPECT_EQ(report.surviving_offline.size(), 4u);
}

TEST(Outliers, GroupsAreIndependent) {
  const auto same = single_image_study({3, 3, 3, 3, 3, 5}, {3, 3, 3, 3, 3, 5}).build();
  const auto r1 = filter_outliers(same, average_opinion_scores(same));
  EXPECT_EQ(r1.removed, (std::vector<ParticipantId>{6, 12}));

  // Changing the online group leaves the offline verdicts unchanged.
  const auto other = single_image_study({3, 3, 3, 3, 3, 5}, {1, 5, 1, 5}).build();
  const auto r2 = filter_outliers(other, average_opinion_scores(other));
  EXPECT_EQ(r2.surviving_offline, r1.surviving_offline);
  EXPECT_EQ(r2.surviving_online, (std::vector<ParticipantId>{7, 8, 9, 10}));
}

TEST(Outliers, GroupTooSmall) {
  const auto ds = single_image_study({3, 5}).build();
  EXPECT_THROW(filter_outliers(ds, average_opinion_scores(ds)), ValidationError);
}

TEST(Outliers, SinglePassVersusIterative) {
  // After removing the 9, the 5 becomes an outlier of the remaining group.
  const std::vector<int> v{1, 1, 1, 1, 1, 1, 1, 1, 2, 5};
  const auto ds = single_image_study(v).build();
  const auto aos = average_opinion_scores(ds);
  const auto once = filter_outliers(ds, aos);
  OutlierConfig cfg;
  cfg.pass = OutlierPass::kIterative;
  const auto iter = filter_outliers(ds, aos, cfg);
  EXPECT_EQ(once.removed, std::vector<ParticipantId>{10});
  EXPECT_EQ(iter.removed, (std::vector<ParticipantId>{9, 10}));
}

TEST(Outliers, FlagInvariantHolds) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    synthetic::Config cfg;
    cfg.offline = 8;
    cfg.online = 8;
    cfg.images = 6;
    cfg.balanced_totals = false;
    cfg.seed = rng();
    const auto ds = synthetic::generate(cfg);
    const auto report = filter_outliers(ds, average_opinion_scores(ds));
    for (const auto& f : report.flagged) {
      EXPECT_GT(std::fabs(f.aos - f.group_mean), 2 * f.group_std);
    }
  }
}

TEST(Outliers, RaterAtGroupMeanNeverRemoved) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 4 + trial % 9;
    StudyBuilder b(kAbc, 1);
    AosTable aos;
    std::vector<ParticipantId> ids;
    for (int j = 0; j < n; ++j) ids.push_back(b.add(Group::kOffline));
    const auto ds = b.build();
    for (int k = 0; k < 3; ++k) {
      double sum = 0.0;
      for (int j = 0; j + 1 < n; ++j) {
        const double v = u(rng);
        sum += v;
        aos.entries.push_back({Group::kOffline, ids[static_cast<std::size_t>(j)], k, v, 1});
      }
      aos.entries.push_back({Group::kOffline, ids.back(), k, sum / (n - 1), 1});
    }
    const auto report = filter_outliers(ds, aos);
    EXPECT_TRUE(std::count(report.surviving_offline.begin(),
                           report.surviving_offline.end(), ids.back()));
  }
}

TEST(Mos, MeanAndSampleStd) {
  StudyBuilder b(kAbc, 1);
  const int scores[] = {5, 4, 4};
  std::set<ParticipantId> raters;
  for (int s : scores) {
    const auto p = b.add(Group::kOffline);
    raters.insert(p);
    b.rate(p, 1, 0, s);
  }
  const auto p = b.add(Group::kOnline);
  b.rate(p, 1, 1, 3);
  raters.insert(p);
  const auto mos = compute_mos(b.build(), raters);
  const auto* e = mos.find(1, 0);
  ASSERT_NE(e, nullptr);
  EXPECT_NEAR(e->mos, 13.0 / 3.0, 1e-12);
  ASSERT_TRUE(e->std.has_value());
  EXPECT_NEAR(*e->std, oracle::sample_std({5, 4, 4}), 1e-12);
  EXPECT_NEAR(*e->std, 0.5774, 1e-4);
  EXPECT_EQ(e->n_raters, 3);

  const auto* single = mos.find(1, 1);
  ASSERT_NE(single, nullptr);
  EXPECT_EQ(single->mos, 3.0);
  EXPECT_FALSE(single->std.has_value());
  EXPECT_EQ(mos.gaps, std::vector<StimulusId>{3});
}

TEST(Mos, OnlySurvivorsCount) {
  StudyBuilder b(kAbc, 1);
  const auto p1 = b.add(Group::kOffline);
  const auto p2 = b.add(Group::kOffline);
  for (int k = 0; k < 3; ++k) b.rate(p1, 1, k, 2).rate(p2, 1, k, 5);
  const auto mos = compute_mos(b.build(), {p1});
  for (const auto& e : mos.entries) EXPECT_EQ(e.mos, 2.0);
  EXPECT_THROW(compute_mos(b.build(), {}), ValidationError);
}

TEST(Mos, AgreementGivesZeroStdAndBounds) {
  synthetic::Config cfg;
  cfg.offline = 4;
  cfg.online = 4;
  cfg.images = 20;
  cfg.noise_sd = 0.0;
  cfg.balanced_totals = false;
  const auto ds = synthetic::generate(cfg);
  std::set<ParticipantId> all;
  for (const auto& p : ds.participants) all.insert(p.participant_id);
  const auto mos = compute_mos(ds, all);
  EXPECT_EQ(mos.entries.size(), 60u);
  for (const auto& e : mos.entries) {
    ASSERT_TRUE(e.std.has_value());
    EXPECT_EQ(*e.std, 0.0);
  }

  cfg.noise_sd = 1.5;
  const auto noisy = synthetic::generate(cfg);
  for (const auto& e : compute_mos(noisy, all).entries) {
    EXPECT_GE(e.mos, 1.0);
    EXPECT_LE(e.mos, 5.0);
  }
}

TEST(Quantizer, Examples) {
  EXPECT_EQ(quantize(2.33335, 0.0001), 2.3334);
  EXPECT_EQ(quantize(3.0, 0.0001), 3.0);
  EXPECT_EQ(quantize(2.33334, 0.0001), 2.3333);
  EXPECT_EQ(quantize(1.0 / 3.0, 0.0001), 0.3333);
  EXPECT_EQ(quantize(0.25, 0.5), 0.5);
  EXPECT_EQ(quantize_index(2.33335, 0.0001), 23334);
  EXPECT_THROW(quantize(1.0, 0.0), ValidationError);
  EXPECT_THROW(quantize(1.0, -0.1), ValidationError);
}

TEST(Quantizer, IdempotentAndBounded) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  const double step = 0.0001;
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng);
    const double q = quantize(x, step);
    EXPECT_EQ(quantize(q, step), q);
    EXPECT_TRUE(oracle::within_half_step(x, quantize_index(x, step))) << x;
    EXPECT_EQ(q, oracle::lattice_value(quantize_index(x, step)));
  }
  // MOS values are ratios of small integers; n = 32 hits exact midpoints.
  for (int n = 1; n <= 40; ++n) {
    for (int k = n; k <= 5 * n; ++k) {
      const double x = static_cast<double>(k) / n;
      const double q = quantize(x, step);
      EXPECT_EQ(quantize(q, step), q);
      EXPECT_TRUE(oracle::within_half_step(x, quantize_index(x, step))) << k << "/" << n;
      EXPECT_EQ(q, oracle::lattice_value(quantize_index(x, step)));
    }
  }
}

TEST(Quantizer, AppliesToTable) {
  MosTable t;
  t.entries.push_back({1, 0, 2.33335, 0.1, 2});
  t.entries.push_back({1, 1, 13.0 / 3.0, std::nullopt, 1});
  const auto q = quantize_mos(t);
  EXPECT_EQ(q.entries[0].mos, 2.3334);
  EXPECT_EQ(q.entries[1].mos, 4.3333);
  EXPECT_EQ(q.entries[0].std, 0.1);
}

TEST(Pooling, MergesIntoLastBin) {
  Eigen::MatrixXd c(2, 3);
  c << 5, 5, 1,
       5, 5, 1;
  const auto [pooled, last] = pool_adjacent(c, 5.0);
  ASSERT_EQ(pooled.cols(), 2);
  EXPECT_EQ(pooled(0, 1), 6.0);
  EXPECT_EQ(last, (std::vector<int>{0, 2}));

  Eigen::MatrixXd sparse(2, 3);
  sparse << 1, 1, 10,
            1, 1, 10;
  EXPECT_EQ(pool_adjacent(sparse, 5.0).first.cols(), 1);
}

TEST(Pooling, ExpectedCountsReachMinimum) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> cell(0, 6);
  for (int trial = 0; trial < 300; ++trial) {
    Eigen::MatrixXd c(2, 2 + trial % 15);
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = cell(rng);
    if (c.row(0).sum() == 0 || c.row(1).sum() == 0) continue;
    const auto [pooled, last] = pool_adjacent(c, 5.0);
    EXPECT_EQ(pooled.sum(), c.sum());
    EXPECT_EQ(last.back(), c.cols() - 1);
    if (pooled.cols() < 2) continue;
    const Eigen::VectorXd rows = pooled.rowwise().sum();
    for (Eigen::Index j = 0; j < pooled.cols(); ++j) {
      EXPECT_GE(rows.minCoeff() * pooled.col(j).sum() / pooled.sum(), 5.0);
    }
  }
}

// Online rater j copies offline rater j.
StudyDataset mirrored_groups(int n, std::uint64_t seed) {
  synthetic::Config cfg;
  cfg.offline = n;
  cfg.online = n;
  cfg.balanced_totals = false;
  cfg.seed = seed;
  auto ds = synthetic::generate(cfg);
  std::map<std::pair<ParticipantId, StimulusId>, std::optional<int>> offline;
  for (const auto& o : ds.scores) {
    if (o.participant_id <= n) offline[{o.participant_id, o.stimulus_id}] = o.score;
  }
  for (auto& o : ds.scores) {
    if (o.participant_id > n) o.score = offline.at({o.participant_id - n, o.stimulus_id});
  }
  return ds;
}

OutlierReport everyone(const StudyDataset& ds) {
  OutlierReport r;
  for (const auto& p : ds.participants) {
    (p.group == Group::kOffline ? r.surviving_offline : r.surviving_online)
        .push_back(p.participant_id);
  }
  return r;
}

TEST(Homogeneity, IdenticalGroups) {
  const auto ds = mirrored_groups(6, 9);
  const auto report = test_homogeneity(ds, everyone(ds));
  EXPECT_EQ(report.test.statistic, 0.0);
  EXPECT_EQ(report.test.p_value, 1.0);
  EXPECT_GE(report.table.cols(), 2);
  EXPECT_FALSE(report.pooling_collapsed);
  EXPECT_EQ(report.group_size, 6);
  EXPECT_EQ(report.table.row(0), report.table.row(1));
}

TEST(Homogeneity, SeededSubsampleIsDeterministic) {
  synthetic::Config cfg;
  cfg.offline = 15;
  cfg.online = 10;
  cfg.balanced_totals = false;
  const auto ds = synthetic::generate(cfg);
  HomogeneityConfig hc;
  hc.seed = 42;
  const auto a = test_homogeneity(ds, everyone(ds), hc);
  const auto b = test_homogeneity(ds, everyone(ds), hc);
  EXPECT_EQ(a.group_size, 10);
  EXPECT_EQ(a.offline_used.size(), 10u);
  EXPECT_EQ(a.online_used.size(), 10u);
  EXPECT_EQ(a.offline_used, b.offline_used);
  EXPECT_EQ(a.test.statistic, b.test.statistic);
  EXPECT_EQ(a.test.p_value, b.test.p_value);
  EXPECT_EQ(a.table, b.table);

  std::set<std::vector<ParticipantId>> draws;
  for (std::uint64_t s = 0; s < 10; ++s) {
    hc.seed = s;
    draws.insert(test_homogeneity(ds, everyone(ds), hc).offline_used);
  }
  EXPECT_GT(draws.size(), 1u);
}

TEST(Homogeneity, SubsampleIsUniformWithoutReplacement) {
  std::vector<int> hits(10, 0);
  std::vector<ParticipantId> ids{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  for (std::uint64_t s = 0; s < 5000; ++s) {
    const auto pick = seeded_subsample(ids, 3, s);
    ASSERT_EQ(std::set<ParticipantId>(pick.begin(), pick.end()).size(), 3u);
    for (auto p : pick) ++hits[static_cast<std::size_t>(p - 1)];
  }
  // Each id expected 1500 times; 5 sigma is about 160.
  for (int h : hits) EXPECT_NEAR(h, 1500, 160);
}

TEST(Homogeneity, CollapsedPoolingIsDegenerate) {
  StudyBuilder b(kAbc, 1);
  for (int j = 0; j < 4; ++j) {
    const auto p = b.add(j < 2 ? Group::kOffline : Group::kOnline);
    for (int k = 0; k < 3; ++k) b.rate(p, 1, k, 3);
  }
  const auto ds = b.build();
  const auto report = test_homogeneity(ds, everyone(ds));
  EXPECT_TRUE(report.pooling_collapsed);
  EXPECT_TRUE(report.test.degenerate);
  EXPECT_EQ(report.test.statistic, 0.0);
  EXPECT_EQ(report.test.p_value, 1.0);
}

TEST(Homogeneity, EmptyGroupRejected) {
  const auto ds = single_image_study({3, 3, 3}).build();
  EXPECT_THROW(test_homogeneity(ds, everyone(ds)), ValidationError);
}

TEST(Homogeneity, RepeatsReportMedianDraw) {
  synthetic::Config cfg;
  cfg.offline = 12;
  cfg.online = 8;
  cfg.balanced_totals = false;
  const auto ds = synthetic::generate(cfg);
  HomogeneityConfig hc;
  hc.seed = 100;
  hc.repeats = 5;
  const auto median = test_homogeneity(ds, everyone(ds), hc);
  std::vector<double> ps;
  for (int r = 0; r < 5; ++r) {
    HomogeneityConfig one = hc;
    one.repeats = 1;
    one.seed = hc.seed + static_cast<std::uint64_t>(r);
    ps.push_back(test_homogeneity(ds, everyone(ds), one).test.p_value);
  }
  std::sort(ps.begin(), ps.end());
  EXPECT_EQ(median.test.p_value, ps[2]);
}

// Builds a MOS table directly, one image per listed value.
std::pair<StudyDataset, MosTable> mos_lists(const std::vector<std::vector<double>>& lists) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < lists.size(); ++k) names.push_back(std::string(1, char('A' + k)));
  const int n = static_cast<int>(lists[0].size());
  StudyBuilder b(names, n);
  auto ds = b.build();
  MosTable mos;
  mos.methods = ds.methods;
  for (int i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < lists.size(); ++k) {
      mos.entries.push_back({i + 1, static_cast<int>(k),
                             lists[k][static_cast<std::size_t>(i)], std::nullopt, 1});
    }
  }
  return {ds, mos};
}

const Stratum kAll = parse_stratum("all:any");

TEST(Compare, AllOnesNotRun) {
  const auto [ds, mos] = mos_lists({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}});
  const auto r = compare_methods(ds, mos, kAll);
  EXPECT_EQ(r.omnibus.p_value, 1.0);
  EXPECT_FALSE(r.posthoc_run());
  EXPECT_EQ(r.posthoc.size(), 3u);
  EXPECT_FALSE(r.winner.has_value());
}

TEST(Compare, SeparatedListsPickHighest) {
  const auto [ds, mos] = mos_lists({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  const auto r = compare_methods(ds, mos, kAll);
  EXPECT_NEAR(r.omnibus.statistic, 7.2, 1e-9);
  EXPECT_NEAR(r.omnibus.p_value, 0.0273, 5e-4);
  ASSERT_TRUE(r.posthoc_run());
  for (const auto& p : r.posthoc) {
    ASSERT_TRUE(p.test.has_value());
    EXPECT_NEAR(p.test->p_value, 0.1, 1e-12);
  }
  ASSERT_TRUE(r.winner.has_value());
  EXPECT_EQ(*r.winner, 2);
  EXPECT_NEAR(r.summaries[2].mean, 8.0, 1e-12);
  EXPECT_NEAR(r.summaries[2].std, 1.0, 1e-12);
}

TEST(Compare, TopTieHasNoWinner) {
  const auto [ds, mos] = mos_lists({{1, 2, 3, 4}, {7, 8, 9, 10}, {10, 9, 8, 7}});
  const auto r = compare_methods(ds, mos, kAll);
  EXPECT_LT(r.omnibus.p_value, 0.05);
  EXPECT_FALSE(r.winner.has_value());
}

TEST(Compare, StratumTooSmall) {
  const auto [ds, mos] = mos_lists({{1}, {2}, {3}});
  EXPECT_THROW(compare_methods(ds, mos, kAll), DegenerateError);
  const auto [ds2, mos2] = mos_lists({{1, 2}, {2, 3}});
  EXPECT_THROW(compare_methods(ds2, mos2, parse_stratum("all:poor")), DegenerateError);
}

TEST(Compare, StratumSelectsImages) {
  synthetic::Config cfg;
  cfg.offline = 5;
  cfg.online = 5;
  cfg.balanced_totals = false;
  const auto ds = synthetic::generate(cfg);
  std::set<ParticipantId> all;
  for (const auto& p : ds.participants) all.insert(p.participant_id);
  const auto mos = compute_mos(ds, all);
  const auto poor = compare_methods(ds, mos, parse_stratum("all:poor"));
  const auto any = compare_methods(ds, mos, kAll);
  EXPECT_EQ(poor.summaries[0].n_images, 25);
  EXPECT_EQ(any.summaries[0].n_images, 50);
  const auto blur = compare_methods(ds, mos, parse_stratum("gaussian-blur:well"));
  EXPECT_EQ(blur.summaries[0].n_images,
            static_cast<int>(stratify(ds, parse_stratum("gaussian-blur:well")).size()) / 3);
}

TEST(Compare, ConstantShiftInvariance) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    synthetic::Config cfg;
    cfg.offline = 5;
    cfg.online = 5;
    cfg.images = 30;
    cfg.method_shift = {0.0, 0.4, 0.0};
    cfg.balanced_totals = false;
    cfg.seed = seed;
    const auto ds = synthetic::generate(cfg);
    std::set<ParticipantId> all;
    for (const auto& p : ds.participants) all.insert(p.participant_id);
    const auto mos = compute_mos(ds, all);
    MosTable shifted = mos;
    for (auto& e : shifted.entries) e.mos += 1.0;
    const auto a = compare_methods(ds, mos, kAll);
    const auto b = compare_methods(ds, shifted, kAll);
    EXPECT_NEAR(a.omnibus.statistic, b.omnibus.statistic, 1e-12);
    EXPECT_NEAR(a.omnibus.p_value, b.omnibus.p_value, 1e-12);
    EXPECT_EQ(a.posthoc_run(), b.posthoc_run());
    for (std::size_t i = 0; i < a.posthoc.size(); ++i) {
      ASSERT_EQ(a.posthoc[i].test.has_value(), b.posthoc[i].test.has_value());
      if (a.posthoc[i].test) {
        EXPECT_NEAR(a.posthoc[i].test->statistic, b.posthoc[i].test->statistic, 1e-12);
        EXPECT_NEAR(a.posthoc[i].test->p_value, b.posthoc[i].test->p_value, 1e-12);
      }
    }
    EXPECT_EQ(a.winner, b.winner);
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_NEAR(b.summaries[k].mean - a.summaries[k].mean, 1.0, 1e-12);
    }
  }
}

TEST(Compare, DetectsPlantedShift) {
  int detected = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    synthetic::Config cfg;
    cfg.offline = 10;
    cfg.online = 10;
    cfg.images = 50;
    cfg.method_shift = {0.0, 1.0, 0.0};
    cfg.balanced_totals = false;
    cfg.seed = seed;
    const auto ds = synthetic::generate(cfg);
    std::set<ParticipantId> all;
    for (const auto& p : ds.participants) all.insert(p.participant_id);
    const auto r = compare_methods(ds, compute_mos(ds, all), kAll);
    if (r.omnibus.p_value < 0.01 && r.winner == 1) ++detected;
  }
  EXPECT_GE(detected, 95);
}

MetricsTable metrics_from(const MosTable& mos, double (*f)(double)) {
  MetricsTable m;
  for (const auto& e : mos.entries) {
    const double v = f(e.mos);
    m[{e.image, mos.methods[static_cast<std::size_t>(e.method)].name}] = {v, v};
  }
  return m;
}

TEST(Correlate, IdentityAndReversal) {
  synthetic::Config cfg;
  cfg.offline = 4;
  cfg.online = 4;
  cfg.images = 20;
  cfg.balanced_totals = false;
  const auto ds = synthetic::generate(cfg);
  std::set<ParticipantId> all;
  for (const auto& p : ds.participants) all.insert(p.participant_id);
  const auto mos = compute_mos(ds, all);

  const auto same = correlate_with_automatic(
      mos, metrics_from(mos, [](double x) { return x; }), CorrelationScope::kOverall);
  ASSERT_EQ(same.size(), 2u);
  EXPECT_EQ(same[0].scope, "overall");
  EXPECT_EQ(same[0].metric, "dauc");
  EXPECT_EQ(same[1].metric, "iauc");
  for (const auto& r : same) EXPECT_NEAR(r.test.statistic, 1.0, 1e-12);

  const auto rev = correlate_with_automatic(
      mos, metrics_from(mos, [](double x) { return 6.0 - x; }),
      CorrelationScope::kPerMethod);
  ASSERT_EQ(rev.size(), 6u);
  EXPECT_EQ(rev[2].scope, "mlfem");
  for (const auto& r : rev) EXPECT_NEAR(r.test.statistic, -1.0, 1e-12);
}

TEST(Correlate, MismatchedKeys) {
  const auto [ds, mos] = mos_lists({{1, 2, 3}, {2, 3, 4}});
  auto m = metrics_from(mos, [](double x) { return x; });
  auto missing = m;
  missing.erase(missing.begin());
  EXPECT_THROW(correlate_with_automatic(mos, missing, CorrelationScope::kOverall),
               ValidationError);
  auto extra = m;
  extra[{99, "A"}] = {0.1, 0.2};
  EXPECT_THROW(correlate_with_automatic(mos, extra, CorrelationScope::kOverall),
               ValidationError);
}

TEST(Metrics, CsvRoundTrip) {
  testing::TempDir dir;
  MetricsTable m;
  m[{1, "fem"}] = {0.25, 0.125};
  m[{2, "grad-cam"}] = {0.1, 0.7};
  write_metrics(m, dir / "metrics.csv");
  EXPECT_EQ(load_metrics(dir / "metrics.csv"), m);
  testing::write_file(dir / "bad.csv", "image_id,method,iauc,dauc\n1,fem,0.1,0.2\n1,fem,0.3,0.4\n");
  try {
    load_metrics(dir / "bad.csv");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

}  // namespace
}  // namespace xaimos
