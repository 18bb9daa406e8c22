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

#include "xaimos/mospipeline.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <tuple>
#include <unordered_map>

#include "xaimos/csv.hpp"
#include "xaimos/text.hpp"

namespace xaimos {

// ---------------------------------------------------------------------------

const AosEntry* AosTable::find(ParticipantId participant, int method) const {
  for (const auto& e : entries) {
    if (e.participant == participant && e.method == method) return &e;
  }
  return nullptr;
}

AosTable average_opinion_scores(const StudyDataset& ds) {
  std::unordered_map<StimulusId, int> method_of;
  for (const auto& s : ds.stimuli) method_of[s.stimulus_id] = s.method.index;
  std::unordered_map<ParticipantId, Group> group_of;
  for (const auto& p : ds.participants) group_of[p.participant_id] = p.group;

  // (group, participant, method) -> (sum, count)
  std::map<std::tuple<int, ParticipantId, int>, std::pair<double, int>> acc;
  for (const auto& o : ds.scores) {
    if (!o.score) continue;
    const auto key = std::make_tuple(static_cast<int>(group_of.at(o.participant_id)),
                                     o.participant_id, method_of.at(o.stimulus_id));
    auto& [sum, count] = acc[key];
    sum += *o.score;
    ++count;
  }
  AosTable table;
  for (const auto& [key, v] : acc) {
    const auto& [g, pid, k] = key;
    table.entries.push_back({static_cast<Group>(g), pid, k,
                             v.first / v.second, v.second});
  }
  return table;
}

// ---------------------------------------------------------------------------

std::set<ParticipantId> OutlierReport::surviving() const {
  std::set<ParticipantId> out(surviving_offline.begin(), surviving_offline.end());
  out.insert(surviving_online.begin(), surviving_online.end());
  return out;
}

OutlierReport filter_outliers(const StudyDataset& ds, const AosTable& aos,
                              const OutlierConfig& cfg) {
  OutlierReport report;
  const int n_methods = static_cast<int>(ds.methods.size());

  for (Group group : {Group::kOffline, Group::kOnline}) {
    std::set<ParticipantId> members;
    for (const auto& p : ds.participants) {
      if (p.group == group) members.insert(p.participant_id);
    }
    std::set<ParticipantId> removed;
    bool changed = true;
    while (changed) {
      changed = false;
      std::vector<OutlierFlag> round_flags;
      for (int k = 0; k < n_methods; ++k) {
        std::vector<const AosEntry*> rows;
        for (const auto& e : aos.entries) {
          if (e.group == group && e.method == k && members.count(e.participant) &&
              !removed.count(e.participant)) {
            rows.push_back(&e);
          }
        }
        if (rows.empty()) continue;
        if (rows.size() < 3) {
          throw ValidationError("outlier screen: group " +
                                std::string(to_string(group)) + " has only " +
                                std::to_string(rows.size()) +
                                " participants for method " + ds.methods[k].name);
        }
        Eigen::VectorXd values(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) values(i) = rows[i]->aos;
        const auto [m, sd] = npstats::mean_std(values, cfg.std_mode);
        for (const auto* e : rows) {
          if (std::fabs(e->aos - m) > cfg.k_sigma * sd) {
            round_flags.push_back({e->participant, group, k, e->aos, m, sd});
          }
        }
      }
      for (const auto& f : round_flags) {
        if (removed.insert(f.participant).second) changed = true;
        report.flagged.push_back(f);
      }
      if (cfg.pass == OutlierPass::kSinglePass) break;
    }
    auto& surviving = group == Group::kOffline ? report.surviving_offline
                                               : report.surviving_online;
    for (auto pid : members) {
      if (!removed.count(pid)) surviving.push_back(pid);
    }
    report.removed.insert(report.removed.end(), removed.begin(), removed.end());
  }
  std::sort(report.removed.begin(), report.removed.end());
  return report;
}

// ---------------------------------------------------------------------------

const MosEntry* MosTable::find(ImageId image, int method) const {
  auto it = std::lower_bound(entries.begin(), entries.end(),
                             std::make_pair(image, method),
                             [](const MosEntry& e, const std::pair<ImageId, int>& k) {
                               return std::make_pair(e.image, e.method) < k;
                             });
  if (it == entries.end() || it->image != image || it->method != method) {
    return nullptr;
  }
  return &*it;
}

MosTable compute_mos(const StudyDataset& ds,
                     const std::set<ParticipantId>& raters,
                     npstats::StdMode std_mode) {
  if (raters.empty()) throw ValidationError("compute_mos: no surviving raters");
  std::unordered_map<StimulusId, std::vector<double>> by_stimulus;
  for (const auto& o : ds.scores) {
    if (o.score && raters.count(o.participant_id)) {
      by_stimulus[o.stimulus_id].push_back(*o.score);
    }
  }
  MosTable table;
  table.methods = ds.methods;
  for (const auto& s : ds.stimuli) {
    auto it = by_stimulus.find(s.stimulus_id);
    if (it == by_stimulus.end()) {
      table.gaps.push_back(s.stimulus_id);
      continue;
    }
    const Eigen::Map<const Eigen::VectorXd> v(
        it->second.data(), static_cast<Eigen::Index>(it->second.size()));
    MosEntry e;
    e.image = s.image_id;
    e.method = s.method.index;
    e.n_raters = static_cast<int>(v.size());
    e.mos = v.mean();
    if (v.size() >= 2) e.std = npstats::mean_std(v, std_mode).std;
    table.entries.push_back(e);
  }
  std::sort(table.entries.begin(), table.entries.end(),
            [](const MosEntry& a, const MosEntry& b) {
              return std::tie(a.image, a.method) < std::tie(b.image, b.method);
            });
  std::sort(table.gaps.begin(), table.gaps.end());
  return table;
}

// ---------------------------------------------------------------------------

namespace {

using i128 = __int128;

struct Decimal {
  i128 mantissa = 0;  // value = mantissa * 10^exponent
  int exponent = 0;
};

Decimal to_decimal(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x,
                                 std::chars_format::scientific);
  Decimal d;
  int frac_digits = 0;
  bool in_frac = false;
  bool negative = false;
  const char* p = buf;
  if (*p == '-') {
    negative = true;
    ++p;
  }
  for (; p < end && *p != 'e'; ++p) {
    if (*p == '.') {
      in_frac = true;
      continue;
    }
    d.mantissa = d.mantissa * 10 + (*p - '0');
    if (in_frac) ++frac_digits;
  }
  int exp10 = 0;
  if (p < end) std::from_chars(p + 1 + (p[1] == '+' ? 1 : 0), end, exp10);
  d.exponent = exp10 - frac_digits;
  if (negative) d.mantissa = -d.mantissa;
  return d;
}

i128 pow10(int n) {
  i128 v = 1;
  while (n-- > 0) v *= 10;
  return v;
}

i128 floor_div(i128 num, i128 den) {
  i128 q = num / den;
  if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
  return q;
}

std::string i128_to_string(i128 v) {
  if (v == 0) return "0";
  const bool negative = v < 0;
  std::string s;
  while (v != 0) {
    int digit = static_cast<int>(v % 10);
    s.push_back(static_cast<char>('0' + (negative ? -digit : digit)));
    v /= 10;
  }
  if (negative) s.push_back('-');
  std::reverse(s.begin(), s.end());
  return s;
}

constexpr int kMaxScale = 30;

}  // namespace

std::int64_t quantize_index(double x, double step) {
  if (!(step > 0) || !std::isfinite(step)) {
    throw ValidationError("quantizer step must be positive");
  }
  if (!std::isfinite(x)) throw ValidationError("quantize: non-finite input");
  Decimal xd = to_decimal(x);
  Decimal sd = to_decimal(step);
  const int e = std::min(xd.exponent, sd.exponent);
  const int sx = xd.exponent - e;
  const int ss = sd.exponent - e;
  if (sx > kMaxScale || ss > kMaxScale) {
    return static_cast<std::int64_t>(
        std::floor(static_cast<long double>(x) / step + 0.5L));
  }
  const i128 xm = xd.mantissa * pow10(sx);
  const i128 sm = sd.mantissa * pow10(ss);
  return static_cast<std::int64_t>(floor_div(2 * xm + sm, 2 * sm));
}

double quantize(double x, double step) {
  const std::int64_t q = quantize_index(x, step);
  const Decimal sd = to_decimal(step);
  const std::string repr =
      i128_to_string(static_cast<i128>(q) * sd.mantissa) + "e" +
      std::to_string(sd.exponent);
  double out = 0.0;
  std::from_chars(repr.data(), repr.data() + repr.size(), out);
  return out;
}

MosTable quantize_mos(const MosTable& mos, const QuantizerConfig& cfg) {
  MosTable out = mos;
  for (auto& e : out.entries) e.mos = quantize(e.mos, cfg.step);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Unbiased draw from [0, n).
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

}  // namespace

std::vector<ParticipantId> seeded_subsample(std::vector<ParticipantId> ids,
                                            std::size_t k, std::uint64_t seed) {
  std::sort(ids.begin(), ids.end());
  if (k >= ids.size()) return ids;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + uniform_below(rng, ids.size() - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(k);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::pair<Eigen::MatrixXd, std::vector<int>> pool_adjacent(
    const Eigen::MatrixXd& counts, double min_expected) {
  const Eigen::VectorXd row_sums = counts.rowwise().sum();
  const double total = row_sums.sum();
  const double min_row = row_sums.minCoeff();
  std::vector<Eigen::VectorXd> bins;
  std::vector<int> last;
  Eigen::VectorXd current = Eigen::VectorXd::Zero(counts.rows());
  bool open = false;
  for (Eigen::Index c = 0; c < counts.cols(); ++c) {
    current += counts.col(c);
    open = true;
    if (min_row * current.sum() / total >= min_expected) {
      bins.push_back(current);
      last.push_back(static_cast<int>(c));
      current.setZero();
      open = false;
    }
  }
  if (open) {
    if (bins.empty()) {
      bins.push_back(current);
    } else {
      bins.back() += current;
    }
    if (last.empty()) {
      last.push_back(static_cast<int>(counts.cols() - 1));
    } else {
      last.back() = static_cast<int>(counts.cols() - 1);
    }
  }
  Eigen::MatrixXd pooled(counts.rows(), static_cast<Eigen::Index>(bins.size()));
  for (std::size_t i = 0; i < bins.size(); ++i) {
    pooled.col(static_cast<Eigen::Index>(i)) = bins[i];
  }
  return {pooled, last};
}

namespace {

HomogeneityReport homogeneity_draw(const StudyDataset& ds,
                                   const OutlierReport& groups,
                                   const HomogeneityConfig& cfg,
                                   std::uint64_t seed) {
  HomogeneityReport report;
  report.draw_seed = seed;
  const auto& off = groups.surviving_offline;
  const auto& on = groups.surviving_online;
  if (off.empty() || on.empty()) {
    throw ValidationError("homogeneity: both groups must be non-empty");
  }
  const std::size_t n = std::min(off.size(), on.size());
  report.group_size = static_cast<int>(n);
  report.offline_used = seeded_subsample(off, n, seed);
  report.online_used = seeded_subsample(on, n, seed);

  std::map<std::int64_t, std::array<double, 2>> categories;
  int row = 0;
  for (const auto* used : {&report.offline_used, &report.online_used}) {
    const std::set<ParticipantId> raters(used->begin(), used->end());
    const MosTable mos = compute_mos(ds, raters);
    if (mos.entries.empty()) {
      throw ValidationError("homogeneity: a group has no ratings");
    }
    for (const auto& e : mos.entries) {
      categories[quantize_index(e.mos, cfg.quantizer.step)][row] += 1.0;
    }
    ++row;
  }
  Eigen::MatrixXd raw(2, static_cast<Eigen::Index>(categories.size()));
  std::vector<std::int64_t> keys;
  Eigen::Index c = 0;
  for (const auto& [key, counts] : categories) {
    raw(0, c) = counts[0];
    raw(1, c) = counts[1];
    keys.push_back(key);
    ++c;
  }
  auto [pooled, last] = pool_adjacent(raw, cfg.pooling_min_expected);
  report.table = pooled;
  for (int idx : last) {
    report.category_upper.push_back(quantize(
        static_cast<double>(keys[static_cast<std::size_t>(idx)]) *
            cfg.quantizer.step,
        cfg.quantizer.step));
  }
  if (pooled.cols() < 2) {
    report.pooling_collapsed = true;
    report.test.statistic = 0.0;
    report.test.p_value = 1.0;
    report.test.degenerate = true;
    report.test.method_detail = npstats::PMethod::kChiSquareApprox;
    report.test.n_per_group = {static_cast<int>(pooled.row(0).sum()),
                               static_cast<int>(pooled.row(1).sum())};
    return report;
  }
  report.test = npstats::chi_square_homogeneity(pooled);
  return report;
}

}  // namespace

HomogeneityReport test_homogeneity(const StudyDataset& ds,
                                   const OutlierReport& groups,
                                   const HomogeneityConfig& cfg) {
  if (!(cfg.quantizer.step > 0)) throw ValidationError("quantizer step must be positive");
  if (cfg.repeats < 1) throw ValidationError("homogeneity: repeats must be >= 1");
  std::vector<HomogeneityReport> draws;
  for (int r = 0; r < cfg.repeats; ++r) {
    draws.push_back(homogeneity_draw(ds, groups, cfg, cfg.seed + static_cast<std::uint64_t>(r)));
  }
  std::stable_sort(draws.begin(), draws.end(),
                   [](const HomogeneityReport& a, const HomogeneityReport& b) {
                     return a.test.p_value < b.test.p_value;
                   });
  return draws[static_cast<std::size_t>(cfg.repeats - 1) / 2];
}

// ---------------------------------------------------------------------------

bool ComparisonReport::posthoc_run() const {
  return std::any_of(posthoc.begin(), posthoc.end(),
                     [](const PairResult& p) { return p.test.has_value(); });
}

std::optional<int> select_winner(const ComparisonReport& report) {
  if (!report.posthoc_run() || report.summaries.empty()) return std::nullopt;
  const auto best = std::max_element(
      report.summaries.begin(), report.summaries.end(),
      [](const MethodSummary& x, const MethodSummary& y) { return x.mean < y.mean; });
  const auto ties = std::count_if(report.summaries.begin(), report.summaries.end(),
                                  [&](const MethodSummary& s) { return s.mean == best->mean; });
  if (ties > 1) return std::nullopt;
  return best->method;
}

ComparisonReport compare_methods(const StudyDataset& ds, const MosTable& mos,
                                 const Stratum& stratum, double alpha,
                                 npstats::StdMode std_mode) {
  ComparisonReport report;
  report.stratum = stratum;
  report.methods = mos.methods;
  report.alpha = alpha;

  const std::size_t k = mos.methods.size();
  std::vector<std::vector<double>> lists(k);
  std::set<std::pair<ImageId, int>> seen;
  for (const auto& s : ds.stimuli) {
    if (!matches(stratum, s)) continue;
    if (!seen.emplace(s.image_id, s.method.index).second) continue;
    if (const auto* e = mos.find(s.image_id, s.method.index)) {
      lists[static_cast<std::size_t>(e->method)].push_back(e->mos);
    }
  }
  if (k < 2) throw DegenerateError("compare: need at least 2 methods");
  std::vector<Eigen::VectorXd> groups;
  for (std::size_t m = 0; m < k; ++m) {
    if (lists[m].size() < 2) {
      throw DegenerateError("compare: stratum " + to_string(stratum) +
                            " has fewer than 2 images for method " +
                            mos.methods[m].name);
    }
    groups.emplace_back(Eigen::Map<const Eigen::VectorXd>(
        lists[m].data(), static_cast<Eigen::Index>(lists[m].size())));
    const auto ms = npstats::mean_std(groups.back(), std_mode);
    report.summaries.push_back({static_cast<int>(m), ms.mean, ms.std,
                                static_cast<int>(lists[m].size())});
  }

  report.omnibus = npstats::kruskal_wallis(groups);
  const bool run = report.omnibus.p_value < alpha;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      PairResult pr{static_cast<int>(a), static_cast<int>(b), std::nullopt};
      if (run) pr.test = npstats::mann_whitney_u(groups[a], groups[b]);
      report.posthoc.push_back(pr);
    }
  }
  report.winner = select_winner(report);
  return report;
}

// ---------------------------------------------------------------------------

namespace {
const csv::Row kMetricsHeader{"image_id", "method", "iauc", "dauc"};
}

MetricsTable load_metrics(const std::filesystem::path& path) {
  const auto t = csv::read_with_header(path, kMetricsHeader);
  MetricsTable out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    try {
      const ImageId image = text::parse_int(row[0], "image_id");
      AutoMetrics m{text::parse_double(row[2], "iauc"),
                    text::parse_double(row[3], "dauc")};
      if (!out.emplace(std::make_pair(image, row[1]), m).second) {
        throw ValidationError("duplicate (image_id, method)");
      }
    } catch (const ValidationError& e) {
      throw ValidationError("metrics.csv line " + std::to_string(t.lines[r]) +
                            ": " + e.what());
    }
  }
  return out;
}

std::string metrics_csv(const MetricsTable& metrics) {
  std::vector<csv::Row> rows;
  for (const auto& [key, m] : metrics) {
    rows.push_back({std::to_string(key.first), key.second,
                    text::shortest(m.iauc), text::shortest(m.dauc)});
  }
  return csv::to_string(kMetricsHeader, rows);
}

void write_metrics(const MetricsTable& metrics, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << metrics_csv(metrics);
  if (!out) throw IoError("cannot write " + path.string());
}

std::vector<CorrelationRow> correlate_with_automatic(const MosTable& mos,
                                                     const MetricsTable& metrics,
                                                     CorrelationScope scope) {
  // Key sets must agree exactly.
  std::size_t matched = 0;
  for (const auto& e : mos.entries) {
    const auto key = std::make_pair(e.image, mos.methods[static_cast<std::size_t>(e.method)].name);
    if (!metrics.count(key)) {
      throw ValidationError("metrics missing (image " + std::to_string(e.image) +
                            ", method " + key.second + ")");
    }
    ++matched;
  }
  if (matched != metrics.size()) {
    throw ValidationError("metrics contain keys without a MOS entry");
  }

  auto correlate = [&](const std::string& label, int method) {
    std::vector<double> m, iauc, dauc;
    for (const auto& e : mos.entries) {
      if (method >= 0 && e.method != method) continue;
      const auto& a = metrics.at(
          {e.image, mos.methods[static_cast<std::size_t>(e.method)].name});
      m.push_back(e.mos);
      iauc.push_back(a.iauc);
      dauc.push_back(a.dauc);
    }
    const auto n = static_cast<Eigen::Index>(m.size());
    const Eigen::Map<const Eigen::VectorXd> mv(m.data(), n);
    std::vector<CorrelationRow> rows;
    rows.push_back({label, "dauc",
                    npstats::spearman_rho(mv, Eigen::Map<const Eigen::VectorXd>(dauc.data(), n))});
    rows.push_back({label, "iauc",
                    npstats::spearman_rho(mv, Eigen::Map<const Eigen::VectorXd>(iauc.data(), n))});
    return rows;
  };

  if (scope == CorrelationScope::kOverall) return correlate("overall", -1);
  std::vector<CorrelationRow> out;
  for (const auto& m : mos.methods) {
    auto rows = correlate(m.name, m.index);
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

}  // namespace xaimos
