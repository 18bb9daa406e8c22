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

#include "xaimos/npstats.hpp"

#include "xaimos/distributions.hpp"

namespace xaimos::npstats {

std::string_view to_string(PMethod m) {
  switch (m) {
    case PMethod::kExact: return "exact";
    case PMethod::kNormalApprox: return "normal-approx";
    case PMethod::kChiSquareApprox: return "chi-square-approx";
    case PMethod::kTApprox: return "t-approx";
  }
  return "?";
}

std::string_view to_string(StdMode m) {
  return m == StdMode::kSample ? "sample" : "population";
}

StdMode parse_std_mode(std::string_view s) {
  if (s == "sample") return StdMode::kSample;
  if (s == "population") return StdMode::kPopulation;
  throw ValidationError("std mode must be sample or population");
}

namespace {

void check_finite(const Eigen::Ref<const Eigen::VectorXd>& v,
                  std::string_view what) {
  if (v.hasNaN()) throw ValidationError(std::string(what) + ": NaN input");
}

}  // namespace

TestReport kruskal_wallis(std::span<const Eigen::VectorXd> groups) {
  if (groups.size() < 2) throw ValidationError("kruskal_wallis: need >= 2 groups");
  Eigen::Index total = 0;
  for (const auto& g : groups) {
    if (g.size() == 0) throw ValidationError("kruskal_wallis: empty group");
    check_finite(g, "kruskal_wallis");
    total += g.size();
  }
  if (total < 3) throw ValidationError("kruskal_wallis: need >= 3 observations");

  Eigen::VectorXd pooled(total);
  Eigen::Index offset = 0;
  TestReport report;
  for (const auto& g : groups) {
    pooled.segment(offset, g.size()) = g;
    offset += g.size();
    report.n_per_group.push_back(static_cast<int>(g.size()));
  }
  report.df = static_cast<int>(groups.size()) - 1;
  report.method_detail = PMethod::kChiSquareApprox;

  const double n = static_cast<double>(total);
  const double correction = 1.0 - tie_term(pooled) / (n * n * n - n);
  if (correction <= 0.0) {
    report.statistic = 0.0;
    report.p_value = 1.0;
    report.degenerate = true;
    return report;
  }

  const Eigen::VectorXd ranks = rank_with_ties(pooled);
  double weighted = 0.0;
  offset = 0;
  for (const auto& g : groups) {
    const double r = ranks.segment(offset, g.size()).sum();
    weighted += r * r / static_cast<double>(g.size());
    offset += g.size();
  }
  double h = (12.0 / (n * (n + 1.0)) * weighted - 3.0 * (n + 1.0)) / correction;
  h = std::max(h, 0.0);
  report.statistic = h;
  report.p_value = dist::chi_square_upper_tail(h, *report.df);
  return report;
}

std::vector<long double> mann_whitney_null_counts(int m, int n) {
  if (m < 0 || n < 0) throw ValidationError("negative sample size");
  if (m > n) std::swap(m, n);
  // Coefficients of the Gaussian binomial [m+n choose m]_q, built as
  // prod_{i=1..m} (1 - q^(n+i)) / (1 - q^i). Every partial product is itself
  // a Gaussian binomial, so all intermediate values stay integral.
  const std::ptrdiff_t top = static_cast<std::ptrdiff_t>(m) * n;
  std::vector<long double> poly(static_cast<std::size_t>(top + m + 1), 0.0L);
  poly[0] = 1.0L;
  std::ptrdiff_t degree = 0;
  for (std::ptrdiff_t i = 1; i <= m; ++i) {
    const std::ptrdiff_t shift = n + i;
    for (std::ptrdiff_t k = degree + shift; k >= shift; --k) {
      poly[k] -= poly[k - shift];
    }
    for (std::ptrdiff_t k = i; k <= degree + shift; ++k) {
      poly[k] += poly[k - i];
    }
    for (std::ptrdiff_t k = degree + n + 1; k <= degree + shift; ++k) {
      poly[k] = 0.0L;
    }
    degree += n;
  }
  poly.resize(static_cast<std::size_t>(top + 1));
  return poly;
}

TestReport mann_whitney_u(const Eigen::Ref<const Eigen::VectorXd>& a,
                          const Eigen::Ref<const Eigen::VectorXd>& b,
                          UMode mode) {
  if (a.size() == 0 || b.size() == 0) {
    throw ValidationError("mann_whitney_u: empty sample");
  }
  check_finite(a, "mann_whitney_u");
  check_finite(b, "mann_whitney_u");
  const Eigen::Index na = a.size();
  const Eigen::Index nb = b.size();
  Eigen::VectorXd pooled(na + nb);
  pooled << a, b;
  const Eigen::VectorXd ranks = rank_with_ties(pooled);
  const double ra = ranks.head(na).sum();
  const double nad = static_cast<double>(na);
  const double nbd = static_cast<double>(nb);
  const double ua = ra - nad * (nad + 1.0) / 2.0;
  const double ub = nad * nbd - ua;

  TestReport report;
  report.statistic = std::min(ua, ub);
  report.n_per_group = {static_cast<int>(na), static_cast<int>(nb)};

  const double ties = tie_term(pooled);
  const bool exact = mode == UMode::kExact ||
                     (mode == UMode::kAuto && ties == 0.0 && na * nb <= 400);
  if (exact) {
    if (ties != 0.0) {
      throw ValidationError("mann_whitney_u: exact p-value requires tie-free data");
    }
    const auto counts = mann_whitney_null_counts(static_cast<int>(na),
                                                 static_cast<int>(nb));
    long double total = 0.0L;
    long double tail = 0.0L;
    const auto u_min = static_cast<std::size_t>(std::llround(report.statistic));
    for (std::size_t u = 0; u < counts.size(); ++u) {
      total += counts[u];
      if (u <= u_min) tail += counts[u];
    }
    report.method_detail = PMethod::kExact;
    report.p_value = static_cast<double>(std::min(1.0L, 2.0L * tail / total));
    return report;
  }

  report.method_detail = PMethod::kNormalApprox;
  const double n = nad + nbd;
  const double var =
      nad * nbd / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
  if (var <= 0.0) {
    report.p_value = 1.0;
    report.degenerate = true;
    return report;
  }
  const double z = (std::fabs(ua - nad * nbd / 2.0) - 0.5) / std::sqrt(var);
  report.p_value = std::min(1.0, 2.0 * dist::normal_upper_tail(z));
  return report;
}

TestReport chi_square_homogeneity(const Eigen::Ref<const Eigen::MatrixXd>& counts) {
  if (counts.rows() < 2 || counts.cols() < 2) {
    throw ValidationError("chi-square: need at least a 2x2 table");
  }
  if (!counts.allFinite() || (counts.array() < 0).any()) {
    throw ValidationError("chi-square: counts must be finite and nonnegative");
  }
  const Eigen::VectorXd row_sums = counts.rowwise().sum();
  const Eigen::RowVectorXd col_sums = counts.colwise().sum();
  if ((row_sums.array() <= 0).any() || (col_sums.array() <= 0).any()) {
    throw DegenerateError(
        "chi-square: zero expected cell; pool categories further");
  }
  const double total = row_sums.sum();
  const Eigen::MatrixXd expected = row_sums * col_sums / total;
  const double chi2 =
      ((counts - expected).array().square() / expected.array()).sum();

  TestReport report;
  report.statistic = chi2;
  report.df = static_cast<int>((counts.rows() - 1) * (counts.cols() - 1));
  report.method_detail = PMethod::kChiSquareApprox;
  report.p_value = dist::chi_square_upper_tail(chi2, *report.df);
  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    report.n_per_group.push_back(static_cast<int>(std::llround(row_sums(r))));
  }
  return report;
}

namespace {

TestReport correlation_report(double r, Eigen::Index n) {
  TestReport report;
  report.statistic = r;
  report.df = static_cast<int>(n) - 2;
  report.method_detail = PMethod::kTApprox;
  report.n_per_group = {static_cast<int>(n)};
  const double denom = 1.0 - r * r;
  if (denom <= 0.0) {
    report.p_value = 0.0;
    return report;
  }
  const double t = r * std::sqrt(static_cast<double>(n - 2) / denom);
  report.p_value = dist::student_t_two_sided(t, static_cast<double>(n - 2));
  return report;
}

void check_pair(const Eigen::Ref<const Eigen::VectorXd>& x,
                const Eigen::Ref<const Eigen::VectorXd>& y,
                std::string_view what) {
  if (x.size() != y.size()) throw ValidationError(std::string(what) + ": size mismatch");
  if (x.size() < 3) throw ValidationError(std::string(what) + ": need n >= 3");
  check_finite(x, what);
  check_finite(y, what);
}

}  // namespace

TestReport spearman_rho(const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& y) {
  check_pair(x, y, "spearman_rho");
  return correlation_report(correlation(rank_with_ties(x), rank_with_ties(y)),
                            x.size());
}

TestReport pearson_r(const Eigen::Ref<const Eigen::VectorXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& y) {
  check_pair(x, y, "pearson_r");
  return correlation_report(correlation(x, y), x.size());
}

}  // namespace xaimos::npstats
