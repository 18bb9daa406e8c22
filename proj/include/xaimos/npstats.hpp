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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "xaimos/errors.hpp"

namespace xaimos::npstats {

enum class PMethod { kExact, kNormalApprox, kChiSquareApprox, kTApprox };

std::string_view to_string(PMethod m);

struct TestReport {
  double statistic = 0.0;
  double p_value = 1.0;
  std::optional<int> df;
  PMethod method_detail = PMethod::kExact;
  std::vector<int> n_per_group;
  // Set when the statistic is undefined and the report carries the
  // conventional null outcome (statistic 0, p 1).
  bool degenerate = false;
};

enum class StdMode { kSample, kPopulation };

std::string_view to_string(StdMode m);
StdMode parse_std_mode(std::string_view s);

/// 1-based midranks: tied values share the mean of the ranks they span, so
/// the ranks always sum to n(n+1)/2.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> rank_with_ties(
    const Eigen::DenseBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = values.size();
  if (n == 0) throw ValidationError("rank_with_ties: empty input");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isnan(values(i))) throw ValidationError("rank_with_ties: NaN input");
  }
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return values(a) < values(b);
  });
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> ranks(n);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values(order[j]) == values(order[i])) ++j;
    // Ranks i+1 .. j averaged.
    const Scalar mid = static_cast<Scalar>(i + 1 + j) / Scalar(2);
    for (std::size_t k = i; k < j; ++k) ranks(order[k]) = mid;
    i = j;
  }
  return ranks;
}

// Sum over tie groups of (t^3 - t).
template <typename Derived>
double tie_term(const Eigen::DenseBase<Derived>& values) {
  std::vector<double> v(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    v[static_cast<std::size_t>(i)] = static_cast<double>(values(i));
  }
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i + 1;
    while (j < v.size() && v[j] == v[i]) ++j;
    const double t = static_cast<double>(j - i);
    sum += t * t * t - t;
    i = j;
  }
  return sum;
}

template <typename Scalar>
struct MeanStd {
  Scalar mean;
  Scalar std;
};

template <typename Derived>
typename Derived::Scalar mean(const Eigen::DenseBase<Derived>& values) {
  if (values.size() == 0) throw ValidationError("mean: empty input");
  return values.mean();
}

template <typename Derived>
MeanStd<typename Derived::Scalar> mean_std(const Eigen::DenseBase<Derived>& values,
                                           StdMode mode = StdMode::kSample) {
  using Scalar = typename Derived::Scalar;
  const auto n = values.size();
  if (n < 2) throw ValidationError("mean_std: need at least 2 values for std");
  const Scalar m = values.mean();
  const Scalar ss = (values.derived().array() - m).square().sum();
  const Scalar denom = mode == StdMode::kSample ? Scalar(n - 1) : Scalar(n);
  return {m, std::sqrt(ss / denom)};
}

/// Product-moment correlation coefficient; throws DegenerateError when
/// either input is constant.
template <typename DerivedX, typename DerivedY>
double correlation(const Eigen::DenseBase<DerivedX>& x,
                   const Eigen::DenseBase<DerivedY>& y) {
  if (x.size() != y.size()) throw ValidationError("correlation: size mismatch");
  if (x.size() < 2) throw ValidationError("correlation: need at least 2 points");
  const Eigen::ArrayXd xd = x.derived().template cast<double>().array();
  const Eigen::ArrayXd yd = y.derived().template cast<double>().array();
  const Eigen::ArrayXd dx = xd - xd.mean();
  const Eigen::ArrayXd dy = yd - yd.mean();
  const double sxx = dx.square().sum();
  const double syy = dy.square().sum();
  if (sxx == 0.0 || syy == 0.0) {
    throw DegenerateError("correlation undefined for constant input");
  }
  const double r = (dx * dy).sum() / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

/// Histogram intersection of the two inputs after normalizing each to unit
/// mass. Result lies in [0, 1].
template <typename DerivedA, typename DerivedB>
double histogram_similarity(const Eigen::DenseBase<DerivedA>& a,
                            const Eigen::DenseBase<DerivedB>& b) {
  if (a.size() != b.size()) throw ValidationError("similarity: size mismatch");
  const Eigen::ArrayXd ad = a.derived().template cast<double>().array();
  const Eigen::ArrayXd bd = b.derived().template cast<double>().array();
  if ((ad < 0).any() || (bd < 0).any() || !ad.allFinite() || !bd.allFinite()) {
    throw ValidationError("similarity: inputs must be finite and nonnegative");
  }
  const double sa = ad.sum();
  const double sb = bd.sum();
  if (sa <= 0.0 || sb <= 0.0) {
    throw DegenerateError("similarity undefined for all-zero input");
  }
  return (ad / sa).min(bd / sb).sum();
}

TestReport kruskal_wallis(std::span<const Eigen::VectorXd> groups);

enum class UMode { kAuto, kExact, kNormal };

// Two-sided Mann-Whitney U; statistic is min(U_a, U_b).
TestReport mann_whitney_u(const Eigen::Ref<const Eigen::VectorXd>& a,
                          const Eigen::Ref<const Eigen::VectorXd>& b,
                          UMode mode = UMode::kAuto);

// Number of tie-free labelings of sizes (m, n) for each U in 0..m*n.
std::vector<long double> mann_whitney_null_counts(int m, int n);

// Rows are groups, columns are categories.
TestReport chi_square_homogeneity(const Eigen::Ref<const Eigen::MatrixXd>& counts);

TestReport spearman_rho(const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& y);

TestReport pearson_r(const Eigen::Ref<const Eigen::VectorXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& y);

}  // namespace xaimos::npstats
