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

#include <filesystem>
#include <string>
#include <vector>

#include "xaimos/mospipeline.hpp"

namespace xaimos::report {

enum class Format { kCsv, kMarkdown };

Format parse_format(std::string_view s);

// Table layouts used in written results:
//  - kruskal_table: omnibus p-values, classification rows x distortion columns
//  - mann_whitney_table: post-hoc p-values per method pair, "N/A" when the
//    omnibus test was not significant
//  - mean_mos_table: mean+-std per method, winner in bold
//  - correlation_table: Spearman rho (p) against DAUC and IAUC
// p-values and means print with 4 decimals. Values below alpha are bold.
std::string kruskal_table(const std::vector<ComparisonReport>& reports, Format f);
std::string mann_whitney_table(const std::vector<ComparisonReport>& reports,
                               Format f);
std::string mean_mos_table(const std::vector<ComparisonReport>& reports, Format f);
std::string correlation_table(const std::vector<CorrelationRow>& rows, Format f);

// Single-stratum detail: omnibus, post-hoc pairs and per-method summary.
std::string comparison(const ComparisonReport& report, Format f);

std::string mos_table_csv(const MosTable& mos);
std::string aos_table_csv(const StudyDataset& ds, const AosTable& aos);
std::string outliers_csv(const StudyDataset& ds, const OutlierReport& report);
std::string homogeneity_csv(const HomogeneityReport& report);
std::string correlation_csv(const std::vector<CorrelationRow>& rows);

// "grad-cam" -> "Grad-CAM"; unknown names pass through.
std::string display_name(const std::string& method);

// "all:poor" -> "all_poor"
std::string stratum_slug(const Stratum& s);

void write_text(const std::filesystem::path& path, const std::string& body);

// Writes comparison_<stratum>, kruskal, mann_whitney, mean_mos and
// correlation tables (extension .csv or .md) into dir. Returns the paths in
// write order.
std::vector<std::filesystem::path> emit_report(
    const std::vector<ComparisonReport>& reports,
    const std::vector<CorrelationRow>& correlations, Format f,
    const std::filesystem::path& dir);

}  // namespace xaimos::report
