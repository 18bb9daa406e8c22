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

#include "xaimos/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "xaimos/csv.hpp"
#include "xaimos/errors.hpp"
#include "xaimos/text.hpp"

namespace xaimos::report {

namespace {

using text::fixed;
using text::shortest;

const std::optional<Distortion> kColumns[] = {
    std::nullopt, Distortion::kAdditiveGaussianNoise, Distortion::kGaussianBlur,
    Distortion::kBrightnessShift};

std::string distortion_title(const std::optional<Distortion>& d) {
  if (!d) return "All";
  switch (*d) {
    case Distortion::kAdditiveGaussianNoise: return "Additive Gaussian Noise";
    case Distortion::kGaussianBlur: return "Gaussian Blur";
    case Distortion::kBrightnessShift: return "Uniform Random Brightness Shift";
  }
  return "?";
}

std::string distortion_row_label(const std::optional<Distortion>& d) {
  if (!d) return "Combined Distortion";
  if (*d == Distortion::kBrightnessShift) return "Uni. Rand. Bright. Shift";
  return distortion_title(d);
}

std::string distortion_key(const std::optional<Distortion>& d) {
  return d ? std::string(to_string(*d)) : "all";
}

std::string classification_key(const std::optional<Classification>& c) {
  return c ? std::string(to_string(*c)) : "any";
}

std::string bold_if(bool cond, const std::string& s) {
  return cond ? "**" + s + "**" : s;
}

void md_row(std::ostringstream& os, const std::vector<std::string>& cells) {
  os << '|';
  for (const auto& c : cells) os << ' ' << c << " |";
  os << '\n';
}

void md_rule(std::ostringstream& os, std::size_t n) {
  os << '|';
  for (std::size_t i = 0; i < n; ++i) os << "---|";
  os << '\n';
}

std::string md_table(const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream os;
  md_row(os, header);
  md_rule(os, header.size());
  for (const auto& r : rows) md_row(os, r);
  return os.str();
}

// Distortion columns present in the reports, in canonical order.
std::vector<std::optional<Distortion>> columns_of(
    const std::vector<ComparisonReport>& reports) {
  std::vector<std::optional<Distortion>> cols;
  for (const auto& d : kColumns) {
    if (std::any_of(reports.begin(), reports.end(),
                    [&](const ComparisonReport& r) { return r.stratum.distortion == d; })) {
      cols.push_back(d);
    }
  }
  return cols;
}

std::vector<std::optional<Classification>> rows_of(
    const std::vector<ComparisonReport>& reports) {
  std::vector<std::optional<Classification>> out;
  const std::optional<Classification> order[] = {Classification::kPoor,
                                                  Classification::kWell,
                                                  std::nullopt};
  for (const auto& c : order) {
    if (std::any_of(reports.begin(), reports.end(),
                    [&](const ComparisonReport& r) { return r.stratum.classification == c; })) {
      out.push_back(c);
    }
  }
  return out;
}

const ComparisonReport* find_report(const std::vector<ComparisonReport>& reports,
                                    const std::optional<Distortion>& d,
                                    const std::optional<Classification>& c) {
  for (const auto& r : reports) {
    if (r.stratum.distortion == d && r.stratum.classification == c) return &r;
  }
  return nullptr;
}

std::string pair_label(const ComparisonReport& r, const PairResult& p) {
  return display_name(r.methods[static_cast<std::size_t>(p.method_a)].name) + "/" +
         display_name(r.methods[static_cast<std::size_t>(p.method_b)].name);
}

std::string optional_int(const std::optional<int>& v) {
  return v ? std::to_string(*v) : std::string();
}

// p rounded to three decimals, printed in shortest form ("0.0", "0.012").
std::string p3(double p) { return shortest(std::round(p * 1000.0) / 1000.0); }

}  // namespace

Format parse_format(std::string_view s) {
  if (s == "csv") return Format::kCsv;
  if (s == "markdown" || s == "md" || s == "markdown-table") return Format::kMarkdown;
  throw ValidationError("format must be csv or markdown");
}

std::string display_name(const std::string& method) {
  if (method == "grad-cam") return "Grad-CAM";
  if (method == "mlfem") return "MLFEM";
  if (method == "fem") return "FEM";
  return method;
}

std::string stratum_slug(const Stratum& s) {
  std::string out = to_string(s);
  std::replace(out.begin(), out.end(), ':', '_');
  return out;
}

std::string kruskal_table(const std::vector<ComparisonReport>& reports, Format f) {
  const auto cols = columns_of(reports);
  if (f == Format::kCsv) {
    csv::Row header{"classification"};
    for (const auto& d : cols) header.push_back(distortion_key(d));
    std::vector<csv::Row> rows;
    for (const auto& c : rows_of(reports)) {
      csv::Row row{classification_key(c)};
      for (const auto& d : cols) {
        const auto* r = find_report(reports, d, c);
        row.push_back(r ? fixed(r->omnibus.p_value, 4) : "");
      }
      rows.push_back(row);
    }
    return csv::to_string(header, rows);
  }
  std::vector<std::string> header{"Classification \\ Distortion"};
  for (const auto& d : cols) header.push_back(distortion_title(d));
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : rows_of(reports)) {
    std::vector<std::string> row{!c ? "Any" : *c == Classification::kPoor ? "Poorly" : "Well"};
    for (const auto& d : cols) {
      const auto* r = find_report(reports, d, c);
      row.push_back(r ? bold_if(r->omnibus.p_value < r->alpha,
                                fixed(r->omnibus.p_value, 4))
                      : "-");
    }
    rows.push_back(row);
  }
  return md_table(header, rows);
}

std::string mann_whitney_table(const std::vector<ComparisonReport>& reports,
                               Format f) {
  const auto cols = columns_of(reports);
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : rows_of(reports)) {
    const ComparisonReport* any = nullptr;
    for (const auto& d : cols) {
      if ((any = find_report(reports, d, c))) break;
    }
    if (!any) continue;
    for (std::size_t p = 0; p < any->posthoc.size(); ++p) {
      std::vector<std::string> row;
      if (f == Format::kCsv) {
        row.push_back(classification_key(c));
        const auto& pr = any->posthoc[p];
        row.push_back(any->methods[static_cast<std::size_t>(pr.method_a)].name + "/" +
                      any->methods[static_cast<std::size_t>(pr.method_b)].name);
      } else {
        row.push_back(!c ? "Any Classification"
                         : *c == Classification::kPoor ? "Poorly Classified"
                                                       : "Well Classified");
        row.push_back(pair_label(*any, any->posthoc[p]));
      }
      for (const auto& d : cols) {
        const auto* r = find_report(reports, d, c);
        if (!r || p >= r->posthoc.size()) {
          row.push_back(f == Format::kCsv ? "" : "-");
          continue;
        }
        const auto& t = r->posthoc[p].test;
        if (!t) {
          row.push_back("N/A");
        } else if (f == Format::kCsv) {
          row.push_back(fixed(t->p_value, 4));
        } else {
          row.push_back(bold_if(t->p_value < r->alpha, fixed(t->p_value, 4)));
        }
      }
      rows.push_back(row);
    }
  }
  if (f == Format::kCsv) {
    csv::Row header{"classification", "pair"};
    for (const auto& d : cols) header.push_back(distortion_key(d));
    return csv::to_string(header, rows);
  }
  std::vector<std::string> header{"Classification", "Explanation Methods"};
  for (const auto& d : cols) header.push_back(distortion_title(d));
  return md_table(header, rows);
}

std::string mean_mos_table(const std::vector<ComparisonReport>& reports, Format f) {
  if (f == Format::kCsv) {
    std::vector<csv::Row> rows;
    for (const auto& r : reports) {
      for (const auto& s : r.summaries) {
        rows.push_back({distortion_key(r.stratum.distortion),
                        classification_key(r.stratum.classification),
                        r.methods[static_cast<std::size_t>(s.method)].name,
                        fixed(s.mean, 4), fixed(s.std, 4),
                        std::to_string(s.n_images),
                        r.winner && *r.winner == s.method ? "true" : "false"});
      }
    }
    return csv::to_string(
        {"distortion", "classification", "method", "mean", "std", "n_images", "best"},
        rows);
  }
  if (reports.empty()) {
    return md_table({"Distortion + Classification"}, {});
  }
  std::vector<std::string> header{"Distortion + Classification"};
  for (const auto& m : reports.front().methods) header.push_back(display_name(m.name));
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : reports) {
    const auto& c = r.stratum.classification;
    std::vector<std::string> row{
        distortion_row_label(r.stratum.distortion) + " + " +
        (!c ? "Any" : *c == Classification::kPoor ? "Poor" : "Well")};
    for (const auto& s : r.summaries) {
      row.push_back(bold_if(r.winner && *r.winner == s.method,
                            fixed(s.mean, 4) + "±" + fixed(s.std, 4)));
    }
    rows.push_back(row);
  }
  return md_table(header, rows);
}

std::string correlation_table(const std::vector<CorrelationRow>& rows, Format f) {
  if (f == Format::kCsv) return correlation_csv(rows);
  std::vector<std::string> scopes;
  for (const auto& r : rows) {
    if (std::find(scopes.begin(), scopes.end(), r.scope) == scopes.end()) {
      scopes.push_back(r.scope);
    }
  }
  const char* metrics[] = {"dauc", "iauc"};
  // Highest per-method coefficient in each column is bold.
  double best[2] = {-2.0, -2.0};
  int per_method = 0;
  for (const auto& s : scopes) per_method += s != "overall";
  for (const auto& r : rows) {
    if (r.scope == "overall") continue;
    const int m = r.metric == "dauc" ? 0 : 1;
    best[m] = std::max(best[m], std::round(r.test.statistic * 1e4) / 1e4);
  }
  std::vector<std::vector<std::string>> body;
  for (const auto& s : scopes) {
    std::vector<std::string> row{s == "overall" ? "Overall" : display_name(s)};
    for (int m = 0; m < 2; ++m) {
      auto it = std::find_if(rows.begin(), rows.end(), [&](const CorrelationRow& r) {
        return r.scope == s && r.metric == metrics[m];
      });
      if (it == rows.end()) {
        row.push_back("-");
        continue;
      }
      const std::string cell =
          fixed(it->test.statistic, 4) + " (" + p3(it->test.p_value) + ")";
      const bool is_best = s != "overall" && per_method > 1 &&
                           std::round(it->test.statistic * 1e4) / 1e4 == best[m];
      row.push_back(bold_if(is_best, cell));
    }
    body.push_back(row);
  }
  return md_table({"", "DAUC", "IAUC"}, body);
}

std::string comparison(const ComparisonReport& r, Format f) {
  auto name = [&](int m) { return r.methods[static_cast<std::size_t>(m)].name; };
  if (f == Format::kCsv) {
    std::vector<csv::Row> rows;
    rows.push_back({"omnibus", "", "", shortest(r.omnibus.statistic),
                    shortest(r.omnibus.p_value), optional_int(r.omnibus.df),
                    std::string(npstats::to_string(r.omnibus.method_detail)), "",
                    "", ""});
    for (const auto& p : r.posthoc) {
      if (p.test) {
        rows.push_back({"posthoc", name(p.method_a), name(p.method_b),
                        shortest(p.test->statistic), shortest(p.test->p_value), "",
                        std::string(npstats::to_string(p.test->method_detail)), "",
                        "", ""});
      } else {
        rows.push_back({"posthoc", name(p.method_a), name(p.method_b), "N/A",
                        "N/A", "", "not-run", "", "", ""});
      }
    }
    for (const auto& s : r.summaries) {
      rows.push_back({"summary", name(s.method), "", "", "", "", "",
                      shortest(s.mean), shortest(s.std), std::to_string(s.n_images)});
    }
    rows.push_back({"winner", r.winner ? name(*r.winner) : "", "", "", "", "", "",
                    "", "", ""});
    return csv::to_string({"row", "method_a", "method_b", "statistic", "p_value",
                           "df", "detail", "mean", "std", "n"},
                          rows);
  }
  std::ostringstream os;
  os << "## Stratum " << to_string(r.stratum) << "\n\n";
  os << "Kruskal-Wallis H = " << fixed(r.omnibus.statistic, 4)
     << ", df = " << optional_int(r.omnibus.df) << ", p = "
     << bold_if(r.omnibus.p_value < r.alpha, fixed(r.omnibus.p_value, 4))
     << "\n\n";
  std::vector<std::vector<std::string>> pairs;
  for (const auto& p : r.posthoc) {
    if (p.test) {
      pairs.push_back({pair_label(r, p), fixed(p.test->statistic, 4),
                       bold_if(p.test->p_value < r.alpha, fixed(p.test->p_value, 4)),
                       std::string(npstats::to_string(p.test->method_detail))});
    } else {
      pairs.push_back({pair_label(r, p), "N/A", "N/A", "not run"});
    }
  }
  os << md_table({"Explanation Methods", "U", "p-value", "Detail"}, pairs) << '\n';
  std::vector<std::vector<std::string>> means;
  for (const auto& s : r.summaries) {
    const bool best = r.winner && *r.winner == s.method;
    means.push_back({bold_if(best, display_name(name(s.method))),
                     bold_if(best, fixed(s.mean, 4) + "±" + fixed(s.std, 4)),
                     std::to_string(s.n_images)});
  }
  os << md_table({"Method", "Mean MOS", "Images"}, means);
  return os.str();
}

std::string mos_table_csv(const MosTable& mos) {
  std::vector<csv::Row> rows;
  for (const auto& e : mos.entries) {
    rows.push_back({std::to_string(e.image),
                    mos.methods[static_cast<std::size_t>(e.method)].name,
                    shortest(e.mos), e.std ? shortest(*e.std) : "",
                    std::to_string(e.n_raters)});
  }
  return csv::to_string({"image_id", "method", "mos", "std", "n_raters"}, rows);
}

std::string aos_table_csv(const StudyDataset& ds, const AosTable& aos) {
  std::vector<csv::Row> rows;
  for (const auto& e : aos.entries) {
    rows.push_back({std::string(to_string(e.group)), std::to_string(e.participant),
                    ds.methods[static_cast<std::size_t>(e.method)].name,
                    shortest(e.aos), std::to_string(e.n_images)});
  }
  return csv::to_string({"group", "participant_id", "method", "aos", "n_images"},
                        rows);
}

std::string outliers_csv(const StudyDataset& ds, const OutlierReport& report) {
  std::vector<csv::Row> rows;
  for (const auto& f : report.flagged) {
    rows.push_back({std::to_string(f.participant), std::string(to_string(f.group)),
                    ds.methods[static_cast<std::size_t>(f.method)].name,
                    shortest(f.aos), shortest(f.group_mean), shortest(f.group_std)});
  }
  return csv::to_string(
      {"participant_id", "group", "method", "aos", "group_mean", "group_std"}, rows);
}

std::string homogeneity_csv(const HomogeneityReport& h) {
  return csv::to_string(
      {"statistic", "p_value", "df", "method_detail", "group_size", "categories",
       "pooling_collapsed", "seed"},
      {{shortest(h.test.statistic), shortest(h.test.p_value), optional_int(h.test.df),
        std::string(npstats::to_string(h.test.method_detail)),
        std::to_string(h.group_size), std::to_string(h.table.cols()),
        h.pooling_collapsed ? "true" : "false", std::to_string(h.draw_seed)}});
}

std::string correlation_csv(const std::vector<CorrelationRow>& rows) {
  std::vector<csv::Row> out;
  for (const auto& r : rows) {
    out.push_back({r.scope, r.metric, shortest(r.test.statistic),
                   shortest(r.test.p_value), optional_int(r.test.df),
                   r.test.n_per_group.empty() ? ""
                                              : std::to_string(r.test.n_per_group[0])});
  }
  return csv::to_string({"scope", "metric", "rho", "p_value", "df", "n"}, out);
}

void write_text(const std::filesystem::path& path, const std::string& body) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot write " + path.string());
  const bool ok = std::fwrite(body.data(), 1, body.size(), f) == body.size();
  if (std::fclose(f) != 0 || !ok) throw IoError("write failed: " + path.string());
}

std::vector<std::filesystem::path> emit_report(
    const std::vector<ComparisonReport>& reports,
    const std::vector<CorrelationRow>& correlations, Format f,
    const std::filesystem::path& dir) {
  const std::string ext = f == Format::kCsv ? ".csv" : ".md";
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& stem, const std::string& body) {
    const auto path = dir / (stem + ext);
    write_text(path, body);
    written.push_back(path);
  };
  for (const auto& r : reports) put("comparison_" + stratum_slug(r.stratum), comparison(r, f));
  put("kruskal", kruskal_table(reports, f));
  put("mann_whitney", mann_whitney_table(reports, f));
  put("mean_mos", mean_mos_table(reports, f));
  put("correlation", correlation_table(correlations, f));
  return written;
}

}  // namespace xaimos::report
