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

#include "xaimos/cli.hpp"

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "xaimos/csv.hpp"
#include "xaimos/errors.hpp"
#include "xaimos/event_log.hpp"
#include "xaimos/http_service.hpp"
#include "xaimos/mospipeline.hpp"
#include "xaimos/raster_io.hpp"
#include "xaimos/report.hpp"
#include "xaimos/saliency.hpp"
#include "xaimos/scorer.hpp"
#include "xaimos/session.hpp"
#include "xaimos/studydata.hpp"
#include "xaimos/text.hpp"

namespace xaimos::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string study;
  std::string out;
  std::string format = "csv";
  std::string stratum;
  bool all_strata = false;
  std::string metrics;
  std::string pairs;
  std::string map;
  std::string reference;
  std::string scope = "both";
  std::vector<std::string> scorer;
  std::string baseline = "black";
  double blur_sigma = 5.0;
  double step = 0.01;
  std::uint64_t seed = kDefaultSeed;
  double alpha = 0.05;
  double delta = 0.0001;
  std::string std_mode = "sample";
  double k_sigma = 2.0;
  bool iterative = false;
  double pool_min = 5.0;
  int repeats = 1;
  bool force_merge = false;
  bool enforce_age = false;
  bool quantize = false;
  std::string log;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  std::size_t session_size = 225;
  std::int64_t exposure_ms = 20000;
  std::int64_t isi_ms = 5000;
  std::int64_t grace_ms = 2000;
  bool shared_order = false;
};

struct Analysis {
  StudyDataset ds;
  AosTable aos;
  OutlierReport outliers;
  HomogeneityReport homogeneity;
  MosTable mos;
};

npstats::StdMode std_mode(const Options& o) { return npstats::parse_std_mode(o.std_mode); }

OutlierConfig outlier_config(const Options& o) {
  return {o.k_sigma, std_mode(o), o.iterative ? OutlierPass::kIterative : OutlierPass::kSinglePass};
}

Analysis prepare(const Options& o, bool gate) {
  Analysis a;
  a.ds = load_study(o.study, {o.enforce_age});
  a.aos = average_opinion_scores(a.ds);
  a.outliers = filter_outliers(a.ds, a.aos, outlier_config(o));
  HomogeneityConfig hc;
  hc.quantizer.step = o.delta;
  hc.seed = o.seed;
  hc.pooling_min_expected = o.pool_min;
  hc.repeats = o.repeats;
  a.homogeneity = test_homogeneity(a.ds, a.outliers, hc);
  if (gate && !o.force_merge && a.homogeneity.test.p_value < o.alpha) {
    throw DegenerateError("offline and online groups are not homogeneous (p = " +
                          text::fixed(a.homogeneity.test.p_value, 4) +
                          "); rerun with --force-merge to pool them anyway");
  }
  a.mos = compute_mos(a.ds, a.outliers.surviving(), std_mode(o));
  return a;
}

void emit(const Options& o, std::ostream& out, const std::string& name, const std::string& body) {
  if (o.out.empty()) {
    out << body;
    return;
  }
  fs::create_directories(o.out);
  report::write_text(fs::path(o.out) / name, body);
}

std::string ext(report::Format f) { return f == report::Format::kCsv ? ".csv" : ".md"; }

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

ScorerEndpoint endpoint(const Options& o) {
  if (o.scorer.size() != 2) throw ValidationError("--scorer takes a mode and a target");
  ScorerEndpoint e;
  if (o.scorer[0] == "cached") {
    e.mode = ScorerEndpoint::Mode::kCached;
    e.cache_path = o.scorer[1];
  } else if (o.scorer[0] == "wire") {
    e.mode = ScorerEndpoint::Mode::kWire;
    e.address = o.scorer[1];
  } else {
    throw ValidationError("--scorer mode must be wire or cached, got '" + o.scorer[0] + "'");
  }
  return e;
}

int cmd_validate(const Options& o, std::ostream& out) {
  const auto ds = load_study(o.study, {o.enforce_age});
  std::size_t unrated = 0;
  for (const auto& s : ds.scores) unrated += !s.score;
  out << "valid: " << ds.participants.size() << " participants, " << ds.stimuli.size()
      << " stimuli, " << ds.methods.size() << " methods, N_I = " << ds.images_per_method
      << ", " << ds.scores.size() << " scores (" << unrated << " unrated)\n";
  return kExitOk;
}

int cmd_aos(const Options& o, std::ostream& out) {
  const auto ds = load_study(o.study, {o.enforce_age});
  emit(o, out, "aos_table.csv", report::aos_table_csv(ds, average_opinion_scores(ds)));
  return kExitOk;
}

int cmd_filter_outliers(const Options& o, std::ostream& out) {
  const auto ds = load_study(o.study, {o.enforce_age});
  const auto rep = filter_outliers(ds, average_opinion_scores(ds), outlier_config(o));
  emit(o, out, "outliers.csv", report::outliers_csv(ds, rep));
  return kExitOk;
}

int cmd_mos(const Options& o, std::ostream& out) {
  auto a = prepare(o, true);
  if (o.quantize) a.mos = quantize_mos(a.mos, {o.delta});
  emit(o, out, "mos_table.csv", report::mos_table_csv(a.mos));
  return kExitOk;
}

int cmd_homogeneity(const Options& o, std::ostream& out) {
  const auto a = prepare(o, false);
  emit(o, out, "homogeneity.csv", report::homogeneity_csv(a.homogeneity));
  return kExitOk;
}

std::vector<ComparisonReport> run_comparisons(const Options& o, const Analysis& a) {
  std::vector<Stratum> strata;
  if (o.all_strata) {
    strata = table_strata();
  } else {
    if (o.stratum.empty()) throw ValidationError("compare needs --stratum or --all-strata");
    strata.push_back(parse_stratum(o.stratum));
  }
  std::vector<ComparisonReport> reports;
  for (const auto& s : strata) {
    reports.push_back(compare_methods(a.ds, a.mos, s, o.alpha, std_mode(o)));
  }
  return reports;
}

int cmd_compare(const Options& o, std::ostream& out) {
  const auto fmt = report::parse_format(o.format);
  const auto a = prepare(o, true);
  const auto reports = run_comparisons(o, a);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (o.out.empty() && i > 0 && fmt == report::Format::kMarkdown) out << '\n';
    emit(o, out, "comparison_" + report::stratum_slug(reports[i].stratum) + ext(fmt),
         report::comparison(reports[i], fmt));
  }
  return kExitOk;
}

CorrelationScope parse_scope(const std::string& s) {
  if (s == "overall") return CorrelationScope::kOverall;
  if (s == "per-method") return CorrelationScope::kPerMethod;
  throw ValidationError("scope must be overall, per-method or both");
}

std::vector<CorrelationRow> correlations(const Options& o, const Analysis& a) {
  const auto metrics = load_metrics(o.metrics);
  if (o.scope == "both") {
    auto rows = correlate_with_automatic(a.mos, metrics, CorrelationScope::kOverall);
    auto per = correlate_with_automatic(a.mos, metrics, CorrelationScope::kPerMethod);
    rows.insert(rows.end(), per.begin(), per.end());
    return rows;
  }
  return correlate_with_automatic(a.mos, metrics, parse_scope(o.scope));
}

int cmd_correlate(const Options& o, std::ostream& out) {
  const auto a = prepare(o, true);
  emit(o, out, "correlation.csv", report::correlation_csv(correlations(o, a)));
  return kExitOk;
}

int cmd_iauc_dauc(const Options& o, std::ostream& out) {
  const fs::path manifest(o.pairs);
  const auto base = manifest.parent_path();
  const auto t = csv::read_with_header(
      manifest, {"image_id", "method", "image_path", "map_path", "target_class"});
  HttpTransport transport;
  auto scorer = make_scorer(endpoint(o), transport);
  BaselineConfig bc{parse_baseline(o.baseline), o.blur_sigma};
  MetricsTable metrics;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    try {
      const ImageId id = text::parse_int(row[0], "image_id");
      const auto image = raster_io::load_image(resolve(base, row[2]));
      const auto map = raster_io::load_map(resolve(base, row[3]));
      const auto ins = insertion_curve(image, map, *scorer, row[4], o.step, bc);
      const auto del = deletion_curve(image, map, *scorer, row[4], o.step, bc);
      if (!metrics.emplace(std::make_pair(id, row[1]), AutoMetrics{auc(ins), auc(del)}).second) {
        throw ValidationError("duplicate (image_id, method)");
      }
    } catch (const ValidationError& e) {
      throw ValidationError(manifest.filename().string() + " line " +
                            std::to_string(t.lines[r]) + ": " + e.what());
    }
  }
  emit(o, out, "metrics.csv", metrics_csv(metrics));
  return kExitOk;
}

int cmd_map_compare(const Options& o, std::ostream& out) {
  std::vector<csv::Row> rows;
  if (!o.pairs.empty()) {
    const fs::path manifest(o.pairs);
    const auto t = csv::read_with_header(
        manifest, {"image_id", "method", "map_path", "reference_path"});
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      const auto c = compare_to_reference(
          raster_io::load_map(resolve(manifest.parent_path(), row[2])),
          raster_io::load_map(resolve(manifest.parent_path(), row[3])));
      rows.push_back({row[0], row[1], text::shortest(c.pcc), text::shortest(c.sim)});
    }
    emit(o, out, "map_compare.csv",
         csv::to_string({"image_id", "method", "pcc", "sim"}, rows));
    return kExitOk;
  }
  if (o.map.empty() || o.reference.empty()) {
    throw ValidationError("map-compare needs --pairs or both --map and --reference");
  }
  const auto c = compare_to_reference(raster_io::load_map(o.map), raster_io::load_map(o.reference));
  emit(o, out, "map_compare.csv",
       csv::to_string({"pcc", "sim"}, {{text::shortest(c.pcc), text::shortest(c.sim)}}));
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw ValidationError("report needs --out");
  const auto fmt = report::parse_format(o.format);
  Options all = o;
  all.all_strata = true;
  const auto a = prepare(o, true);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  report::write_text(dir / "mos_table.csv", report::mos_table_csv(a.mos));
  report::write_text(dir / "outliers.csv", report::outliers_csv(a.ds, a.outliers));
  report::write_text(dir / "homogeneity.csv", report::homogeneity_csv(a.homogeneity));
  const auto rows = o.metrics.empty() ? std::vector<CorrelationRow>{} : correlations(o, a);
  if (fmt == report::Format::kMarkdown) {
    report::write_text(dir / "correlation.csv", report::correlation_csv(rows));
  }
  const auto written = report::emit_report(run_comparisons(all, a), rows, fmt, dir);
  out << "wrote " << written.size() + (fmt == report::Format::kMarkdown ? 4 : 3)
      << " files to " << dir.string() << '\n';
  return kExitOk;
}

SessionConfig session_config(const Options& o) {
  SessionConfig c;
  c.session_size = o.session_size;
  c.exposure = Millis(o.exposure_ms);
  c.isi = Millis(o.isi_ms);
  c.grace = Millis(o.grace_ms);
  c.seed = o.seed;
  c.shared_order = o.shared_order;
  return c;
}

fs::path log_path(const Options& o) {
  return o.log.empty() ? fs::path(o.study) / "events.jsonl" : fs::path(o.log);
}

HttpService* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const Options& o, std::ostream& out) {
  LoadOptions lo;
  lo.require_ratings = false;
  auto study = load_study(o.study, lo);
  FileEventLog log(log_path(o));
  SystemClock clock;
  SessionService service(std::move(study), session_config(o), log, clock);
  HttpOptions ho;
  ho.study_root = o.study;
  if (!o.static_dir.empty()) ho.static_dir = fs::path(o.static_dir);
  HttpService http(service, ho);
  const int port = http.bind(o.host, o.port);
  out << "listening on http://" << o.host << ':' << port << " (log " << log.path().string()
      << ")" << std::endl;
  g_server = &http;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  http.serve();
  g_server = nullptr;
  return kExitOk;
}

int cmd_export(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw ValidationError("export needs --out");
  LoadOptions lo;
  lo.require_ratings = false;
  auto study = load_study(o.study, lo);
  std::ifstream in(log_path(o), std::ios::binary);
  if (!in) throw IoError("cannot read event log " + log_path(o).string());
  std::stringstream ss;
  ss << in.rdbuf();
  // Replay into memory so exporting never appends to the durable log.
  MemoryEventLog mem;
  for (const auto& e : parse_event_lines(ss.str())) mem.append(e);
  SystemClock clock;
  SessionService service(std::move(study), session_config(o), mem, clock);
  service.export_study(o.out);
  out << "exported " << service.snapshot().scores.size() << " score rows to " << o.out << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app("Psycho-visual evaluation toolkit for explanation maps: MOS analysis, "
               "IAUC/DAUC metrics and the rating session service.",
               "xaimos");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("xaimos 1.0.0"));

  auto add_study = [&](CLI::App* s) {
    s->add_option("--study", o.study, "Study directory with participants/stimuli/scores CSV")
        ->required()
        ->check(CLI::ExistingDirectory);
    s->add_flag("--enforce-age-screening", o.enforce_age, "Reject raters outside ages 18-29");
  };
  auto add_out = [&](CLI::App* s) {
    s->add_option("--out", o.out, "Output directory (default: write to stdout)");
  };
  auto add_outlier = [&](CLI::App* s) {
    s->add_option("--k-sigma", o.k_sigma, "Outlier threshold in standard deviations")
        ->capture_default_str();
    s->add_option("--std", o.std_mode, "Standard deviation estimator")
        ->check(CLI::IsMember({"sample", "population"}))
        ->capture_default_str();
    s->add_flag("--iterative", o.iterative, "Repeat outlier screening until no flags remain");
  };
  auto add_homogeneity = [&](CLI::App* s) {
    s->add_option("--seed", o.seed, "Seed for group-size equalization draws")
        ->capture_default_str();
    s->add_option("--delta", o.delta, "MOS quantizer step")->capture_default_str();
    s->add_option("--pool-min", o.pool_min, "Minimum expected count per pooled category")
        ->capture_default_str();
    s->add_option("--repeats", o.repeats, "Subsample draws; the median-p draw is reported")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  };
  auto add_gate = [&](CLI::App* s) {
    s->add_option("--alpha", o.alpha, "Significance level")->capture_default_str();
    s->add_flag("--force-merge", o.force_merge,
                "Pool offline and online raters even when homogeneity fails");
  };
  auto add_session = [&](CLI::App* s) {
    s->add_option("--log", o.log, "Event log path (default: <study>/events.jsonl)");
    s->add_option("--session-size", o.session_size, "Stimuli per session")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s->add_option("--exposure-ms", o.exposure_ms, "Stimulus exposure window")
        ->capture_default_str();
    s->add_option("--isi-ms", o.isi_ms, "Inter-stimulus gray screen")->capture_default_str();
    s->add_option("--grace-ms", o.grace_ms, "Late-rating grace after exposure")
        ->capture_default_str();
    s->add_option("--seed", o.seed, "Session order seed")->capture_default_str();
    s->add_flag("--shared-order", o.shared_order, "Use one stimulus order for every participant");
  };

  auto* validate = app.add_subcommand("validate", "Load a study and check every invariant");
  add_study(validate);

  auto* aos = app.add_subcommand("aos", "Average opinion score per participant and method");
  add_study(aos);
  add_out(aos);

  auto* outl = app.add_subcommand("filter-outliers", "Flag raters whose AOS deviates from their group");
  add_study(outl);
  add_out(outl);
  add_outlier(outl);

  auto* mos = app.add_subcommand("mos", "MOS and per-stimulus std over surviving raters");
  add_study(mos);
  add_out(mos);
  add_outlier(mos);
  add_homogeneity(mos);
  add_gate(mos);
  mos->add_flag("--quantize", o.quantize, "Emit MOS rounded to the --delta grid");

  auto* homog = app.add_subcommand("homogeneity", "Chi-square test that offline and online groups agree");
  add_study(homog);
  add_out(homog);
  add_outlier(homog);
  add_homogeneity(homog);

  auto* compare = app.add_subcommand("compare", "Kruskal-Wallis and post-hoc Mann-Whitney per stratum");
  add_study(compare);
  add_out(compare);
  add_outlier(compare);
  add_homogeneity(compare);
  add_gate(compare);
  auto* stratum_opt = compare->add_option(
      "--stratum", o.stratum, "Stratum <all|distortion>:<well|poor|any>");
  auto* all_opt = compare->add_flag("--all-strata", o.all_strata, "Run the eight table strata");
  stratum_opt->excludes(all_opt);
  compare->add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember({"csv", "markdown"}))
      ->capture_default_str();

  auto* correlate = app.add_subcommand("correlate", "Spearman correlation of MOS with IAUC/DAUC");
  add_study(correlate);
  add_out(correlate);
  add_outlier(correlate);
  add_homogeneity(correlate);
  add_gate(correlate);
  correlate->add_option("--metrics", o.metrics, "metrics.csv with image_id,method,iauc,dauc")
      ->required()
      ->check(CLI::ExistingFile);
  correlate->add_option("--scope", o.scope, "Correlation scope")
      ->check(CLI::IsMember({"overall", "per-method", "both"}))
      ->capture_default_str();

  auto* iauc = app.add_subcommand("iauc-dauc", "Insertion/deletion AUC for each image and map");
  iauc->add_option("--pairs", o.pairs,
                   "Manifest CSV image_id,method,image_path,map_path,target_class")
      ->required()
      ->check(CLI::ExistingFile);
  add_out(iauc);
  iauc->add_option("--scorer", o.scorer, "Classifier scorer: wire <url> or cached <path>")
      ->required()
      ->expected(2)
      ->type_name("{wire <url>|cached <path>}");
  iauc->add_option("--step", o.step, "Pixel fraction per curve step")->capture_default_str();
  iauc->add_option("--baseline", o.baseline, "Fill for removed pixels")
      ->check(CLI::IsMember({"black", "mean", "blur"}))
      ->capture_default_str();
  iauc->add_option("--blur-sigma", o.blur_sigma, "Gaussian sigma for the blur baseline")
      ->capture_default_str();

  auto* mapc = app.add_subcommand("map-compare", "PCC and SIM between explanation and reference maps");
  mapc->add_option("--map", o.map, "Explanation map (XMAP or grayscale PNG)");
  mapc->add_option("--reference", o.reference, "Reference map, e.g. a gaze fixation density map");
  mapc->add_option("--pairs", o.pairs, "Manifest CSV image_id,method,map_path,reference_path")
      ->check(CLI::ExistingFile);
  add_out(mapc);

  auto* rep = app.add_subcommand("report", "Full analysis with all tables written to --out");
  add_study(rep);
  add_out(rep);
  add_outlier(rep);
  add_homogeneity(rep);
  add_gate(rep);
  rep->add_option("--metrics", o.metrics, "Optional metrics.csv for the correlation table")
      ->check(CLI::ExistingFile);
  rep->add_option("--scope", o.scope, "Correlation scope")
      ->check(CLI::IsMember({"overall", "per-method", "both"}))
      ->capture_default_str();
  rep->add_option("--format", o.format, "Table format")
      ->check(CLI::IsMember({"csv", "markdown"}))
      ->capture_default_str();

  auto* serve = app.add_subcommand("serve", "Run the rating session service over HTTP");
  serve->add_option("--study", o.study, "Study directory; stimuli.csv is required")
      ->required()
      ->check(CLI::ExistingDirectory);
  serve->add_option("--host", o.host, "Listen address")->capture_default_str();
  serve->add_option("--port", o.port, "Listen port (0 picks a free port)")->capture_default_str();
  serve->add_option("--static", o.static_dir, "Directory of rating client assets served at /")
      ->check(CLI::ExistingDirectory);
  add_session(serve);

  auto* exp = app.add_subcommand("export", "Project a session event log into study CSV files");
  exp->add_option("--study", o.study, "Study directory; stimuli.csv is required")
      ->required()
      ->check(CLI::ExistingDirectory);
  exp->add_option("--out", o.out, "Destination directory")->required();
  add_session(exp);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (validate->parsed()) return cmd_validate(o, out);
    if (aos->parsed()) return cmd_aos(o, out);
    if (outl->parsed()) return cmd_filter_outliers(o, out);
    if (mos->parsed()) return cmd_mos(o, out);
    if (homog->parsed()) return cmd_homogeneity(o, out);
    if (compare->parsed()) return cmd_compare(o, out);
    if (correlate->parsed()) return cmd_correlate(o, out);
    if (iauc->parsed()) return cmd_iauc_dauc(o, out);
    if (mapc->parsed()) return cmd_map_compare(o, out);
    if (rep->parsed()) return cmd_report(o, out);
    if (serve->parsed()) return cmd_serve(o, out);
    if (exp->parsed()) return cmd_export(o, out);
  } catch (const DegenerateError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace xaimos::cli
