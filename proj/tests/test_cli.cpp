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

#include <cstdlib>
#include <set>
#include <sstream>

#include "test_util.hpp"
#include "xaimos/cli.hpp"
#include "xaimos/csv.hpp"
#include "xaimos/mospipeline.hpp"
#include "xaimos/raster_io.hpp"
#include "xaimos/saliency.hpp"
#include "xaimos/scorer.hpp"
#include "xaimos/studydata.hpp"
#include "xaimos/synthetic.hpp"

namespace xaimos {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

synthetic::Config planted() {
  synthetic::Config cfg;
  cfg.method_shift = {0.0, 0.5, 0.0};
  cfg.seed = 7;
  return cfg;
}

// Value of `column` in the first CSV row whose first field is `row`.
std::string field(const std::string& csv_text, const std::string& row, const std::string& column) {
  const auto t = csv::parse(csv_text);
  const auto col = std::find(t.header.begin(), t.header.end(), column) - t.header.begin();
  for (const auto& r : t.rows) {
    if (r[0] == row) return r[static_cast<std::size_t>(col)];
  }
  return "";
}

TEST(Cli, HelpListsSubcommands) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, cli::kExitOk);
  for (const char* sub : {"validate", "aos", "filter-outliers", "mos", "homogeneity", "compare",
                          "correlate", "iauc-dauc", "map-compare", "report", "serve", "export"}) {
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
  }
  EXPECT_EQ(run({"compare", "--bogus"}).code, cli::kExitValidation);
  EXPECT_EQ(run({}).code, cli::kExitValidation);
}

TEST(Cli, ValidateNamesOffendingLine) {
  testing::TempDir dir;
  export_study(synthetic::generate(planted()), dir.path());
  auto r = run({"validate", "--study", dir.path().string()});
  EXPECT_EQ(r.code, cli::kExitOk);
  EXPECT_NE(r.out.find("30 participants, 150 stimuli, 3 methods, N_I = 50"), std::string::npos);

  auto scores = testing::read_file(dir / "scores.csv");
  // Line 2 is the first data row.
  const auto row_start = scores.find('\n') + 1;
  const auto row_end = scores.find('\n', row_start);
  auto row = scores.substr(row_start, row_end - row_start);
  const auto c1 = row.find(',');
  const auto c2 = row.find(',', c1 + 1);
  const auto c3 = row.find(',', c2 + 1);
  row.replace(c2 + 1, c3 - c2 - 1, "6");
  scores.replace(row_start, row_end - row_start, row);
  testing::write_file(dir / "scores.csv", scores);
  r = run({"validate", "--study", dir.path().string()});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("scores.csv line 2"), std::string::npos) << r.err;

  EXPECT_EQ(run({"validate", "--study", (dir / "missing").string()}).code,
            cli::kExitValidation);
}

TEST(Cli, CompareDetectsPlantedShift) {
  testing::TempDir dir;
  export_study(synthetic::generate(planted()), dir.path());
  const auto r = run({"compare", "--study", dir.path().string(), "--stratum", "all:any"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_LT(std::stod(field(r.out, "omnibus", "p_value")), 0.05);
  EXPECT_EQ(field(r.out, "winner", "method_a"), "mlfem");

  const auto poor = run({"compare", "--study", dir.path().string(), "--stratum", "all:poor"});
  ASSERT_EQ(poor.code, cli::kExitOk) << poor.err;
  EXPECT_LT(std::stod(field(poor.out, "omnibus", "p_value")), 0.05);

  const auto md = run({"compare", "--study", dir.path().string(), "--all-strata",
                       "--format", "markdown"});
  ASSERT_EQ(md.code, cli::kExitOk) << md.err;
  EXPECT_NE(md.out.find("## Stratum gaussian-blur:well"), std::string::npos);
  EXPECT_EQ(run({"compare", "--study", dir.path().string()}).code, cli::kExitValidation);
}

TEST(Cli, FilterOutliersFlagsPlantedRater) {
  auto cfg = planted();
  cfg.outlier = 4;
  testing::TempDir dir;
  export_study(synthetic::generate(cfg), dir.path());
  const auto r = run({"filter-outliers", "--study", dir.path().string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  std::set<std::string> flagged;
  for (const auto& row : csv::parse(r.out).rows) flagged.insert(row[0]);
  EXPECT_EQ(flagged, std::set<std::string>{std::to_string(*synthetic::outlier_id(cfg))});
}

TEST(Cli, DegenerateExitCodes) {
  auto cfg = planted();
  cfg.images = 2;
  testing::TempDir small;
  export_study(synthetic::generate(cfg), small.path());
  auto r = run({"compare", "--study", small.path().string(), "--stratum", "gaussian-blur:any",
                "--force-merge"});
  EXPECT_EQ(r.code, cli::kExitDegenerate);
  EXPECT_FALSE(r.err.empty());

  // Online raters who always answer Excellent disagree with the offline group.
  auto ds = synthetic::generate(planted());
  std::set<ParticipantId> online;
  for (const auto& p : ds.participants) {
    if (p.group == Group::kOnline) online.insert(p.participant_id);
  }
  for (auto& s : ds.scores) {
    if (online.count(s.participant_id)) s.score = 5;
  }
  testing::TempDir split;
  export_study(ds, split.path());
  r = run({"mos", "--study", split.path().string()});
  EXPECT_EQ(r.code, cli::kExitDegenerate);
  EXPECT_NE(r.err.find("--force-merge"), std::string::npos);
  r = run({"mos", "--study", split.path().string(), "--force-merge"});
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  const auto h = run({"homogeneity", "--study", split.path().string()});
  EXPECT_EQ(h.code, cli::kExitOk);
  EXPECT_LT(std::stod(csv::parse(h.out).rows.at(0).at(1)), 0.05);
}

TEST(Cli, MosQuantized) {
  testing::TempDir dir;
  export_study(synthetic::generate(planted()), dir.path());
  const auto r = run({"mos", "--study", dir.path().string(), "--quantize", "--delta", "0.5"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto t = csv::parse(r.out);
  const auto col = std::find(t.header.begin(), t.header.end(), "mos") - t.header.begin();
  ASSERT_EQ(t.rows.size(), 150u);
  for (const auto& row : t.rows) {
    const double v = std::stod(row[static_cast<std::size_t>(col)]);
    EXPECT_EQ(v * 2, std::round(v * 2)) << v;
  }
}

TEST(Cli, ReportIsDeterministic) {
  testing::TempDir dir;
  export_study(synthetic::generate(planted()), dir.path());
  const auto a = dir / "out_a";
  const auto b = dir / "out_b";
  ASSERT_EQ(run({"report", "--study", dir.path().string(), "--out", a.string()}).code, 0);
  ASSERT_EQ(run({"report", "--study", dir.path().string(), "--out", b.string()}).code, 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    EXPECT_EQ(testing::read_file(e.path()), testing::read_file(b / e.path().filename()))
        << e.path().filename();
  }
  EXPECT_GE(files, 8u);
  EXPECT_TRUE(fs::exists(a / "kruskal.csv"));
  EXPECT_EQ(run({"report", "--study", dir.path().string()}).code, cli::kExitValidation);
}

class MeanRecorder : public Scorer {
 public:
  std::map<std::pair<std::string, std::string>, double> table;
  std::vector<double> score(std::span<const Image> images, const std::string& t) override {
    std::vector<double> out;
    for (const auto& im : images) {
      const double v = im.pixels.cast<double>().mean();
      table[{content_hash(im), t}] = v;
      out.push_back(v);
    }
    return out;
  }
};

TEST(Cli, IaucDaucFromCache) {
  testing::TempDir dir;
  raster_io::write_bytes(dir / "white.png", raster_io::encode_png(Image::filled(80, 80, 3, 1.0f)));
  Raster<float> ramp(80, 80);
  for (Eigen::Index i = 0; i < ramp.size(); ++i) ramp(i) = static_cast<float>((i * 7919) % 6400) / 6399.0f;
  raster_io::save_map(dir / "ramp.xmap", ExplanationMap(ramp));
  testing::write_file(dir / "pairs.csv",
                      "image_id,method,image_path,map_path,target_class\n"
                      "1,grad-cam,white.png,ramp.xmap,cat\n");

  // Record the frames the engine produces for the on-disk inputs.
  const auto image = raster_io::load_image(dir / "white.png");
  const auto map = raster_io::load_map(dir / "ramp.xmap");
  MeanRecorder rec;
  insertion_curve(image, map, rec, "cat");
  deletion_curve(image, map, rec, "cat");
  write_score_cache(dir / "cache.csv", rec.table);

  const auto r = run({"iauc-dauc", "--pairs", (dir / "pairs.csv").string(), "--scorer", "cached",
                      (dir / "cache.csv").string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  testing::write_file(dir / "metrics.csv", r.out);
  const auto metrics = load_metrics(dir / "metrics.csv");
  ASSERT_EQ(metrics.size(), 1u);
  const auto& m = metrics.at({1, "grad-cam"});
  EXPECT_NEAR(m.iauc, 0.5, 1e-6);
  EXPECT_NEAR(m.dauc, 0.5, 1e-6);

  // A different target class is not in the cache.
  testing::write_file(dir / "dog.csv",
                      "image_id,method,image_path,map_path,target_class\n"
                      "1,grad-cam,white.png,ramp.xmap,dog\n");
  EXPECT_EQ(run({"iauc-dauc", "--pairs", (dir / "dog.csv").string(), "--scorer", "cached",
                 (dir / "cache.csv").string()}).code,
            cli::kExitValidation);
  EXPECT_EQ(run({"iauc-dauc", "--pairs", (dir / "pairs.csv").string(), "--scorer", "remote",
                 "x"}).code,
            cli::kExitValidation);
}

TEST(Cli, MapCompare) {
  testing::TempDir dir;
  Raster<float> a(4, 4);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = static_cast<float>(i) / 15.0f;
  raster_io::save_map(dir / "a.xmap", ExplanationMap(a));
  const auto r = run({"map-compare", "--map", (dir / "a.xmap").string(), "--reference",
                      (dir / "a.xmap").string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out, "pcc,sim\n1.0,1.0\n");
  EXPECT_EQ(run({"map-compare", "--map", (dir / "a.xmap").string()}).code, cli::kExitValidation);
}

TEST(Cli, ExportOfEmptyLogIsHeaderOnly) {
  auto ds = synthetic::generate(planted());
  ds.participants.clear();
  ds.scores.clear();
  testing::TempDir dir;
  export_stimuli(ds, dir / "stimuli.csv");
  const auto out = dir / "bundle";
  EXPECT_EQ(run({"export", "--study", dir.path().string(), "--out", out.string()}).code,
            cli::kExitValidation);
  testing::write_file(dir / "events.jsonl", "");
  const auto r = run({"export", "--study", dir.path().string(), "--out", out.string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(testing::read_file(out / "scores.csv"),
            "participant_id,stimulus_id,score,elapsed_ms,timestamp\n");
  EXPECT_EQ(testing::read_file(out / "stimuli.csv"), testing::read_file(dir / "stimuli.csv"));
}

TEST(Cli, BinaryExitCode) {
  testing::TempDir dir;
  const std::string cmd = std::string(XAIMOS_CLI) + " validate --study " +
                          (dir / "nope").string() + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), cli::kExitValidation);
}

}  // namespace
}  // namespace xaimos
