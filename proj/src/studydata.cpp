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

#include "xaimos/studydata.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>

#include "xaimos/csv.hpp"
#include "xaimos/errors.hpp"
#include "xaimos/text.hpp"

namespace xaimos {

namespace {

const csv::Row kParticipantsHeader{"participant_id", "group", "age",
                                   "ishihara_pass"};
const csv::Row kStimuliHeader{"stimulus_id", "image_id",    "method",
                              "distortion",  "level",       "classification",
                              "ground_truth", "predicted",  "image_path",
                              "overlay_path"};
const csv::Row kScoresHeader{"participant_id", "stimulus_id", "score",
                             "elapsed_ms", "timestamp"};

std::string where(std::string_view file, std::size_t line) {
  return std::string(file) + " line " + std::to_string(line) + ": ";
}

}  // namespace

std::string_view to_string(Distortion d) {
  switch (d) {
    case Distortion::kAdditiveGaussianNoise: return "additive-gaussian-noise";
    case Distortion::kGaussianBlur: return "gaussian-blur";
    case Distortion::kBrightnessShift: return "uniform-random-brightness-shift";
  }
  return "?";
}

std::string_view to_string(DistortionLevel l) {
  return l == DistortionLevel::kWeak ? "weak" : "strong";
}

std::string_view to_string(Classification c) {
  return c == Classification::kWell ? "well" : "poor";
}

std::string_view to_string(Group g) {
  return g == Group::kOffline ? "offline" : "online";
}

Distortion parse_distortion(std::string_view s) {
  for (auto d : {Distortion::kAdditiveGaussianNoise, Distortion::kGaussianBlur,
                 Distortion::kBrightnessShift}) {
    if (s == to_string(d)) return d;
  }
  throw ValidationError("unknown distortion '" + std::string(s) + "'");
}

DistortionLevel parse_level(std::string_view s) {
  if (s == "weak") return DistortionLevel::kWeak;
  if (s == "strong") return DistortionLevel::kStrong;
  throw ValidationError("unknown distortion level '" + std::string(s) + "'");
}

Classification parse_classification(std::string_view s) {
  if (s == "well") return Classification::kWell;
  if (s == "poor") return Classification::kPoor;
  throw ValidationError("unknown classification '" + std::string(s) + "'");
}

Group parse_group(std::string_view s) {
  if (s == "offline") return Group::kOffline;
  if (s == "online") return Group::kOnline;
  throw ValidationError("unknown group '" + std::string(s) + "'");
}

const StimulusRecord& StudyDataset::stimulus(StimulusId id) const {
  for (const auto& s : stimuli) {
    if (s.stimulus_id == id) return s;
  }
  throw ValidationError("unknown stimulus id " + std::to_string(id));
}

const ParticipantRecord& StudyDataset::participant(ParticipantId id) const {
  for (const auto& p : participants) {
    if (p.participant_id == id) return p;
  }
  throw ValidationError("unknown participant id " + std::to_string(id));
}

void validate(StudyDataset& ds, const LoadOptions& options) {
  std::unordered_map<ParticipantId, const ParticipantRecord*> people;
  for (const auto& p : ds.participants) {
    if (!people.emplace(p.participant_id, &p).second) {
      throw ValidationError("duplicate participant id " +
                            std::to_string(p.participant_id));
    }
  }

  // Method indices follow first appearance in the stimulus list.
  ds.methods.clear();
  std::map<std::string, int> method_index;
  std::set<StimulusId> stimulus_ids;
  std::map<ImageId, std::set<int>> per_image;
  for (auto& s : ds.stimuli) {
    if (!stimulus_ids.insert(s.stimulus_id).second) {
      throw ValidationError("duplicate stimulus id " +
                            std::to_string(s.stimulus_id));
    }
    auto [it, fresh] = method_index.emplace(
        s.method.name, static_cast<int>(method_index.size()));
    if (fresh) ds.methods.push_back({s.method.name, it->second});
    s.method.index = it->second;
    if (!per_image[s.image_id].insert(s.method.index).second) {
      throw ValidationError("duplicate (image, method) pair (" +
                            std::to_string(s.image_id) + ", " + s.method.name +
                            ")");
    }
    const bool labels_match = s.ground_truth_label == s.predicted_label;
    if (labels_match != (s.classification == Classification::kWell)) {
      throw ValidationError(
          "stimulus " + std::to_string(s.stimulus_id) +
          ": classification disagrees with ground truth vs prediction");
    }
  }
  for (const auto& [image, methods] : per_image) {
    if (methods.size() != ds.methods.size()) {
      throw ValidationError("image " + std::to_string(image) + " has " +
                            std::to_string(methods.size()) + " of " +
                            std::to_string(ds.methods.size()) + " methods");
    }
  }
  ds.images_per_method =
      ds.methods.empty()
          ? 0
          : static_cast<int>(ds.stimuli.size() / ds.methods.size());

  std::set<std::pair<ParticipantId, StimulusId>> seen;
  for (const auto& o : ds.scores) {
    auto pit = people.find(o.participant_id);
    if (pit == people.end()) {
      throw ValidationError("score references unknown participant " +
                            std::to_string(o.participant_id));
    }
    if (!stimulus_ids.count(o.stimulus_id)) {
      throw ValidationError("score references unknown stimulus " +
                            std::to_string(o.stimulus_id));
    }
    if (o.score && (*o.score < 1 || *o.score > 5)) {
      throw ValidationError("score " + std::to_string(*o.score) +
                            " outside 1..5");
    }
    if (!seen.emplace(o.participant_id, o.stimulus_id).second) {
      throw ValidationError("duplicate score for (participant " +
                            std::to_string(o.participant_id) + ", stimulus " +
                            std::to_string(o.stimulus_id) + ")");
    }
    const auto& p = *pit->second;
    if (!p.ishihara_pass) {
      throw ValidationError("participant " + std::to_string(p.participant_id) +
                            " rated without passing colour screening");
    }
    if (options.enforce_age_screening && (p.age < 18 || p.age > 29)) {
      throw ValidationError("participant " + std::to_string(p.participant_id) +
                            " outside the 18..29 age band");
    }
  }
}

StudyDataset load_study(const std::filesystem::path& root,
                        const LoadOptions& options) {
  StudyDataset ds;

  auto read = [&](const char* name, const csv::Row& header) {
    const auto path = root / name;
    if (!options.require_ratings && !std::filesystem::exists(path)) return csv::Table{header, {}, {}};
    return csv::read_with_header(path, header);
  };

  const auto pt = read("participants.csv", kParticipantsHeader);
  for (std::size_t r = 0; r < pt.rows.size(); ++r) {
    const auto& row = pt.rows[r];
    try {
      ParticipantRecord p;
      p.participant_id = text::parse_int(row[0], "participant_id");
      p.group = parse_group(row[1]);
      p.age = static_cast<int>(text::parse_int(row[2], "age"));
      p.ishihara_pass = text::parse_bool(row[3], "ishihara_pass");
      ds.participants.push_back(p);
    } catch (const ValidationError& e) {
      throw ValidationError(where("participants.csv", pt.lines[r]) + e.what());
    }
  }

  const auto st = csv::read_with_header(root / "stimuli.csv", kStimuliHeader);
  for (std::size_t r = 0; r < st.rows.size(); ++r) {
    const auto& row = st.rows[r];
    try {
      StimulusRecord s;
      s.stimulus_id = text::parse_int(row[0], "stimulus_id");
      s.image_id = text::parse_int(row[1], "image_id");
      if (row[2].empty()) throw ValidationError("empty method name");
      s.method.name = row[2];
      s.distortion = {parse_distortion(row[3]), parse_level(row[4])};
      s.classification = parse_classification(row[5]);
      s.ground_truth_label = row[6];
      s.predicted_label = row[7];
      s.image_path = row[8];
      s.overlay_path = row[9];
      ds.stimuli.push_back(std::move(s));
    } catch (const ValidationError& e) {
      throw ValidationError(where("stimuli.csv", st.lines[r]) + e.what());
    }
  }

  const auto sc = read("scores.csv", kScoresHeader);
  for (std::size_t r = 0; r < sc.rows.size(); ++r) {
    const auto& row = sc.rows[r];
    try {
      OpinionScore o;
      o.participant_id = text::parse_int(row[0], "participant_id");
      o.stimulus_id = text::parse_int(row[1], "stimulus_id");
      if (!row[2].empty()) {
        const auto v = text::parse_int(row[2], "score");
        if (v < 1 || v > 5) {
          throw ValidationError("score " + row[2] + " outside 1..5");
        }
        o.score = static_cast<int>(v);
      }
      o.elapsed_ms = text::parse_int(row[3], "elapsed_ms");
      o.timestamp = parse_rfc3339(row[4]);
      ds.scores.push_back(o);
    } catch (const ValidationError& e) {
      throw ValidationError(where("scores.csv", sc.lines[r]) + e.what());
    }
  }

  validate(ds, options);
  return ds;
}

std::string scores_csv(const StudyDataset& ds) {
  std::vector<csv::Row> rows;
  rows.reserve(ds.scores.size());
  for (const auto& o : ds.scores) {
    rows.push_back({std::to_string(o.participant_id),
                    std::to_string(o.stimulus_id),
                    o.score ? std::to_string(*o.score) : std::string(),
                    std::to_string(o.elapsed_ms),
                    format_rfc3339(o.timestamp)});
  }
  return csv::to_string(kScoresHeader, rows);
}

std::string participants_csv(const StudyDataset& ds) {
  std::vector<csv::Row> rows;
  for (const auto& p : ds.participants) {
    rows.push_back({std::to_string(p.participant_id),
                    std::string(to_string(p.group)), std::to_string(p.age),
                    p.ishihara_pass ? "true" : "false"});
  }
  return csv::to_string(kParticipantsHeader, rows);
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& body) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot write " + path.string());
  const bool ok = std::fwrite(body.data(), 1, body.size(), f) == body.size();
  if (std::fclose(f) != 0 || !ok) throw IoError("write failed: " + path.string());
}

}  // namespace

void export_scores(const StudyDataset& ds, const std::filesystem::path& path) {
  write_text(path, scores_csv(ds));
}

void export_participants(const StudyDataset& ds,
                         const std::filesystem::path& path) {
  write_text(path, participants_csv(ds));
}

std::string stimuli_csv(const StudyDataset& ds) {
  std::vector<csv::Row> rows;
  for (const auto& s : ds.stimuli) {
    rows.push_back({std::to_string(s.stimulus_id), std::to_string(s.image_id),
                    s.method.name, std::string(to_string(s.distortion.kind)),
                    std::string(to_string(s.distortion.level)),
                    std::string(to_string(s.classification)),
                    s.ground_truth_label, s.predicted_label, s.image_path,
                    s.overlay_path});
  }
  return csv::to_string(kStimuliHeader, rows);
}

void export_stimuli(const StudyDataset& ds, const std::filesystem::path& path) {
  write_text(path, stimuli_csv(ds));
}

void export_study(const StudyDataset& ds, const std::filesystem::path& root) {
  std::filesystem::create_directories(root);
  export_participants(ds, root / "participants.csv");
  export_stimuli(ds, root / "stimuli.csv");
  export_scores(ds, root / "scores.csv");
}

Stratum parse_stratum(std::string_view s) {
  const auto colon = s.find(':');
  if (colon == std::string_view::npos) {
    throw ValidationError("stratum must be <distortion|all>:<well|poor|any>");
  }
  Stratum out;
  const auto d = s.substr(0, colon);
  const auto c = s.substr(colon + 1);
  if (d != "all") out.distortion = parse_distortion(d);
  if (c != "any") out.classification = parse_classification(c);
  return out;
}

std::string to_string(const Stratum& s) {
  std::string out = s.distortion ? std::string(to_string(*s.distortion)) : "all";
  out += ':';
  out += s.classification ? std::string(to_string(*s.classification)) : "any";
  return out;
}

bool matches(const Stratum& s, const StimulusRecord& r) {
  return (!s.distortion || *s.distortion == r.distortion.kind) &&
         (!s.classification || *s.classification == r.classification);
}

std::vector<StimulusRecord> stratify(const StudyDataset& ds,
                                     const Stratum& stratum) {
  std::vector<StimulusRecord> out;
  std::copy_if(ds.stimuli.begin(), ds.stimuli.end(), std::back_inserter(out),
               [&](const StimulusRecord& r) { return matches(stratum, r); });
  return out;
}

std::vector<Stratum> table_strata() {
  std::vector<Stratum> out;
  const std::optional<Distortion> kinds[] = {
      std::nullopt, Distortion::kAdditiveGaussianNoise,
      Distortion::kGaussianBlur, Distortion::kBrightnessShift};
  for (const auto& d : kinds) {
    for (auto c : {Classification::kPoor, Classification::kWell}) {
      out.push_back({d, c});
    }
  }
  return out;
}

}  // namespace xaimos
