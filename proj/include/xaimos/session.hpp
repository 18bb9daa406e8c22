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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xaimos/errors.hpp"
#include "xaimos/event_log.hpp"
#include "xaimos/studydata.hpp"
#include "xaimos/time_util.hpp"

namespace xaimos {

inline constexpr std::uint64_t kDefaultSeed = 20240917;

enum class Likert { kBad = 1, kPoor = 2, kFair = 3, kGood = 4, kExcellent = 5 };

struct LikertLabel {
  std::string_view label;
  int value;
};

// Label to value table shared with the rating client.
inline constexpr std::array<LikertLabel, 5> kLikertScale{{
    {"Excellent", 5}, {"Good", 4}, {"Fair", 3}, {"Poor", 2}, {"Bad", 1}}};

Likert parse_likert(std::string_view label);

struct SessionPlan {
  ParticipantId participant_id = 0;
  int session_index = 0;
  std::vector<StimulusId> stimulus_ids;
  std::uint64_t seed = 0;

  friend bool operator==(const SessionPlan&, const SessionPlan&) = default;
};

struct PlanOptions {
  std::size_t session_size = 225;
  // Every participant sees the same order; otherwise the shuffle is keyed by
  // participant id as well.
  bool shared_order = false;
};

// Seeded shuffle of every stimulus id, chunked into sessions.
std::vector<SessionPlan> plan_sessions(ParticipantId participant,
                                       const StudyDataset& study, std::uint64_t seed,
                                       const PlanOptions& options = {});

enum class Phase { kIsi, kExposure, kAwaitingRatingGrace, kPaused, kComplete };
std::string_view to_string(Phase p);

struct SessionState {
  SessionPlan plan;
  std::size_t cursor = 0;
  Phase phase = Phase::kIsi;
  TimePoint phase_deadline{};
  TimePoint shown_at{};        // onset of the cursor's stimulus
  bool pause_pending = false;  // interrupt requested mid-stimulus

  friend bool operator==(const SessionState&, const SessionState&) = default;
};

enum class SessionStatus { kNotStarted, kActive, kPaused, kComplete };

struct ParticipantState {
  ParticipantRecord record;
  bool eligible = false;
  std::string ineligible_reason;
  std::vector<SessionPlan> plans;
  std::vector<SessionStatus> status;
  std::optional<SessionState> current;
  std::set<StimulusId> shown;
  std::set<StimulusId> rated;

  friend bool operator==(const ParticipantState&, const ParticipantState&) = default;
};

struct ServiceState {
  std::map<ParticipantId, ParticipantState> participants;
  std::vector<OpinionScore> scores;  // log order; unrated entries have no score
  ParticipantId next_id = 1;
  std::size_t events = 0;

  friend bool operator==(const ServiceState&, const ServiceState&) = default;
};

struct SessionConfig {
  std::size_t session_size = 225;
  Millis exposure{20000};
  Millis isi{5000};
  Millis grace{2000};
  std::uint64_t seed = kDefaultSeed;
  bool shared_order = false;
};

class SessionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NotFoundError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct Registration {
  ParticipantId participant_id = 0;
  bool eligible = false;
  std::string reason;
};

struct RatingSubmission {
  ParticipantId participant_id = 0;
  StimulusId stimulus_id = 0;
  int likert = 0;
  std::int64_t client_elapsed_ms = 0;
};

enum class RatingOutcome {
  kAccepted,
  kDuplicate,
  kWrongStimulus,
  kLate,
  kPhaseViolation,
  kInvalidLikert
};
std::string_view to_string(RatingOutcome o);

struct RatingAck {
  RatingOutcome outcome = RatingOutcome::kAccepted;
  bool accepted() const { return outcome == RatingOutcome::kAccepted; }
};

struct Directive {
  enum class Kind { kStimulus, kGray, kPaused, kComplete, kIdle };
  Kind kind = Kind::kIdle;
  std::optional<Phase> phase;
  std::optional<StimulusRecord> stimulus;
  Millis remaining{0};
  int session_index = -1;
  std::size_t cursor = 0;
  std::size_t session_length = 0;
};
std::string_view to_string(Directive::Kind k);

// Event-sourced experiment orchestrator. Every mutation is an appended event
// applied through apply(); phase timers advance lazily against the clock
// whenever a participant is touched.
class SessionService {
 public:
  SessionService(StudyDataset study, SessionConfig config, EventLog& log,
                 const Clock& clock);

  Registration register_participant(Group group, int age, bool ishihara_pass);
  std::vector<SessionPlan> plans(ParticipantId pid) const;
  SessionState begin_session(ParticipantId pid, int session_index);
  Directive next_stimulus(ParticipantId pid);
  RatingAck submit_rating(const RatingSubmission& sub);
  SessionState interrupt_session(ParticipantId pid);
  SessionState resume_session(ParticipantId pid);
  std::optional<SessionState> current_state(ParticipantId pid);

  // Advances every participant to now, then projects the log.
  StudyDataset export_dataset();
  void export_study(const std::filesystem::path& root);

  ServiceState snapshot() const;
  const SessionConfig& config() const { return config_; }
  const StudyDataset& study() const { return study_; }

 private:
  void emit(nlohmann::json event);
  void apply(const nlohmann::json& event);
  void advance(ParticipantId pid, TimePoint now);
  ParticipantState& participant(ParticipantId pid);
  void enter_next(ParticipantState& p, TimePoint t);

  StudyDataset study_;
  SessionConfig config_;
  EventLog& log_;
  const Clock& clock_;
  mutable std::mutex mu_;
  ServiceState state_;
};

nlohmann::json to_json(const SessionState& s);
nlohmann::json to_json(const Directive& d);

}  // namespace xaimos
