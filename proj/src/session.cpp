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

#include "xaimos/session.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace xaimos {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

std::string eligibility_reason(int age, bool ishihara_pass) {
  if (age < 18 || age > 29) return "age outside 18-29";
  if (!ishihara_pass) return "failed color vision screening";
  return "";
}

TimePoint event_time(const json& e) { return parse_rfc3339(e.at("t").get<std::string>()); }

}  // namespace

Likert parse_likert(std::string_view label) {
  for (const auto& l : kLikertScale) {
    if (l.label == label) return static_cast<Likert>(l.value);
  }
  throw ValidationError("unknown Likert label '" + std::string(label) + "'");
}

std::vector<SessionPlan> plan_sessions(ParticipantId participant,
                                       const StudyDataset& study, std::uint64_t seed,
                                       const PlanOptions& options) {
  if (options.session_size == 0) throw ValidationError("session size must be positive");
  std::vector<StimulusId> ids;
  ids.reserve(study.stimuli.size());
  for (const auto& s : study.stimuli) ids.push_back(s.stimulus_id);
  std::sort(ids.begin(), ids.end());

  const std::uint64_t key =
      options.shared_order ? splitmix64(seed)
                           : splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(participant)));
  std::mt19937_64 rng(key);
  for (std::size_t i = ids.size(); i > 1; --i) {
    std::swap(ids[i - 1], ids[uniform_below(rng, i)]);
  }

  std::vector<SessionPlan> plans;
  for (std::size_t start = 0; start < ids.size(); start += options.session_size) {
    const std::size_t end = std::min(ids.size(), start + options.session_size);
    plans.push_back({participant, static_cast<int>(plans.size()),
                     {ids.begin() + static_cast<std::ptrdiff_t>(start),
                      ids.begin() + static_cast<std::ptrdiff_t>(end)},
                     seed});
  }
  return plans;
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::kIsi: return "isi";
    case Phase::kExposure: return "exposure";
    case Phase::kAwaitingRatingGrace: return "awaiting-rating-grace";
    case Phase::kPaused: return "paused";
    case Phase::kComplete: return "complete";
  }
  return "";
}

std::string_view to_string(RatingOutcome o) {
  switch (o) {
    case RatingOutcome::kAccepted: return "accepted";
    case RatingOutcome::kDuplicate: return "duplicate";
    case RatingOutcome::kWrongStimulus: return "wrong-stimulus";
    case RatingOutcome::kLate: return "late";
    case RatingOutcome::kPhaseViolation: return "phase-violation";
    case RatingOutcome::kInvalidLikert: return "invalid-likert";
  }
  return "";
}

std::string_view to_string(Directive::Kind k) {
  switch (k) {
    case Directive::Kind::kStimulus: return "stimulus";
    case Directive::Kind::kGray: return "gray";
    case Directive::Kind::kPaused: return "paused";
    case Directive::Kind::kComplete: return "complete";
    case Directive::Kind::kIdle: return "idle";
  }
  return "";
}

SessionService::SessionService(StudyDataset study, SessionConfig config, EventLog& log,
                               const Clock& clock)
    : study_(std::move(study)), config_(config), log_(log), clock_(clock) {
  if (config_.session_size == 0) throw ValidationError("session size must be positive");
  for (const auto& e : log_.read_all()) apply(e);
}

void SessionService::emit(json event) {
  log_.append(event);
  apply(event);
}

ParticipantState& SessionService::participant(ParticipantId pid) {
  auto it = state_.participants.find(pid);
  if (it == state_.participants.end()) {
    throw NotFoundError("unknown participant " + std::to_string(pid));
  }
  return it->second;
}

void SessionService::enter_next(ParticipantState& p, TimePoint t) {
  auto& s = *p.current;
  ++s.cursor;
  if (s.cursor >= s.plan.stimulus_ids.size()) {
    s.phase = Phase::kComplete;
    s.phase_deadline = t;
    s.pause_pending = false;
    p.status[static_cast<std::size_t>(s.plan.session_index)] = SessionStatus::kComplete;
  } else if (s.pause_pending) {
    s.phase = Phase::kPaused;
    s.phase_deadline = t;
    s.pause_pending = false;
    p.status[static_cast<std::size_t>(s.plan.session_index)] = SessionStatus::kPaused;
  } else {
    s.phase = Phase::kIsi;
    s.phase_deadline = t + config_.isi;
  }
}

void SessionService::apply(const json& e) {
  const auto type = e.at("type").get<std::string>();
  const auto pid = e.at("pid").get<ParticipantId>();
  const TimePoint t = event_time(e);

  if (type == "registered") {
    ParticipantState p;
    p.record.participant_id = pid;
    p.record.group = parse_group(e.at("group").get<std::string>());
    p.record.age = e.at("age").get<int>();
    p.record.ishihara_pass = e.at("ishihara_pass").get<bool>();
    p.eligible = e.at("eligible").get<bool>();
    p.ineligible_reason = e.at("reason").get<std::string>();
    if (p.eligible) {
      p.plans = plan_sessions(pid, study_, e.at("seed").get<std::uint64_t>(),
                              {e.at("session_size").get<std::size_t>(),
                               e.at("shared_order").get<bool>()});
    }
    p.status.assign(p.plans.size(), SessionStatus::kNotStarted);
    state_.participants[pid] = std::move(p);
    state_.next_id = std::max(state_.next_id, pid + 1);
    ++state_.events;
    return;
  }

  auto it = state_.participants.find(pid);
  if (it == state_.participants.end()) {
    throw IoError("event log references unknown participant " + std::to_string(pid));
  }
  auto& p = it->second;
  if (type != "session_begun" && !p.current) {
    throw IoError("event log: '" + type + "' without an active session");
  }

  if (type == "session_begun") {
    const int idx = e.at("session_index").get<int>();
    SessionState s;
    s.plan = p.plans.at(static_cast<std::size_t>(idx));
    s.plan.stimulus_ids = e.at("stimulus_ids").get<std::vector<StimulusId>>();
    s.phase = Phase::kIsi;
    s.phase_deadline = t + config_.isi;
    p.current = std::move(s);
    p.status[static_cast<std::size_t>(idx)] = SessionStatus::kActive;
  } else if (type == "stimulus_shown") {
    auto& s = *p.current;
    s.phase = Phase::kExposure;
    s.phase_deadline = t + config_.exposure;
    s.shown_at = t;
    p.shown.insert(e.at("stimulus_id").get<StimulusId>());
  } else if (type == "grace_started") {
    auto& s = *p.current;
    s.phase = Phase::kAwaitingRatingGrace;
    s.phase_deadline = t + config_.grace;
  } else if (type == "rated") {
    const auto sid = e.at("stimulus_id").get<StimulusId>();
    state_.scores.push_back({pid, sid, e.at("likert").get<int>(),
                             e.at("client_elapsed_ms").get<std::int64_t>(), t});
    p.rated.insert(sid);
    enter_next(p, t);
  } else if (type == "expired") {
    const auto sid = e.at("stimulus_id").get<StimulusId>();
    state_.scores.push_back({pid, sid, std::nullopt, (t - p.current->shown_at).count(), t});
    enter_next(p, t);
  } else if (type == "interrupt_requested") {
    auto& s = *p.current;
    if (s.phase == Phase::kIsi) {
      s.phase = Phase::kPaused;
      s.phase_deadline = t;
      p.status[static_cast<std::size_t>(s.plan.session_index)] = SessionStatus::kPaused;
    } else {
      s.pause_pending = true;
    }
  } else if (type == "resumed") {
    auto& s = *p.current;
    s.phase = Phase::kIsi;
    s.phase_deadline = t + config_.isi;
    p.status[static_cast<std::size_t>(s.plan.session_index)] = SessionStatus::kActive;
  } else {
    throw IoError("event log: unknown event type '" + type + "'");
  }
  ++state_.events;
}

void SessionService::advance(ParticipantId pid, TimePoint now) {
  auto& p = participant(pid);
  while (p.current) {
    const auto& s = *p.current;
    if (now < s.phase_deadline) return;
    const std::string t = format_rfc3339(s.phase_deadline);
    const StimulusId sid = s.plan.stimulus_ids[std::min(s.cursor, s.plan.stimulus_ids.size() - 1)];
    switch (s.phase) {
      case Phase::kIsi:
        emit({{"type", "stimulus_shown"}, {"pid", pid}, {"t", t}, {"stimulus_id", sid},
              {"cursor", s.cursor}});
        break;
      case Phase::kExposure:
        emit({{"type", "grace_started"}, {"pid", pid}, {"t", t}});
        break;
      case Phase::kAwaitingRatingGrace:
        emit({{"type", "expired"}, {"pid", pid}, {"t", t}, {"stimulus_id", sid}});
        break;
      case Phase::kPaused:
      case Phase::kComplete:
        return;
    }
  }
}

Registration SessionService::register_participant(Group group, int age, bool ishihara_pass) {
  std::lock_guard lock(mu_);
  const ParticipantId pid = state_.next_id;
  const std::string reason = eligibility_reason(age, ishihara_pass);
  emit({{"type", "registered"},
        {"pid", pid},
        {"t", format_rfc3339(clock_.now())},
        {"group", std::string(to_string(group))},
        {"age", age},
        {"ishihara_pass", ishihara_pass},
        {"eligible", reason.empty()},
        {"reason", reason},
        {"seed", config_.seed},
        {"session_size", config_.session_size},
        {"shared_order", config_.shared_order}});
  return {pid, reason.empty(), reason};
}

std::vector<SessionPlan> SessionService::plans(ParticipantId pid) const {
  std::lock_guard lock(mu_);
  auto it = state_.participants.find(pid);
  if (it == state_.participants.end()) {
    throw NotFoundError("unknown participant " + std::to_string(pid));
  }
  if (!it->second.eligible) {
    throw SessionError("participant " + std::to_string(pid) +
                       " is ineligible: " + it->second.ineligible_reason);
  }
  return it->second.plans;
}

SessionState SessionService::begin_session(ParticipantId pid, int session_index) {
  std::lock_guard lock(mu_);
  const TimePoint now = clock_.now();
  advance(pid, now);
  auto& p = participant(pid);
  if (!p.eligible) {
    throw SessionError("participant " + std::to_string(pid) +
                       " is ineligible: " + p.ineligible_reason);
  }
  if (session_index < 0 || static_cast<std::size_t>(session_index) >= p.plans.size()) {
    throw SessionError("session index " + std::to_string(session_index) + " out of range");
  }
  const auto idx = static_cast<std::size_t>(session_index);
  switch (p.status[idx]) {
    case SessionStatus::kComplete:
      throw SessionError("session " + std::to_string(session_index) + " is already complete");
    case SessionStatus::kActive:
      throw SessionError("session " + std::to_string(session_index) + " is already running");
    case SessionStatus::kPaused:
      emit({{"type", "resumed"}, {"pid", pid}, {"t", format_rfc3339(now)}});
      return *p.current;
    case SessionStatus::kNotStarted:
      break;
  }
  for (std::size_t i = 0; i < idx; ++i) {
    if (p.status[i] != SessionStatus::kComplete) {
      throw SessionError("session " + std::to_string(i) + " must be completed before session " +
                         std::to_string(session_index));
    }
  }
  emit({{"type", "session_begun"},
        {"pid", pid},
        {"t", format_rfc3339(now)},
        {"session_index", session_index},
        {"stimulus_ids", p.plans[idx].stimulus_ids}});
  return *p.current;
}

Directive SessionService::next_stimulus(ParticipantId pid) {
  std::lock_guard lock(mu_);
  const TimePoint now = clock_.now();
  advance(pid, now);
  const auto& p = participant(pid);
  Directive d;
  if (!p.current) return d;
  const auto& s = *p.current;
  d.phase = s.phase;
  d.session_index = s.plan.session_index;
  d.cursor = s.cursor;
  d.session_length = s.plan.stimulus_ids.size();
  switch (s.phase) {
    case Phase::kIsi:
    case Phase::kAwaitingRatingGrace:
      d.kind = Directive::Kind::kGray;
      d.remaining = s.phase_deadline - now;
      break;
    case Phase::kExposure:
      d.kind = Directive::Kind::kStimulus;
      d.remaining = s.phase_deadline - now;
      d.stimulus = study_.stimulus(s.plan.stimulus_ids[s.cursor]);
      break;
    case Phase::kPaused:
      d.kind = Directive::Kind::kPaused;
      break;
    case Phase::kComplete:
      d.kind = Directive::Kind::kComplete;
      break;
  }
  return d;
}

RatingAck SessionService::submit_rating(const RatingSubmission& sub) {
  std::lock_guard lock(mu_);
  const TimePoint now = clock_.now();
  advance(sub.participant_id, now);
  auto& p = participant(sub.participant_id);
  if (sub.likert < 1 || sub.likert > 5) return {RatingOutcome::kInvalidLikert};
  if (p.rated.count(sub.stimulus_id)) return {RatingOutcome::kDuplicate};
  const bool live = p.current && (p.current->phase == Phase::kExposure ||
                                  p.current->phase == Phase::kAwaitingRatingGrace);
  const bool is_current =
      live && p.current->plan.stimulus_ids[p.current->cursor] == sub.stimulus_id;
  if (p.shown.count(sub.stimulus_id) && !is_current) return {RatingOutcome::kLate};
  if (!live) return {RatingOutcome::kPhaseViolation};
  if (!is_current) return {RatingOutcome::kWrongStimulus};
  emit({{"type", "rated"},
        {"pid", sub.participant_id},
        {"t", format_rfc3339(now)},
        {"stimulus_id", sub.stimulus_id},
        {"likert", sub.likert},
        {"client_elapsed_ms", sub.client_elapsed_ms}});
  return {RatingOutcome::kAccepted};
}

SessionState SessionService::interrupt_session(ParticipantId pid) {
  std::lock_guard lock(mu_);
  const TimePoint now = clock_.now();
  advance(pid, now);
  auto& p = participant(pid);
  if (!p.current || p.current->phase == Phase::kComplete) {
    throw SessionError("no running session to interrupt");
  }
  if (p.current->phase == Phase::kPaused) throw SessionError("session is already paused");
  if (!p.current->pause_pending) {
    emit({{"type", "interrupt_requested"}, {"pid", pid}, {"t", format_rfc3339(now)}});
  }
  return *p.current;
}

SessionState SessionService::resume_session(ParticipantId pid) {
  std::lock_guard lock(mu_);
  const TimePoint now = clock_.now();
  advance(pid, now);
  auto& p = participant(pid);
  if (!p.current || p.current->phase != Phase::kPaused) {
    throw SessionError("session is not paused");
  }
  emit({{"type", "resumed"}, {"pid", pid}, {"t", format_rfc3339(now)}});
  return *p.current;
}

std::optional<SessionState> SessionService::current_state(ParticipantId pid) {
  std::lock_guard lock(mu_);
  advance(pid, clock_.now());
  return participant(pid).current;
}

StudyDataset SessionService::export_dataset() {
  std::lock_guard lock(mu_);
  const TimePoint now = clock_.now();
  for (const auto& [pid, p] : state_.participants) advance(pid, now);
  StudyDataset ds;
  for (const auto& [pid, p] : state_.participants) ds.participants.push_back(p.record);
  ds.stimuli = study_.stimuli;
  ds.scores = state_.scores;
  validate(ds);
  return ds;
}

void SessionService::export_study(const std::filesystem::path& root) {
  const auto ds = export_dataset();
  std::filesystem::create_directories(root);
  export_participants(ds, root / "participants.csv");
  export_scores(ds, root / "scores.csv");
  export_stimuli(ds, root / "stimuli.csv");
}

ServiceState SessionService::snapshot() const {
  std::lock_guard lock(mu_);
  return state_;
}

json to_json(const SessionState& s) {
  return {{"participant_id", s.plan.participant_id},
          {"session_index", s.plan.session_index},
          {"cursor", s.cursor},
          {"session_length", s.plan.stimulus_ids.size()},
          {"phase", std::string(to_string(s.phase))},
          {"phase_deadline", format_rfc3339(s.phase_deadline)},
          {"pause_pending", s.pause_pending}};
}

json to_json(const Directive& d) {
  json j = {{"kind", std::string(to_string(d.kind))}, {"remaining_ms", d.remaining.count()}};
  if (d.phase) {
    j["phase"] = std::string(to_string(*d.phase));
    j["session_index"] = d.session_index;
    j["cursor"] = d.cursor;
    j["session_length"] = d.session_length;
  }
  if (d.stimulus) {
    const auto& s = *d.stimulus;
    j["stimulus"] = {{"stimulus_id", s.stimulus_id},
                     {"image", s.image_path},
                     {"overlay", s.overlay_path},
                     {"image_url", "/stimuli/" + std::to_string(s.stimulus_id) + "/image"},
                     {"overlay_url", "/stimuli/" + std::to_string(s.stimulus_id) + "/overlay"},
                     {"ground_truth", s.ground_truth_label},
                     {"prediction", s.predicted_label}};
  }
  return j;
}

}  // namespace xaimos
