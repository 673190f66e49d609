#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eegwl/spectral.hpp"

namespace eegwl {

struct TrialEvent {
  std::string participant;
  std::string task;   // chess | nback | rotation | stroop
  std::string block;
  int trial = 0;
  double onset_s = 0;
  double offset_s = 0;
  // task-specific: n for nback, degrees for rotation, 0/1 for stroop,
  // Glicko2 puzzle rating for chess
  double raw_difficulty = 0;
  bool correct = false;
  std::optional<double> rt_s;  // absent on timeout
};

struct WorkloadLabel {
  int level = 0;  // 0..3 (stroop: 0..1)
  bool high = false;
};

struct ParticipantManifest {
  std::string participant;
  std::string phase;  // "I" or "II"
  std::map<std::string, std::string> recordings;  // task -> recording csv
  std::map<std::string, std::string> events;      // task -> events jsonl
  std::string rest_recording;
  bool included = true;
};

std::vector<ParticipantManifest> load_manifest(const std::string& path);
void save_manifest(const std::vector<ParticipantManifest>& manifests,
                   const std::string& path);

std::vector<TrialEvent> load_events_jsonl(const std::string& path);
void save_events_jsonl(const std::vector<TrialEvent>& events,
                       const std::string& path);

// Quartile (0-3) of a puzzle rating within the distinct ratings one
// participant encountered; nearest-rank boundaries, ties share the lower
// quartile. Requires >= 4 distinct ratings.
std::map<double, int> chess_quartile_labels(const std::vector<double>& ratings);

// nback n -> n; rotation 0/50/100/150 -> 0..3; stroop 0/1; chess via the
// participant's quartile map. Binary: high iff level >= 2, except stroop
// where incongruent (level 1) is high.
WorkloadLabel assign_workload(const TrialEvent& event,
                              const std::map<double, int>* chess_quartiles);

bool is_high_workload(const std::string& task, int level);

struct BehavioralRow {
  std::string participant, task, block;
  int trial = 0;
  int level = 0;
  bool correct = false;
  bool timeout = false;
  std::optional<double> rt_s;
  std::optional<double> log_rt;
};

std::vector<BehavioralRow> behavioral_table(
    const std::vector<TrialEvent>& events,
    const std::map<std::string, std::map<double, int>>& chess_quartiles_by_participant);

// One row per (participant, task, block, workload) per band: cell mean of
// log power, plus a z-scored variant within (participant, task, band).
// Zero-variance groups emit z = 0 with a degenerate flag.
struct StatsRow {
  std::string participant, task, block;
  int workload = 0;
  std::string band;
  double mean_log_power = 0;
  double z = 0;
  bool degenerate = false;
};

std::vector<StatsRow> export_stats_table(const std::vector<BandPowerSample>& samples,
                                         const BandScheme& scheme);
void write_stats_csv(const std::vector<StatsRow>& rows, const std::string& path);
std::vector<StatsRow> read_stats_csv(const std::string& path);

// Condition intervals for epoch labeling: consecutive same-level trials in a
// block merge into one interval.
std::vector<LabeledInterval> events_to_intervals(
    const std::vector<TrialEvent>& events,
    const std::map<double, int>* chess_quartiles);

}  // namespace eegwl
