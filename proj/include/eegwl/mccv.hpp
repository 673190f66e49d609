#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "eegwl/forest.hpp"
#include "eegwl/rng.hpp"
#include "eegwl/spectral.hpp"

namespace eegwl {

struct LabeledSample {
  std::size_t id = 0;
  std::vector<double> features;
  std::string participant;
  std::string block;  // grouping unit; task-qualified to stay unique
  std::string label;  // "low"/"high" (within-task) or task name (cross-task)
};

enum class CvMode { within_task, cross_task };

struct MccvConfig {
  CvMode mode = CvMode::within_task;
  std::string task;  // within-task mode only
  int iterations = 1000;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  ForestParams forest;
  bool per_participant_min = false;  // step-2 balancing variant
  int split_retries = 10;
  double failure_budget = 0.05;
  int threads = 0;  // 0 = hardware concurrency
};

// Within-task mode: only `task` samples, binary low/high target.
// Cross-task mode: task-name target, restricted to participants that have
// samples from every task present in the feature set.
std::vector<LabeledSample> make_within_task_dataset(
    const std::vector<BandPowerSample>& features, const std::string& task);
std::vector<LabeledSample> make_cross_task_dataset(
    const std::vector<BandPowerSample>& features);

struct CvSplit {
  std::vector<std::size_t> train_ids, test_ids;  // sample ids
  std::vector<std::string> test_blocks;
};

// ceil(test_fraction * block count), minimum 1, whole blocks to test.
// Throws DataError when the participant has fewer than 2 blocks.
CvSplit split_blocks(const std::vector<LabeledSample>& participant_samples,
                     double test_fraction, Rng& rng);

// Downsample every class present on the side to the minority count, without
// replacement.
std::vector<std::size_t> subsample_within(
    const std::map<std::size_t, const LabeledSample*>& by_id,
    const std::vector<std::size_t>& side_ids, Rng& rng);

struct ScalerParams {
  std::vector<double> mean, sd;  // population SD; sd = 1 where degenerate
  std::vector<bool> degenerate;
};

ScalerParams fit_scaler(const std::vector<std::vector<double>>& rows);
std::vector<double> apply_scaler(const ScalerParams& p,
                                 const std::vector<double>& row);

// Downsample each (participant, label) cell to the minimum cell size
// (global, or per participant when per_participant_min), separately per
// side, without replacement.
std::vector<std::size_t> balance_global(
    const std::map<std::size_t, const LabeledSample*>& by_id,
    const std::vector<std::size_t>& side_ids, Rng& rng,
    bool per_participant_min = false);

// Optional instrumentation captured by one iteration; used by the
// structural test suite.
struct IterationTrace {
  std::map<std::string, std::vector<std::string>> test_blocks_by_participant;
  std::vector<std::size_t> train_ids_final, test_ids_final;
  std::map<std::string, ScalerParams> scaler_by_participant;
  std::vector<std::string> skipped_participants;
};

struct IterationResult {
  bool ok = false;
  std::string error;
  ClassificationReport overall;
  std::map<std::string, ClassificationReport> per_participant;
};

IterationResult run_iteration(const std::vector<LabeledSample>& dataset,
                              const MccvConfig& cfg, std::uint64_t seed,
                              IterationTrace* trace = nullptr);

struct MccvResult {
  int iterations_requested = 0;
  int iterations_ok = 0;
  std::vector<double> iteration_macro_f1;
  ClassificationReport mean_report;  // per-class metrics averaged over iterations
  double ci_half_width = 0;          // 95% CI of the mean macro F1
  bool ci_defined = false;
  std::map<std::string, double> per_participant_macro_f1;

  double mean_macro_f1() const;
};

// Per-iteration seeds derive from (seed, index); iterations may run in
// parallel and the result is independent of scheduling.
MccvResult run_mccv(const std::vector<LabeledSample>& dataset,
                    const MccvConfig& cfg);

void write_mccv_summary_json(const MccvResult& res, const MccvConfig& cfg,
                             const std::string& path);
void write_mccv_iterations_csv(const MccvResult& res, const std::string& path);
void write_mccv_participants_csv(const MccvResult& res, const std::string& path);

}  // namespace eegwl
