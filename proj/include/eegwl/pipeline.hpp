#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eegwl/artifact.hpp"
#include "eegwl/mccv.hpp"
#include "eegwl/spectral.hpp"
#include "eegwl/staircase.hpp"
#include "eegwl/synth.hpp"

namespace eegwl {

struct FilterConfig {
  double bandpass_low = 0.1;
  double bandpass_high = 45.0;
  int bandpass_order = 4;
  double notch_freq = 60.0;
  double notch_q = 30.0;
};

struct RejectConfig {
  std::vector<double> grid_uv = {40, 60, 80, 100, 150, 200, 300, 500};
  int folds = 5;
  double rest_epoch_s = 2.0;
};

struct GateConfig {
  double limit_uv = 100.0;
  double exclusion_cutoff = 0.60;
};

struct EpochConfig {
  double length_s = 1.0;
  double max_gap_s = 0.1;
};

struct StaircaseRunConfig {
  std::string puzzle_csv;
  std::vector<double> skills = {1000, 1400, 1800};
  int sessions_per_skill = 1;
  StaircaseConfig session;
};

// Single self-describing run configuration; every stage default from the
// module ledgers is surfaced here and overridable from JSON / CLI flags.
struct RunConfig {
  std::string out_dir = "out";
  std::string manifest;          // preprocess/features input
  std::uint64_t seed = 0;

  FilterConfig filter;
  AsrConfig asr;
  RejectConfig reject;
  GateConfig gate;
  EpochConfig epoch;
  SpectralConfig spectral;
  SynthSpec synth;
  MccvConfig cv;
  StaircaseRunConfig staircase;

  static RunConfig from_json_file(const std::string& path);
  std::string to_json() const;
};

// Stage entry points shared by the CLI and the acceptance suite. Each reads
// only declared inputs and writes only under cfg.out_dir.
SynthOutput cmd_synth(const RunConfig& cfg);
void cmd_preprocess(const RunConfig& cfg);
std::string cmd_features(const RunConfig& cfg);  // returns features csv path
MccvResult cmd_cv(const RunConfig& cfg);
void cmd_staircase(const RunConfig& cfg);
void cmd_report(const RunConfig& cfg);

}  // namespace eegwl
