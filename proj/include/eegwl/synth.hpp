#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eegwl/dataset.hpp"
#include "eegwl/recording.hpp"

namespace eegwl {

// Fixture generator: colored-noise recordings with band-limited oscillations
// whose amplitude encodes the workload condition, matching event logs, and a
// manifest. Everything downstream of the CLI can run on its output.
struct SynthSpec {
  int participants = 4;
  std::vector<std::string> tasks = {"chess", "nback", "rotation", "stroop"};
  int blocks_per_task = 3;
  double seconds_per_condition = 10;
  // log-power offset added to each band for high-workload conditions,
  // ordered as the standard band scheme
  std::vector<double> band_shift_high = {0, 0, 0, 0, 0, 0, 0};
  double noise_uv = 10.0;
  double artifact_rate = 0.0;  // 500 µV, 200 ms bursts per second
  double rest_seconds = 60.0;
  double sample_rate = 256.0;
  std::uint64_t seed = 0;
  std::string phase = "II";

  void validate() const;
};

struct SynthOutput {
  std::string manifest_path;
  std::vector<ParticipantManifest> manifests;
};

SynthOutput generate_synth_dataset(const SynthSpec& spec,
                                   const std::string& out_dir);

// Synthetic puzzle bank covering every bin, for staircase simulation runs.
std::vector<std::string> write_synth_puzzle_csv(const std::string& path,
                                                int puzzles_per_bin,
                                                std::uint64_t seed);

}  // namespace eegwl
