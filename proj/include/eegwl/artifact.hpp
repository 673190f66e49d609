#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "eegwl/recording.hpp"
#include "eegwl/spectral.hpp"

namespace eegwl {

// [channel][sample] window used for rest calibration (2 s epochs)
using RawEpoch = std::vector<std::vector<double>>;

struct RejectThresholds {
  std::vector<double> peak_to_peak_uv;  // per channel
};

// Cross-validated global rejection thresholds (reject-only AutoReject
// variant). Per channel, picks the grid value minimizing the K-fold RMS
// distance between the mean of kept training epochs and the pointwise median
// of validation epochs; ties break toward the larger threshold.
RejectThresholds estimate_reject_thresholds(const std::vector<RawEpoch>& rest_epochs,
                                            const std::vector<double>& grid_uv,
                                            int folds, std::uint64_t seed);

// Epoch kept iff every channel's peak-to-peak is within its threshold.
std::vector<RawEpoch> clean_rest(const std::vector<RawEpoch>& rest_epochs,
                                 const RejectThresholds& thresholds);

// Rest-calibrated artifact subspace reconstruction. Immutable after
// calibration; shareable across workers.
struct AsrModel {
  double sample_rate = 0;
  std::size_t window_samples = 0;
  double cutoff = 20.0;
  // eigenvector basis of the calibration covariance; mixing[c][k] is the
  // weight of component k on channel c
  std::vector<std::vector<double>> mixing;
  std::vector<double> thresholds;  // per-component windowed-RMS threshold

  std::string to_json() const;
  static AsrModel from_json(const std::string& text);
  void save(const std::string& path) const;
  static AsrModel load(const std::string& path);
};

struct AsrConfig {
  double cutoff = 20.0;   // k, in robust SDs
  double window_s = 0.5;
  double min_calibration_s = 30.0;
};

// Builds the covariance eigenbasis from >= 30 s of clean rest data;
// per-component threshold = median + cutoff * 1.4826 * MAD of windowed
// component RMS over the calibration data.
AsrModel asr_calibrate(const Recording& clean_rest, const AsrConfig& cfg = {});

// Sliding 50%-overlap windows projected into the model basis; components
// whose RMS exceeds their threshold are projected out, the rest pass
// through. Raised-cosine blending with per-sample weight normalization, so
// untouched windows reconstruct the input exactly.
Recording asr_process(const AsrModel& model, const Recording& task);

struct EpochMask {
  std::vector<bool> keep;
  std::vector<std::string> reason;  // empty when kept

  double kept_fraction() const;
  std::size_t kept_count() const;
  void save_jsonl(const std::string& path) const;
};

// Keep iff all samples of all channels lie in the closed interval
// [-limit, +limit].
EpochMask gate_epochs(const std::vector<Epoch>& epochs, double limit_uv = 100.0);

// Exclude iff the excluded fraction is >= cutoff.
bool participant_included(const EpochMask& mask, double exclusion_cutoff = 0.60);

}  // namespace eegwl
