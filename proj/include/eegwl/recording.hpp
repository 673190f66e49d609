#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace eegwl {

// [begin, end) over sample indices
struct GapInterval {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Continuous multi-channel µV time series at a fixed sample rate. Dropout
// regions are zero-filled in `data` and annotated in `gaps`; downstream
// stages never interpolate across a gap.
struct Recording {
  double sample_rate = 256.0;
  std::vector<std::string> channels;        // e.g. AF7, AF8
  std::vector<std::vector<double>> data;    // [channel][sample], µV
  std::vector<GapInterval> gaps;            // sorted, disjoint, in bounds

  std::size_t n_channels() const { return data.size(); }
  std::size_t n_samples() const { return data.empty() ? 0 : data[0].size(); }
  double duration_s() const { return n_samples() / sample_rate; }

  // throws ValidationError on broken invariants
  void validate() const;

  // contiguous non-gap [begin, end) runs, in order
  std::vector<GapInterval> segments() const;

  bool overlaps_gap(std::size_t begin, std::size_t end) const;
};

// Reconstructs a uniformly sampled recording from timestamped samples.
// Inter-sample intervals > max_gap_s become zero-filled gap annotations.
Recording segment_gaps(const std::vector<double>& timestamps_s,
                       const std::vector<std::vector<double>>& channel_data,
                       const std::vector<std::string>& channel_names,
                       double sample_rate, double max_gap_s);

// CSV with header `timestamp_s,AF7,AF8[,...]`; channels beyond the requested
// set are ignored with a warning. A sidecar `<path>.gaps.json` ([[start_s,
// end_s], ...]) is honored on load and written on save.
Recording load_recording_csv(const std::string& path, double sample_rate,
                             double max_gap_s,
                             std::vector<std::string>* warnings = nullptr);
void save_recording_csv(const Recording& rec, const std::string& path);

}  // namespace eegwl
