#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "eegwl/recording.hpp"

namespace eegwl {

// One second-order section, normalized so a0 = 1.
struct BiquadCoeffs {
  double b0 = 0, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

enum class FilterKind { bandpass, notch };

struct FilterSpec {
  FilterKind kind = FilterKind::bandpass;
  double sample_rate = 0;
  std::vector<BiquadCoeffs> sections;
  // samples until |h| decays below 1e-3 of its peak; reflection padding for
  // zero-phase application is 3x this
  std::size_t settle_samples = 0;

  std::size_t pad_samples() const { return 3 * settle_samples; }
};

// Butterworth bandpass of prototype order `order` (2*order poles), designed
// by bilinear transform with corner prewarping. Gain normalized to 1 at the
// geometric center frequency.
FilterSpec design_bandpass(double fs, double low_hz, double high_hz, int order);

// Biquad notch at f0 with quality factor q.
FilterSpec design_notch(double fs, double f0_hz, double q);

// |H(e^{j 2 pi f / fs})| of the cascade, single pass.
double gain_at(const FilterSpec& spec, double freq_hz);

// true iff every section's poles are strictly inside the unit circle
bool is_stable(const FilterSpec& spec);

// impulse response of the cascade (first n samples)
std::vector<double> impulse_response(const FilterSpec& spec, std::size_t n);

// Causal streaming state, transposed direct form II, one delay set per
// channel. Single-owner; chunk boundaries leave no trace in the output.
class FilterState {
 public:
  FilterState(const FilterSpec& spec, std::size_t n_channels);

  std::vector<double> process(std::size_t channel, std::span<const double> chunk);

  const FilterSpec& spec() const { return spec_; }

 private:
  FilterSpec spec_;
  // [channel][section] -> (z1, z2)
  std::vector<std::vector<std::pair<double, double>>> state_;
};

// Zero-phase forward-backward filtering of one contiguous segment with odd
// reflection padding of spec.pad_samples(). Throws ValidationError if the
// segment is not longer than the pad.
std::vector<double> filtfilt(const FilterSpec& spec, std::span<const double> x);

// Zero-phase filtering per contiguous segment. Segments too short for the
// reflection pad are skipped: zeroed, annotated as gaps in the result, and
// reported through `warnings`.
Recording apply_offline(const Recording& rec, const FilterSpec& spec,
                        std::vector<std::string>* warnings = nullptr);

}  // namespace eegwl
