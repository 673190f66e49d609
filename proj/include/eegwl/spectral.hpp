#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "eegwl/recording.hpp"

namespace eegwl {

struct EpochLabel {
  std::string participant;
  std::string task;   // chess | nback | rotation | stroop
  std::string block;
  int workload = 0;   // ordinal level 0..3
};

// 1-second window of continuous data carrying one condition label.
struct Epoch {
  EpochLabel label;
  double start_s = 0;
  std::vector<std::vector<double>> samples;  // [channel][sample], µV
};

struct Band {
  std::string name;
  double low = 0;   // Hz, inclusive
  double high = 0;  // Hz, exclusive for membership; quadrature nodes span [low, high]
};

struct BandScheme {
  std::vector<Band> bands;

  // theta(4,8) alpha1(8,11) alpha2(11,14) beta1(14,25) beta2(25,35)
  // gamma1(35,40) gamma2(40,45)
  static BandScheme standard();

  // index of the band whose [low, high) contains f, or -1
  int band_of(double freq_hz) const;
  void validate() const;
};

struct BandPowerSample {
  EpochLabel label;
  double start_s = 0;
  std::vector<double> log_power;  // natural log of band-integrated µV² power
};

// A span of time carrying one condition; built from trial events.
struct LabeledInterval {
  double begin_s = 0;
  double end_s = 0;
  std::string block;
  int workload = 0;
};

// Consecutive non-overlapping fixed windows labeled with the condition at
// window start. Windows straddling a gap, a condition boundary, or unlabeled
// time are dropped.
std::vector<Epoch> epoch_stream(const Recording& rec,
                                const std::vector<LabeledInterval>& intervals,
                                double length_s, const std::string& participant,
                                const std::string& task);

// One-sided power spectral density on a uniform frequency grid.
struct Psd {
  std::vector<double> freq;     // Hz, starting at 0
  std::vector<double> density;  // µV²/Hz
  double df() const { return freq.size() > 1 ? freq[1] - freq[0] : 0.0; }
};

struct MultitaperConfig {
  double time_bandwidth = 2.5;  // NW
  int n_tapers = 4;
};

// Orthonormal DPSS (Slepian) tapers, k of them, for window length n.
std::vector<std::vector<double>> dpss_tapers(std::size_t n, double nw, int k);

// Average of the DPSS eigenspectra, unit taper weights. For a 1 s epoch at
// fs the grid lands on integer Hz.
Psd multitaper_psd(std::span<const double> samples, double fs,
                   const MultitaperConfig& cfg = {});

// Composite Simpson over a uniform grid (3/8 rule absorbs an odd tail).
double simpson_uniform(std::span<const double> values, double dx);

// Simpson integral of the density over each band's grid nodes in
// [low, high].
std::vector<double> band_power(const Psd& psd, const BandScheme& scheme);

// Per band log(max((a+b)/2, floor_eps)), natural log.
std::vector<double> fuse_probes_and_log(std::span<const double> af7_power,
                                        std::span<const double> af8_power,
                                        double floor_eps = 1e-20);

struct SpectralConfig {
  MultitaperConfig multitaper;
  double floor_eps = 1e-20;
  // average probes per frequency bin before integrating instead of per band
  // after (the two commute only approximately under Simpson weights)
  bool fuse_before_integration = false;
};

BandPowerSample compute_features(const Epoch& epoch, double fs,
                                 const BandScheme& scheme,
                                 const SpectralConfig& cfg = {});

// CSV contract between spectral and mccv/stats:
// participant,task,block,workload,epoch_start_s,theta,...,gamma2
void write_features_csv(const std::string& path,
                        const std::vector<BandPowerSample>& samples,
                        const BandScheme& scheme);
std::vector<BandPowerSample> read_features_csv(const std::string& path,
                                               const BandScheme& scheme);

}  // namespace eegwl
