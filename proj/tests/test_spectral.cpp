#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "eegwl/errors.hpp"
#include "eegwl/rng.hpp"
#include "eegwl/spectral.hpp"

using namespace eegwl;

namespace {

std::vector<double> sine(double freq, double fs, std::size_t n,
                         double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * M_PI * freq * i / fs + phase);
  return x;
}

// independent rectangular-window periodogram oracle (naive DFT)
Psd periodogram(const std::vector<double>& x, double fs) {
  const std::size_t n = x.size();
  const std::size_t n_freq = n / 2 + 1;
  Psd psd;
  psd.freq.resize(n_freq);
  psd.density.resize(n_freq);
  for (std::size_t k = 0; k < n_freq; ++k) {
    std::complex<double> acc(0, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const double ang = -2.0 * M_PI * k * i / static_cast<double>(n);
      acc += x[i] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    double p = std::norm(acc) / (fs * n);
    if (k != 0 && !(n % 2 == 0 && k == n_freq - 1)) p *= 2.0;
    psd.freq[k] = k * fs / n;
    psd.density[k] = p;
  }
  return psd;
}

}  // namespace

TEST_CASE("standard band scheme and half-open membership") {
  const BandScheme s = BandScheme::standard();
  REQUIRE(s.bands.size() == 7);
  s.validate();
  CHECK(s.bands[0].name == "theta");
  CHECK(s.bands[0].low == 4);
  CHECK(s.bands[6].high == 45);
  CHECK(s.band_of(4.0) == 0);
  CHECK(s.band_of(8.0) == 1);   // boundary belongs to the upper band
  CHECK(s.band_of(11.0) == 2);
  CHECK(s.band_of(44.999) == 6);
  CHECK(s.band_of(45.0) == -1);
  CHECK(s.band_of(3.9) == -1);
}

TEST_CASE("dpss tapers are orthonormal") {
  const auto tapers = dpss_tapers(256, 2.5, 4);
  REQUIRE(tapers.size() == 4);
  for (std::size_t a = 0; a < tapers.size(); ++a)
    for (std::size_t b = a; b < tapers.size(); ++b) {
      double dot = 0;
      for (std::size_t i = 0; i < 256; ++i) dot += tapers[a][i] * tapers[b][i];
      CHECK(dot == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-9));
    }
}

TEST_CASE("10 Hz tone: peak location and periodogram concentration") {
  const auto x = sine(10.0, 256, 256, 20.0);

  // independent oracle: >= 90% of 4-45 Hz power lands in alpha1
  const Psd oracle = periodogram(x, 256);
  double total = 0, in_alpha1 = 0;
  for (std::size_t k = 0; k < oracle.freq.size(); ++k) {
    const double f = oracle.freq[k];
    if (f >= 4 && f < 45) total += oracle.density[k];
    if (f >= 8 && f < 11) in_alpha1 += oracle.density[k];
  }
  CHECK(in_alpha1 / total >= 0.90);

  // multitaper: spectral peak at 10 Hz, argmax band = alpha1
  const Psd psd = multitaper_psd(x, 256);
  CHECK(psd.df() == doctest::Approx(1.0));
  std::size_t peak = 0;
  for (std::size_t k = 1; k < psd.density.size(); ++k)
    if (psd.density[k] > psd.density[peak]) peak = k;
  CHECK(psd.freq[peak] == doctest::Approx(10.0).epsilon(0.05));

  const BandScheme scheme = BandScheme::standard();
  const auto powers = band_power(psd, scheme);
  const auto argmax =
      std::max_element(powers.begin(), powers.end()) - powers.begin();
  CHECK(scheme.bands[argmax].name == "alpha1");
}

TEST_CASE("pure-tone band localization across 20 tones") {
  const BandScheme scheme = BandScheme::standard();
  const std::vector<double> tones = {5,    6,    6.5,  9,    9.5,  10,   12,
                                     12.5, 13,   16,   18,   20,   22,   27,
                                     29,   31,   36.5, 37.5, 41.5, 43};
  REQUIRE(tones.size() == 20);
  for (double f : tones) {
    const auto x = sine(f, 256, 256, 10.0, 0.7);
    const auto powers = band_power(multitaper_psd(x, 256), scheme);
    const auto argmax =
        std::max_element(powers.begin(), powers.end()) - powers.begin();
    CHECK_MESSAGE(argmax == scheme.band_of(f), "tone ", f, " Hz");
  }
}

TEST_CASE("zero signal gives all-zero density and band power") {
  const std::vector<double> zeros(256, 0.0);
  const Psd psd = multitaper_psd(zeros, 256);
  for (double v : psd.density) CHECK(v == 0.0);
  for (double p : band_power(psd, BandScheme::standard())) CHECK(p == 0.0);
}

TEST_CASE("Simpson exactness on flat density") {
  Psd psd;
  const double c = 3.7;
  for (int k = 0; k <= 128; ++k) {
    psd.freq.push_back(k);
    psd.density.push_back(c);
  }
  const BandScheme scheme = BandScheme::standard();
  const auto powers = band_power(psd, scheme);
  for (std::size_t b = 0; b < scheme.bands.size(); ++b) {
    const double width = scheme.bands[b].high - scheme.bands[b].low;
    CHECK(std::abs(powers[b] - c * width) <= 1e-12);
  }
}

TEST_CASE("simpson_uniform handles odd interval counts") {
  // integral of x^2 over [0, 3] with 4 points (3 intervals, 3/8 rule) = 9
  const std::vector<double> sq = {0, 1, 4, 9};
  CHECK(simpson_uniform(sq, 1.0) == doctest::Approx(9.0).epsilon(1e-12));
  // single interval falls back to the trapezoid
  const std::vector<double> two = {1.0, 3.0};
  CHECK(simpson_uniform(two, 0.5) == doctest::Approx(1.0));
}

TEST_CASE("white-noise Parseval over 200 epochs") {
  Rng rng(12345);
  const double sigma = 4.0;
  double integral_sum = 0;
  const int n_epochs = 200;
  for (int e = 0; e < n_epochs; ++e) {
    std::vector<double> x(256);
    for (double& v : x) v = rng.normal(0.0, sigma);
    const Psd psd = multitaper_psd(x, 256);
    integral_sum += simpson_uniform(psd.density, psd.df());
  }
  const double mean_integral = integral_sum / n_epochs;
  CHECK(mean_integral == doctest::Approx(sigma * sigma).epsilon(0.10));
}

TEST_CASE("amplitude scaling law 2 ln a") {
  const double a = 3.0;
  Epoch e1, e2;
  e1.samples = {sine(10.0, 256, 256, 5.0), sine(10.0, 256, 256, 5.0, 1.0)};
  e2.samples = e1.samples;
  for (auto& ch : e2.samples)
    for (double& v : ch) v *= a;
  const BandScheme scheme = BandScheme::standard();
  const auto f1 = compute_features(e1, 256, scheme);
  const auto f2 = compute_features(e2, 256, scheme);
  for (std::size_t b = 0; b < scheme.bands.size(); ++b)
    CHECK(std::abs((f2.log_power[b] - f1.log_power[b]) - 2.0 * std::log(a)) <=
          1e-6);
}

TEST_CASE("probe fusion and log floor") {
  const std::vector<double> p = {2.0};
  CHECK(fuse_probes_and_log(p, p)[0] == doctest::Approx(std::log(2.0)));
  const std::vector<double> a = {2.0}, b = {4.0};
  CHECK(fuse_probes_and_log(a, b)[0] == doctest::Approx(std::log(3.0)));
  const std::vector<double> z = {0.0};
  CHECK(fuse_probes_and_log(z, z, 1e-20)[0] ==
        doctest::Approx(std::log(1e-20)));
}

TEST_CASE("epoch stream labeling and drops") {
  Recording rec;
  rec.sample_rate = 256;
  rec.channels = {"AF7", "AF8"};
  rec.data.assign(2, std::vector<double>(256 * 10, 1.0));

  SUBCASE("single condition yields one epoch per second") {
    const std::vector<LabeledInterval> ivs = {{0.0, 10.0, "b1", 2}};
    const auto epochs = epoch_stream(rec, ivs, 1.0, "p01", "nback");
    REQUIRE(epochs.size() == 10);
    for (const auto& e : epochs) {
      CHECK(e.label.workload == 2);
      CHECK(e.label.block == "b1");
      CHECK(e.label.participant == "p01");
    }
  }

  SUBCASE("condition switch mid-window drops the straddling epoch") {
    const std::vector<LabeledInterval> ivs = {{0.0, 4.5, "b1", 0},
                                              {4.5, 10.0, "b1", 1}};
    const auto epochs = epoch_stream(rec, ivs, 1.0, "p01", "nback");
    CHECK(epochs.size() == 9);  // [4,5) straddles the boundary
    for (const auto& e : epochs) CHECK(e.start_s != doctest::Approx(4.0));
  }

  SUBCASE("gap overlap drops the epoch") {
    rec.gaps = {{static_cast<std::size_t>(3.2 * 256),
                 static_cast<std::size_t>(3.4 * 256)}};
    const std::vector<LabeledInterval> ivs = {{0.0, 10.0, "b1", 0}};
    const auto epochs = epoch_stream(rec, ivs, 1.0, "p01", "nback");
    CHECK(epochs.size() == 9);
    for (const auto& e : epochs) CHECK(e.start_s != doctest::Approx(3.0));
  }
}

TEST_CASE("features csv round-trip") {
  const BandScheme scheme = BandScheme::standard();
  std::vector<BandPowerSample> samples;
  BandPowerSample s;
  s.label = {"p01", "stroop", "b2", 1};
  s.start_s = 12.0;
  s.log_power = {0.1, -0.2, 0.3, 1.5, -2.25, 0.0, 7.125};
  samples.push_back(s);
  const std::string path = "test_features_roundtrip.csv";
  write_features_csv(path, samples, scheme);
  const auto back = read_features_csv(path, scheme);
  REQUIRE(back.size() == 1);
  CHECK(back[0].label.participant == "p01");
  CHECK(back[0].label.task == "stroop");
  CHECK(back[0].label.workload == 1);
  CHECK(back[0].start_s == 12.0);
  for (std::size_t b = 0; b < 7; ++b)
    CHECK(back[0].log_power[b] == samples[0].log_power[b]);
  std::remove(path.c_str());
}
