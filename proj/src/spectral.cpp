#include "eegwl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <mutex>

#include <Eigen/Dense>

#include "eegwl/csv.hpp"
#include "eegwl/errors.hpp"

namespace eegwl {

BandScheme BandScheme::standard() {
  BandScheme s;
  s.bands = {{"theta", 4, 8},   {"alpha1", 8, 11},  {"alpha2", 11, 14},
             {"beta1", 14, 25}, {"beta2", 25, 35},  {"gamma1", 35, 40},
             {"gamma2", 40, 45}};
  return s;
}

int BandScheme::band_of(double freq_hz) const {
  for (std::size_t i = 0; i < bands.size(); ++i)
    if (freq_hz >= bands[i].low && freq_hz < bands[i].high)
      return static_cast<int>(i);
  return -1;
}

void BandScheme::validate() const {
  if (bands.empty()) throw ValidationError("band scheme is empty");
  for (const auto& b : bands)
    if (!(b.low < b.high)) throw ValidationError("band " + b.name + " inverted");
  for (std::size_t i = 1; i < bands.size(); ++i)
    if (bands[i].low < bands[i - 1].high)
      throw ValidationError("bands overlap at " + bands[i].name);
}

std::vector<Epoch> epoch_stream(const Recording& rec,
                                const std::vector<LabeledInterval>& intervals,
                                double length_s, const std::string& participant,
                                const std::string& task) {
  rec.validate();
  if (length_s <= 0) throw ValidationError("epoch length must be > 0");
  std::vector<LabeledInterval> ivs = intervals;
  std::sort(ivs.begin(), ivs.end(),
            [](const LabeledInterval& a, const LabeledInterval& b) {
              return a.begin_s < b.begin_s;
            });

  std::vector<Epoch> epochs;
  const double fs = rec.sample_rate;
  const auto win = static_cast<std::size_t>(std::llround(length_s * fs));
  const double eps = 1e-9;
  for (double t = 0.0; ; t += length_s) {
    const auto begin = static_cast<std::size_t>(std::llround(t * fs));
    const std::size_t end = begin + win;
    if (end > rec.n_samples()) break;
    if (rec.overlaps_gap(begin, end)) continue;
    // the condition active at window start must span the whole window
    const LabeledInterval* cover = nullptr;
    for (const auto& iv : ivs) {
      if (iv.begin_s <= t + eps && t < iv.end_s) {
        if (t + length_s <= iv.end_s + eps) cover = &iv;
        break;
      }
    }
    if (!cover) continue;
    Epoch e;
    e.label = {participant, task, cover->block, cover->workload};
    e.start_s = t;
    e.samples.resize(rec.n_channels());
    for (std::size_t c = 0; c < rec.n_channels(); ++c)
      e.samples[c].assign(rec.data[c].begin() + begin, rec.data[c].begin() + end);
    epochs.push_back(std::move(e));
  }
  return epochs;
}

namespace {

using cd = std::complex<double>;

void fft_radix2(std::vector<cd>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const cd wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cd w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cd u = a[i + k];
        const cd v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

std::vector<cd> dft(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n > 0 && (n & (n - 1)) == 0) {
    std::vector<cd> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = cd(x[i], 0.0);
    fft_radix2(a);
    return a;
  }
  std::vector<cd> out(n, cd(0, 0));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const double ang = -2.0 * M_PI * static_cast<double>(k * i) / n;
      out[k] += x[i] * cd(std::cos(ang), std::sin(ang));
    }
  }
  return out;
}

struct TaperKey {
  std::size_t n;
  double nw;
  int k;
  bool operator<(const TaperKey& o) const {
    return std::tie(n, nw, k) < std::tie(o.n, o.nw, o.k);
  }
};

std::mutex g_taper_mutex;
std::map<TaperKey, std::vector<std::vector<double>>> g_taper_cache;

}  // namespace

std::vector<std::vector<double>> dpss_tapers(std::size_t n, double nw, int k) {
  if (n < 2) throw ValidationError("dpss window too short");
  if (k < 1 || static_cast<std::size_t>(k) > n)
    throw ValidationError("invalid taper count");
  if (nw <= 0 || nw >= n / 2.0) throw ValidationError("invalid time-bandwidth");

  {
    std::lock_guard<std::mutex> lock(g_taper_mutex);
    auto it = g_taper_cache.find({n, nw, k});
    if (it != g_taper_cache.end()) return it->second;
  }

  // symmetric tridiagonal eigenproblem for the Slepian sequences
  const double w = nw / static_cast<double>(n);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const double cw = std::cos(2.0 * M_PI * w);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (static_cast<double>(n) - 1.0 - 2.0 * i) / 2.0;
    m(i, i) = d * d * cw;
    if (i + 1 < n) {
      const double off = (i + 1.0) * (static_cast<double>(n) - 1.0 - i) / 2.0;
      m(i, i + 1) = off;
      m(i + 1, i) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success)
    throw DataError("dpss eigendecomposition failed");

  std::vector<std::vector<double>> tapers;
  for (int t = 0; t < k; ++t) {
    const auto col = solver.eigenvectors().col(n - 1 - t);
    std::vector<double> taper(n);
    for (std::size_t i = 0; i < n; ++i) taper[i] = col(i);
    // sign convention: positive mean, else positive leading lobe
    double sum = 0.0;
    for (double v : taper) sum += v;
    if (std::abs(sum) > 1e-10 ? sum < 0 : taper[n / 4] < 0)
      for (double& v : taper) v = -v;
    tapers.push_back(std::move(taper));
  }

  std::lock_guard<std::mutex> lock(g_taper_mutex);
  g_taper_cache[{n, nw, k}] = tapers;
  return tapers;
}

Psd multitaper_psd(std::span<const double> samples, double fs,
                   const MultitaperConfig& cfg) {
  const std::size_t n = samples.size();
  if (n < 2) throw ValidationError("epoch too short for spectral estimation");
  for (double v : samples)
    if (!std::isfinite(v)) throw DataError("non-finite sample in epoch");

  const auto tapers = dpss_tapers(n, cfg.time_bandwidth, cfg.n_tapers);
  const std::size_t n_freq = n / 2 + 1;
  Psd psd;
  psd.freq.resize(n_freq);
  psd.density.assign(n_freq, 0.0);
  for (std::size_t k = 0; k < n_freq; ++k) psd.freq[k] = k * fs / n;

  std::vector<double> tapered(n);
  for (const auto& taper : tapers) {
    for (std::size_t i = 0; i < n; ++i) tapered[i] = taper[i] * samples[i];
    const auto spec = dft(tapered);
    for (std::size_t k = 0; k < n_freq; ++k) {
      double p = std::norm(spec[k]) / fs;
      if (k != 0 && !(n % 2 == 0 && k == n_freq - 1)) p *= 2.0;
      psd.density[k] += p;
    }
  }
  for (double& v : psd.density) v /= tapers.size();
  return psd;
}

double simpson_uniform(std::span<const double> values, double dx) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const std::size_t intervals = n - 1;
  double total = 0.0;
  std::size_t i = 0;
  std::size_t remaining = intervals;
  // composite 1/3 rule over pairs; a trailing odd interval count ends with
  // the 3/8 rule (or a trapezoid when only one interval exists)
  if (remaining == 1)
    return 0.5 * dx * (values[0] + values[1]);
  if (remaining % 2 == 1) remaining -= 3;
  for (; i + 2 <= remaining; i += 2)
    total += dx / 3.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]);
  if ((intervals - remaining) == 3)
    total += 3.0 * dx / 8.0 *
             (values[i] + 3.0 * values[i + 1] + 3.0 * values[i + 2] + values[i + 3]);
  return total;
}

std::vector<double> band_power(const Psd& psd, const BandScheme& scheme) {
  scheme.validate();
  const double df = psd.df();
  if (df <= 0) throw ValidationError("psd grid too short");
  std::vector<double> powers;
  const double eps = 1e-9;
  for (const auto& band : scheme.bands) {
    if (band.low < psd.freq.front() - eps || band.high > psd.freq.back() + eps)
      throw ValidationError("band " + band.name + " outside psd grid");
    std::vector<double> vals;
    for (std::size_t i = 0; i < psd.freq.size(); ++i)
      if (psd.freq[i] >= band.low - eps && psd.freq[i] <= band.high + eps)
        vals.push_back(psd.density[i]);
    if (vals.size() < 2)
      throw ValidationError("band " + band.name + " covers fewer than 2 grid points");
    powers.push_back(simpson_uniform(vals, df));
  }
  return powers;
}

std::vector<double> fuse_probes_and_log(std::span<const double> af7_power,
                                        std::span<const double> af8_power,
                                        double floor_eps) {
  if (af7_power.size() != af8_power.size())
    throw ValidationError("probe band vectors differ in length");
  std::vector<double> out;
  out.reserve(af7_power.size());
  for (std::size_t i = 0; i < af7_power.size(); ++i) {
    if (af7_power[i] < 0 || af8_power[i] < 0)
      throw DataError("negative band power");
    out.push_back(std::log(std::max((af7_power[i] + af8_power[i]) / 2.0, floor_eps)));
  }
  return out;
}

BandPowerSample compute_features(const Epoch& epoch, double fs,
                                 const BandScheme& scheme,
                                 const SpectralConfig& cfg) {
  if (epoch.samples.size() != 2)
    throw ValidationError("feature extraction expects two probes");
  BandPowerSample out;
  out.label = epoch.label;
  out.start_s = epoch.start_s;
  const Psd p7 = multitaper_psd(epoch.samples[0], fs, cfg.multitaper);
  const Psd p8 = multitaper_psd(epoch.samples[1], fs, cfg.multitaper);
  if (cfg.fuse_before_integration) {
    Psd fused = p7;
    for (std::size_t i = 0; i < fused.density.size(); ++i)
      fused.density[i] = 0.5 * (p7.density[i] + p8.density[i]);
    const auto powers = band_power(fused, scheme);
    out.log_power = fuse_probes_and_log(powers, powers, cfg.floor_eps);
  } else {
    out.log_power = fuse_probes_and_log(band_power(p7, scheme),
                                        band_power(p8, scheme), cfg.floor_eps);
  }
  return out;
}

void write_features_csv(const std::string& path,
                        const std::vector<BandPowerSample>& samples,
                        const BandScheme& scheme) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << "participant,task,block,workload,epoch_start_s";
  for (const auto& b : scheme.bands) out << ',' << b.name;
  out << '\n';
  for (const auto& s : samples) {
    if (s.log_power.size() != scheme.bands.size())
      throw ValidationError("feature width does not match band scheme");
    out << s.label.participant << ',' << s.label.task << ',' << s.label.block
        << ',' << s.label.workload << ',' << format_double(s.start_s);
    for (double v : s.log_power) out << ',' << format_double(v);
    out << '\n';
  }
}

std::vector<BandPowerSample> read_features_csv(const std::string& path,
                                               const BandScheme& scheme) {
  const CsvTable table = read_csv(path);
  std::vector<int> band_cols;
  for (const auto& b : scheme.bands) {
    const int c = table.column(b.name);
    if (c < 0) throw ValidationError(path + ": missing band column " + b.name);
    band_cols.push_back(c);
  }
  const int cp = table.column("participant"), ct = table.column("task"),
            cb = table.column("block"), cw = table.column("workload"),
            cs = table.column("epoch_start_s");
  if (cp < 0 || ct < 0 || cb < 0 || cw < 0 || cs < 0)
    throw ValidationError(path + ": missing feature columns");
  std::vector<BandPowerSample> out;
  for (const auto& row : table.rows) {
    BandPowerSample s;
    s.label = {row[cp], row[ct], row[cb], std::stoi(row[cw])};
    s.start_s = std::stod(row[cs]);
    for (int c : band_cols) s.log_power.push_back(std::stod(row[c]));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace eegwl
