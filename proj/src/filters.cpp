#include "eegwl/filters.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "eegwl/errors.hpp"

namespace eegwl {

namespace {

constexpr double kSettleTol = 1e-3;

using cd = std::complex<double>;

double cascade_gain(const std::vector<BiquadCoeffs>& sections, double w) {
  const cd z = std::exp(cd(0.0, -w));  // z^{-1}
  cd h(1.0, 0.0);
  for (const auto& s : sections) {
    const cd num = s.b0 + s.b1 * z + s.b2 * z * z;
    const cd den = 1.0 + s.a1 * z + s.a2 * z * z;
    h *= num / den;
  }
  return std::abs(h);
}

std::size_t settle_length(const std::vector<BiquadCoeffs>& sections, double fs) {
  const auto max_n = static_cast<std::size_t>(10.0 * fs);
  // impulse through the cascade
  std::vector<std::pair<double, double>> st(sections.size(), {0.0, 0.0});
  std::vector<double> h(max_n, 0.0);
  double peak = 0.0;
  for (std::size_t i = 0; i < max_n; ++i) {
    double x = (i == 0) ? 1.0 : 0.0;
    for (std::size_t s = 0; s < sections.size(); ++s) {
      const auto& c = sections[s];
      const double y = c.b0 * x + st[s].first;
      st[s].first = c.b1 * x - c.a1 * y + st[s].second;
      st[s].second = c.b2 * x - c.a2 * y;
      x = y;
    }
    h[i] = x;
    peak = std::max(peak, std::abs(x));
  }
  std::size_t last = 0;
  for (std::size_t i = 0; i < max_n; ++i)
    if (std::abs(h[i]) > kSettleTol * peak) last = i;
  return last + 1;
}

}  // namespace

FilterSpec design_bandpass(double fs, double low_hz, double high_hz, int order) {
  if (fs <= 0) throw ValidationError("sample rate must be > 0");
  if (!(0 < low_hz && low_hz < high_hz && high_hz < fs / 2))
    throw ValidationError("bandpass corners must satisfy 0 < low < high < fs/2");
  if (order < 1) throw ValidationError("filter order must be >= 1");

  const int n = order;
  // analog Butterworth prototype poles (left half-plane)
  std::vector<cd> proto;
  for (int k = 1; k <= n; ++k) {
    const double theta = M_PI * (2.0 * k + n - 1.0) / (2.0 * n);
    proto.emplace_back(std::cos(theta), std::sin(theta));
  }

  // prewarped corners and lowpass-to-bandpass transform
  const double w1 = 2.0 * fs * std::tan(M_PI * low_hz / fs);
  const double w2 = 2.0 * fs * std::tan(M_PI * high_hz / fs);
  const double bw = w2 - w1;
  const double w0 = std::sqrt(w1 * w2);
  std::vector<cd> s_poles;
  for (const cd& p : proto) {
    const cd pb = p * (bw / 2.0);
    const cd d = std::sqrt(pb * pb - cd(w0 * w0, 0.0));
    s_poles.push_back(pb + d);
    s_poles.push_back(pb - d);
  }

  // bilinear transform; zeros land at z = +1 (from s = 0) and z = -1
  const double k2 = 2.0 * fs;
  std::vector<cd> z_poles;
  for (const cd& s : s_poles) z_poles.push_back((k2 + s) / (k2 - s));

  // pair conjugates into sections; real poles pair among themselves
  std::vector<cd> reps;
  std::vector<double> reals;
  for (const cd& zp : z_poles) {
    if (zp.imag() > 1e-12)
      reps.push_back(zp);
    else if (std::abs(zp.imag()) <= 1e-12)
      reals.push_back(zp.real());
  }
  std::sort(reps.begin(), reps.end(),
            [](const cd& a, const cd& b) { return std::abs(a) < std::abs(b); });
  std::sort(reals.begin(), reals.end());

  FilterSpec spec;
  spec.kind = FilterKind::bandpass;
  spec.sample_rate = fs;
  for (const cd& zp : reps) {
    BiquadCoeffs c;
    c.b0 = 1.0;
    c.b1 = 0.0;
    c.b2 = -1.0;  // one zero at +1, one at -1
    c.a1 = -2.0 * zp.real();
    c.a2 = std::norm(zp);
    spec.sections.push_back(c);
  }
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    BiquadCoeffs c;
    c.b0 = 1.0;
    c.b1 = 0.0;
    c.b2 = -1.0;
    c.a1 = -(reals[i] + reals[i + 1]);
    c.a2 = reals[i] * reals[i + 1];
    spec.sections.push_back(c);
  }
  if (spec.sections.size() != static_cast<std::size_t>(n))
    throw ValidationError("bandpass pole pairing failed");

  // normalize to unit gain at the (digital) geometric center
  const double wc = 2.0 * std::atan(w0 / (2.0 * fs));
  const double g = cascade_gain(spec.sections, wc);
  const double per_section = std::pow(1.0 / g, 1.0 / spec.sections.size());
  for (auto& s : spec.sections) {
    s.b0 *= per_section;
    s.b1 *= per_section;
    s.b2 *= per_section;
  }
  if (!is_stable(spec)) throw ValidationError("designed bandpass is unstable");
  spec.settle_samples = settle_length(spec.sections, fs);
  return spec;
}

FilterSpec design_notch(double fs, double f0_hz, double q) {
  if (fs <= 0) throw ValidationError("sample rate must be > 0");
  if (!(0 < f0_hz && f0_hz < fs / 2))
    throw ValidationError("notch frequency must satisfy 0 < f0 < fs/2");
  if (q <= 0) throw ValidationError("notch q must be > 0");

  const double w0 = 2.0 * M_PI * f0_hz / fs;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  BiquadCoeffs c;
  c.b0 = 1.0 / a0;
  c.b1 = -2.0 * std::cos(w0) / a0;
  c.b2 = 1.0 / a0;
  c.a1 = -2.0 * std::cos(w0) / a0;
  c.a2 = (1.0 - alpha) / a0;

  FilterSpec spec;
  spec.kind = FilterKind::notch;
  spec.sample_rate = fs;
  spec.sections.push_back(c);
  spec.settle_samples = settle_length(spec.sections, fs);
  return spec;
}

double gain_at(const FilterSpec& spec, double freq_hz) {
  return cascade_gain(spec.sections, 2.0 * M_PI * freq_hz / spec.sample_rate);
}

bool is_stable(const FilterSpec& spec) {
  for (const auto& s : spec.sections) {
    // Schur-Cohn for a quadratic: |a2| < 1 and |a1| < 1 + a2
    if (!(std::abs(s.a2) < 1.0 && std::abs(s.a1) < 1.0 + s.a2)) return false;
  }
  return true;
}

std::vector<double> impulse_response(const FilterSpec& spec, std::size_t n) {
  FilterState state(spec, 1);
  std::vector<double> x(n, 0.0);
  if (n > 0) x[0] = 1.0;
  return state.process(0, x);
}

FilterState::FilterState(const FilterSpec& spec, std::size_t n_channels)
    : spec_(spec),
      state_(n_channels,
             std::vector<std::pair<double, double>>(spec.sections.size(),
                                                    {0.0, 0.0})) {}

std::vector<double> FilterState::process(std::size_t channel,
                                         std::span<const double> chunk) {
  auto& st = state_.at(channel);
  std::vector<double> out(chunk.begin(), chunk.end());
  for (std::size_t s = 0; s < spec_.sections.size(); ++s) {
    const auto& c = spec_.sections[s];
    double z1 = st[s].first, z2 = st[s].second;
    for (double& v : out) {
      const double x = v;
      const double y = c.b0 * x + z1;
      z1 = c.b1 * x - c.a1 * y + z2;
      z2 = c.b2 * x - c.a2 * y;
      v = y;
    }
    st[s] = {z1, z2};
  }
  return out;
}

std::vector<double> filtfilt(const FilterSpec& spec, std::span<const double> x) {
  const std::size_t pad = spec.pad_samples();
  if (x.size() <= pad)
    throw ValidationError("segment too short for zero-phase filtering");

  // odd reflection padding on both ends
  std::vector<double> ext;
  ext.reserve(x.size() + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i)
    ext.push_back(2.0 * x[0] - x[pad - i]);
  ext.insert(ext.end(), x.begin(), x.end());
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < pad; ++i)
    ext.push_back(2.0 * x[n - 1] - x[n - 2 - i]);

  FilterState fwd(spec, 1);
  std::vector<double> y = fwd.process(0, ext);
  std::reverse(y.begin(), y.end());
  FilterState bwd(spec, 1);
  y = bwd.process(0, y);
  std::reverse(y.begin(), y.end());

  return std::vector<double>(y.begin() + pad, y.begin() + pad + n);
}

Recording apply_offline(const Recording& rec, const FilterSpec& spec,
                        std::vector<std::string>* warnings) {
  rec.validate();
  if (rec.n_samples() == 0) throw ValidationError("empty recording");
  if (rec.sample_rate != spec.sample_rate)
    throw ValidationError("recording and filter sample rates differ");

  Recording out = rec;
  const std::size_t pad = spec.pad_samples();
  std::vector<GapInterval> extra_gaps;
  for (const auto& seg : rec.segments()) {
    const std::size_t len = seg.end - seg.begin;
    if (len <= pad) {
      // too short to settle; drop it from analysis
      for (auto& ch : out.data)
        std::fill(ch.begin() + seg.begin, ch.begin() + seg.end, 0.0);
      extra_gaps.push_back(seg);
      if (warnings)
        warnings->push_back("segment [" + std::to_string(seg.begin) + ", " +
                            std::to_string(seg.end) +
                            ") shorter than filter settle pad; skipped");
      continue;
    }
    for (std::size_t c = 0; c < rec.n_channels(); ++c) {
      const std::span<const double> seg_data(rec.data[c].data() + seg.begin, len);
      const std::vector<double> filtered = filtfilt(spec, seg_data);
      std::copy(filtered.begin(), filtered.end(), out.data[c].begin() + seg.begin);
    }
  }
  if (!extra_gaps.empty()) {
    auto merged = out.gaps;
    merged.insert(merged.end(), extra_gaps.begin(), extra_gaps.end());
    std::sort(merged.begin(), merged.end(),
              [](const GapInterval& a, const GapInterval& b) {
                return a.begin < b.begin;
              });
    std::vector<GapInterval> coalesced;
    for (const auto& g : merged) {
      if (!coalesced.empty() && g.begin <= coalesced.back().end)
        coalesced.back().end = std::max(coalesced.back().end, g.end);
      else
        coalesced.push_back(g);
    }
    out.gaps = coalesced;
  }
  out.validate();
  return out;
}

}  // namespace eegwl
