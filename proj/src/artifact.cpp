#include "eegwl/artifact.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <json.hpp>

#include "eegwl/errors.hpp"
#include "eegwl/rng.hpp"

namespace eegwl {

namespace {

double peak_to_peak(const std::vector<double>& x) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return *hi - *lo;
}

double median_of(std::vector<double> v) {
  if (v.empty()) throw DataError("median of empty set");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
    m = 0.5 * (m + v[mid - 1]);
  }
  return m;
}

}  // namespace

RejectThresholds estimate_reject_thresholds(const std::vector<RawEpoch>& rest_epochs,
                                            const std::vector<double>& grid_uv,
                                            int folds, std::uint64_t seed) {
  if (grid_uv.empty()) throw ValidationError("empty threshold grid");
  if (!std::is_sorted(grid_uv.begin(), grid_uv.end()))
    throw ValidationError("threshold grid must be sorted ascending");
  if (folds < 2) throw ValidationError("need at least 2 folds");
  if (rest_epochs.size() < static_cast<std::size_t>(folds))
    throw CalibrationError("fewer rest epochs than folds");
  const std::size_t n_epochs = rest_epochs.size();
  const std::size_t n_channels = rest_epochs[0].size();
  const std::size_t n_samples = rest_epochs[0][0].size();
  for (const auto& e : rest_epochs) {
    if (e.size() != n_channels) throw ValidationError("epoch channel mismatch");
    for (const auto& ch : e)
      if (ch.size() != n_samples) throw ValidationError("epoch length mismatch");
  }

  // deterministic fold assignment
  std::vector<std::size_t> order(n_epochs);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<int> fold_of(n_epochs);
  for (std::size_t i = 0; i < n_epochs; ++i)
    fold_of[order[i]] = static_cast<int>(i % folds);

  RejectThresholds result;
  for (std::size_t c = 0; c < n_channels; ++c) {
    std::vector<double> p2p(n_epochs);
    for (std::size_t e = 0; e < n_epochs; ++e)
      p2p[e] = peak_to_peak(rest_epochs[e][c]);

    double best_err = std::numeric_limits<double>::infinity();
    double best_thr = 0.0;
    bool any = false;
    for (double thr : grid_uv) {
      double err_sum = 0.0;
      int err_folds = 0;
      bool feasible = true;
      for (int f = 0; f < folds && feasible; ++f) {
        // mean of kept training epochs vs pointwise median of validation
        std::vector<double> mean(n_samples, 0.0);
        std::size_t kept = 0;
        for (std::size_t e = 0; e < n_epochs; ++e) {
          if (fold_of[e] == f || p2p[e] > thr) continue;
          for (std::size_t i = 0; i < n_samples; ++i)
            mean[i] += rest_epochs[e][c][i];
          ++kept;
        }
        if (kept == 0) {
          feasible = false;
          break;
        }
        for (double& v : mean) v /= static_cast<double>(kept);

        std::vector<std::size_t> val;
        for (std::size_t e = 0; e < n_epochs; ++e)
          if (fold_of[e] == f) val.push_back(e);
        if (val.empty()) continue;
        double sq = 0.0;
        std::vector<double> column(val.size());
        for (std::size_t i = 0; i < n_samples; ++i) {
          for (std::size_t k = 0; k < val.size(); ++k)
            column[k] = rest_epochs[val[k]][c][i];
          const double med = median_of(column);
          sq += (mean[i] - med) * (mean[i] - med);
        }
        err_sum += std::sqrt(sq / n_samples);
        ++err_folds;
      }
      if (!feasible || err_folds == 0) continue;
      const double err = err_sum / err_folds;
      any = true;
      if (err <= best_err) {  // tie toward the larger threshold
        best_err = err;
        best_thr = thr;
      }
    }
    if (!any)
      throw CalibrationError("all rest epochs rejected at every grid value");
    result.peak_to_peak_uv.push_back(best_thr);
  }
  return result;
}

std::vector<RawEpoch> clean_rest(const std::vector<RawEpoch>& rest_epochs,
                                 const RejectThresholds& thresholds) {
  for (double t : thresholds.peak_to_peak_uv)
    if (!(t > 0) || !std::isfinite(t))
      throw ValidationError("invalid rejection threshold");
  std::vector<RawEpoch> kept;
  for (const auto& e : rest_epochs) {
    if (e.size() != thresholds.peak_to_peak_uv.size())
      throw ValidationError("epoch channel count != threshold count");
    bool ok = true;
    for (std::size_t c = 0; c < e.size() && ok; ++c)
      ok = peak_to_peak(e[c]) <= thresholds.peak_to_peak_uv[c];
    if (ok) kept.push_back(e);
  }
  if (kept.empty()) throw CalibrationError("no rest epochs survive thresholds");
  return kept;
}

namespace {

// windowed RMS per component over sliding windows (hop = w/2)
std::vector<std::vector<double>> component_window_rms(
    const std::vector<std::vector<double>>& comps, std::size_t w) {
  const std::size_t n = comps[0].size();
  const std::size_t hop = std::max<std::size_t>(1, w / 2);
  std::vector<std::vector<double>> rms(comps.size());
  for (std::size_t o = 0; o + w <= n; o += hop) {
    for (std::size_t k = 0; k < comps.size(); ++k) {
      double sq = 0.0;
      for (std::size_t i = o; i < o + w; ++i) sq += comps[k][i] * comps[k][i];
      rms[k].push_back(std::sqrt(sq / w));
    }
  }
  return rms;
}

}  // namespace

AsrModel asr_calibrate(const Recording& clean_rest, const AsrConfig& cfg) {
  clean_rest.validate();
  const std::size_t n_ch = clean_rest.n_channels();
  if (n_ch < 2) throw ValidationError("asr needs at least 2 channels");
  if (clean_rest.duration_s() < cfg.min_calibration_s)
    throw CalibrationError("need at least " + std::to_string(cfg.min_calibration_s) +
                           " s of clean rest data");

  const std::size_t n = clean_rest.n_samples();
  Eigen::MatrixXd x(n_ch, n);
  for (std::size_t c = 0; c < n_ch; ++c)
    for (std::size_t i = 0; i < n; ++i) x(c, i) = clean_rest.data[c][i];

  const Eigen::MatrixXd cov = (x * x.transpose()) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw CalibrationError("covariance eigendecomposition failed");
  const auto& evals = solver.eigenvalues();
  if (evals(0) <= 1e-12 * evals(n_ch - 1) || evals(n_ch - 1) <= 0)
    throw CalibrationError("rank-deficient calibration covariance");
  const Eigen::MatrixXd basis = solver.eigenvectors();  // columns = components

  AsrModel model;
  model.sample_rate = clean_rest.sample_rate;
  model.window_samples = static_cast<std::size_t>(
      std::llround(cfg.window_s * clean_rest.sample_rate));
  if (model.window_samples < 2) throw ValidationError("asr window too short");
  model.cutoff = cfg.cutoff;
  model.mixing.assign(n_ch, std::vector<double>(n_ch));
  for (std::size_t c = 0; c < n_ch; ++c)
    for (std::size_t k = 0; k < n_ch; ++k) model.mixing[c][k] = basis(c, k);

  // component series over calibration data
  const Eigen::MatrixXd comps = basis.transpose() * x;
  std::vector<std::vector<double>> comp_rows(n_ch, std::vector<double>(n));
  for (std::size_t k = 0; k < n_ch; ++k)
    for (std::size_t i = 0; i < n; ++i) comp_rows[k][i] = comps(k, i);
  const auto rms = component_window_rms(comp_rows, model.window_samples);
  if (rms[0].size() < 4)
    throw CalibrationError("too few calibration windows");

  // robust center + cutoff * robust spread of the windowed RMS
  for (std::size_t k = 0; k < n_ch; ++k) {
    const double center = median_of(rms[k]);
    std::vector<double> dev(rms[k].size());
    for (std::size_t i = 0; i < dev.size(); ++i)
      dev[i] = std::abs(rms[k][i] - center);
    const double spread = 1.4826 * median_of(dev);
    model.thresholds.push_back(center + cfg.cutoff * spread);
  }
  return model;
}

Recording asr_process(const AsrModel& model, const Recording& task) {
  task.validate();
  const std::size_t n_ch = task.n_channels();
  if (n_ch != model.mixing.size())
    throw ValidationError("channel count does not match asr model");
  if (task.sample_rate != model.sample_rate)
    throw ValidationError("sample rate does not match asr model");

  const std::size_t n = task.n_samples();
  const std::size_t w = std::min(model.window_samples, n);
  const std::size_t hop = std::max<std::size_t>(1, w / 2);

  Eigen::MatrixXd basis(n_ch, n_ch);
  for (std::size_t c = 0; c < n_ch; ++c)
    for (std::size_t k = 0; k < n_ch; ++k) basis(c, k) = model.mixing[c][k];

  Eigen::MatrixXd x(n_ch, n);
  for (std::size_t c = 0; c < n_ch; ++c)
    for (std::size_t i = 0; i < n; ++i) x(c, i) = task.data[c][i];

  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n_ch, n);
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(n);

  // periodic raised cosine; per-sample weight normalization makes untouched
  // regions reconstruct exactly
  Eigen::VectorXd hann(w);
  for (std::size_t i = 0; i < w; ++i)
    hann(i) = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / static_cast<double>(w));

  std::vector<std::size_t> offsets;
  for (std::size_t o = 0; o + w <= n; o += hop) offsets.push_back(o);
  if (offsets.empty() || offsets.back() + w < n) {
    if (n >= w) offsets.push_back(n - w);
  }

  std::vector<char> modified(n, 0);
  for (std::size_t o : offsets) {
    const Eigen::MatrixXd win = x.block(0, o, n_ch, w);
    Eigen::MatrixXd comps = basis.transpose() * win;
    bool touched = false;
    for (std::size_t k = 0; k < n_ch; ++k) {
      const double rms = std::sqrt(comps.row(k).squaredNorm() / w);
      if (rms > model.thresholds[k]) {
        comps.row(k).setZero();  // reconstruct from the retained subspace
        touched = true;
      }
    }
    const Eigen::MatrixXd recon = touched ? (basis * comps).eval() : win;
    for (std::size_t i = 0; i < w; ++i) {
      acc.col(o + i) += hann(i) * recon.col(i);
      weight(o + i) += hann(i);
      if (touched) modified[o + i] = 1;
    }
  }

  // samples never covered by a modified window pass through untouched, so a
  // run where no threshold trips is bit-identical to its input
  Recording out = task;
  for (std::size_t i = 0; i < n; ++i) {
    if (modified[i] && weight(i) > 1e-12) {
      for (std::size_t c = 0; c < n_ch; ++c) out.data[c][i] = acc(c, i) / weight(i);
    }
  }
  for (const auto& ch : out.data)
    for (double v : ch)
      if (!std::isfinite(v)) throw DataError("asr produced non-finite output");
  return out;
}

double EpochMask::kept_fraction() const {
  if (keep.empty()) return 0.0;
  return static_cast<double>(kept_count()) / keep.size();
}

std::size_t EpochMask::kept_count() const {
  return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
}

void EpochMask::save_jsonl(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    nlohmann::json j = {{"epoch_index", i},
                        {"kept", static_cast<bool>(keep[i])},
                        {"reason", reason[i]}};
    out << j.dump() << '\n';
  }
}

EpochMask gate_epochs(const std::vector<Epoch>& epochs, double limit_uv) {
  if (!(limit_uv > 0)) throw ValidationError("gate limit must be > 0");
  EpochMask mask;
  for (const auto& e : epochs) {
    bool ok = true;
    for (const auto& ch : e.samples)
      for (double v : ch)
        if (v < -limit_uv || v > limit_uv) {  // closed interval kept
          ok = false;
          break;
        }
    mask.keep.push_back(ok);
    mask.reason.push_back(ok ? "" : "amplitude outside gate");
  }
  return mask;
}

bool participant_included(const EpochMask& mask, double exclusion_cutoff) {
  if (mask.keep.empty()) throw ValidationError("empty epoch mask");
  const double excluded = 1.0 - mask.kept_fraction();
  return excluded < exclusion_cutoff;
}

std::string AsrModel::to_json() const {
  nlohmann::json j = {{"version", 1},
                      {"sample_rate", sample_rate},
                      {"window_samples", window_samples},
                      {"cutoff", cutoff},
                      {"mixing", mixing},
                      {"thresholds", thresholds}};
  return j.dump(2);
}

AsrModel AsrModel::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  AsrModel m;
  m.sample_rate = j.at("sample_rate").get<double>();
  m.window_samples = j.at("window_samples").get<std::size_t>();
  m.cutoff = j.at("cutoff").get<double>();
  m.mixing = j.at("mixing").get<std::vector<std::vector<double>>>();
  m.thresholds = j.at("thresholds").get<std::vector<double>>();
  return m;
}

void AsrModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << to_json() << '\n';
}

AsrModel AsrModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DependencyError("missing asr model file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json(text);
}

}  // namespace eegwl
