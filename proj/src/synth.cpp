#include "eegwl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "eegwl/csv.hpp"
#include "eegwl/errors.hpp"
#include "eegwl/rng.hpp"
#include "eegwl/spectral.hpp"

namespace eegwl {

namespace {

// mid-band carrier frequencies, one per standard band
const std::vector<double> kCarrierHz = {6.0, 9.5, 12.5, 19.5, 30.0, 37.5, 42.5};

// baseline per-band sinusoid power of 30 µV²
const double kBaseAmpUv = std::sqrt(2.0 * 30.0);

std::vector<double> levels_for(const std::string& task) {
  if (task == "nback") return {0, 1, 2, 3};
  if (task == "rotation") return {0, 50, 100, 150};
  if (task == "stroop") return {0, 1};
  if (task == "chess") return {700, 1000, 1300, 1600};  // quartile anchors
  throw ValidationError("unknown synth task: " + task);
}

void add_condition_signal(std::vector<std::vector<double>>& data,
                          std::size_t begin, std::size_t end, double fs,
                          bool high, const SynthSpec& spec, Rng& rng) {
  for (auto& chan : data) {
    for (std::size_t b = 0; b < kCarrierHz.size(); ++b) {
      const double shift = high ? spec.band_shift_high[b] : 0.0;
      const double amp = kBaseAmpUv * std::exp(shift / 2.0);
      const double phase = rng.uniform() * 2.0 * M_PI;
      for (std::size_t i = begin; i < end; ++i)
        chan[i] += amp * std::sin(2.0 * M_PI * kCarrierHz[b] *
                                      (static_cast<double>(i) / fs) +
                                  phase);
    }
    for (std::size_t i = begin; i < end; ++i)
      chan[i] += rng.normal(0.0, spec.noise_uv);
  }
}

void add_artifacts(std::vector<std::vector<double>>& data, double fs,
                   double rate_per_s, Rng& rng) {
  if (rate_per_s <= 0 || data.empty()) return;
  const std::size_t n = data[0].size();
  const auto burst = static_cast<std::size_t>(0.2 * fs);
  for (std::size_t sec = 0; sec * fs < static_cast<double>(n); ++sec) {
    if (!rng.bernoulli(std::min(1.0, rate_per_s))) continue;
    const auto start = static_cast<std::size_t>(sec * fs) +
                       rng.uniform_index(static_cast<std::size_t>(fs));
    for (auto& chan : data)
      for (std::size_t i = start; i < std::min(n, start + burst); ++i)
        chan[i] += 500.0;
  }
}

}  // namespace

void SynthSpec::validate() const {
  if (participants < 1) throw ValidationError("participants must be >= 1");
  if (tasks.empty()) throw ValidationError("tasks must be non-empty");
  for (const auto& t : tasks) levels_for(t);
  if (blocks_per_task < 1) throw ValidationError("blocks_per_task must be >= 1");
  if (seconds_per_condition <= 0)
    throw ValidationError("seconds_per_condition must be > 0");
  if (band_shift_high.size() != kCarrierHz.size())
    throw ValidationError("band_shift_high needs one entry per band");
  if (noise_uv < 0) throw ValidationError("noise_uv must be >= 0");
  if (artifact_rate < 0) throw ValidationError("artifact_rate must be >= 0");
  if (rest_seconds <= 0) throw ValidationError("rest_seconds must be > 0");
  if (sample_rate <= 0) throw ValidationError("sample_rate must be > 0");
  if (phase != "I" && phase != "II")
    throw ValidationError("phase must be I or II");
}

SynthOutput generate_synth_dataset(const SynthSpec& spec,
                                   const std::string& out_dir) {
  spec.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  SynthOutput out;
  std::uint64_t stream = 0;
  for (int p = 0; p < spec.participants; ++p) {
    char name[16];
    std::snprintf(name, sizeof(name), "p%02d", p + 1);
    const std::string pid = name;
    const fs::path pdir = fs::path(out_dir) / pid;
    fs::create_directories(pdir);

    ParticipantManifest manifest;
    manifest.participant = pid;
    manifest.phase = spec.phase;

    // rest: noise plus baseline oscillations, no condition structure
    {
      Rng rng(mix_seed(spec.seed, stream++));
      Recording rest;
      rest.sample_rate = spec.sample_rate;
      rest.channels = {"AF7", "AF8"};
      const auto n = static_cast<std::size_t>(spec.rest_seconds *
                                              spec.sample_rate);
      rest.data.assign(2, std::vector<double>(n, 0.0));
      add_condition_signal(rest.data, 0, n, spec.sample_rate, false, spec, rng);
      add_artifacts(rest.data, spec.sample_rate, spec.artifact_rate, rng);
      const std::string rest_path = (pdir / "rest.csv").string();
      save_recording_csv(rest, rest_path);
      manifest.rest_recording = rest_path;
    }

    for (const auto& task : spec.tasks) {
      Rng rng(mix_seed(spec.seed, stream++));
      const std::vector<double> levels = levels_for(task);
      const auto cond_samples = static_cast<std::size_t>(
          spec.seconds_per_condition * spec.sample_rate);
      const std::size_t n =
          cond_samples * levels.size() * spec.blocks_per_task;

      Recording rec;
      rec.sample_rate = spec.sample_rate;
      rec.channels = {"AF7", "AF8"};
      rec.data.assign(2, std::vector<double>(n, 0.0));

      std::vector<TrialEvent> events;
      std::size_t pos = 0;
      int trial = 0;
      for (int b = 0; b < spec.blocks_per_task; ++b) {
        const std::string block = "b" + std::to_string(b + 1);
        for (std::size_t li = 0; li < levels.size(); ++li) {
          const int level = static_cast<int>(li);
          const bool high = is_high_workload(task, level);
          add_condition_signal(rec.data, pos, pos + cond_samples,
                               spec.sample_rate, high, spec, rng);

          TrialEvent e;
          e.participant = pid;
          e.task = task;
          e.block = block;
          e.trial = ++trial;
          e.onset_s = static_cast<double>(pos) / spec.sample_rate;
          e.offset_s =
              static_cast<double>(pos + cond_samples) / spec.sample_rate;
          e.raw_difficulty = levels[li];
          e.correct = rng.bernoulli(0.8);
          if (rng.bernoulli(0.95))
            e.rt_s = 0.5 + 1.5 * rng.uniform();
          events.push_back(e);
          pos += cond_samples;
        }
      }
      add_artifacts(rec.data, spec.sample_rate, spec.artifact_rate, rng);

      const std::string rec_path = (pdir / (task + ".csv")).string();
      const std::string ev_path = (pdir / (task + ".events.jsonl")).string();
      save_recording_csv(rec, rec_path);
      save_events_jsonl(events, ev_path);
      manifest.recordings[task] = rec_path;
      manifest.events[task] = ev_path;
    }
    out.manifests.push_back(std::move(manifest));
  }

  out.manifest_path = (fs::path(out_dir) / "manifest.json").string();
  save_manifest(out.manifests, out.manifest_path);
  return out;
}

std::vector<std::string> write_synth_puzzle_csv(const std::string& path,
                                                int puzzles_per_bin,
                                                std::uint64_t seed) {
  if (puzzles_per_bin < 1)
    throw ValidationError("puzzles_per_bin must be >= 1");
  Rng rng(seed);
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << "PuzzleId,Rating,Themes\n";
  std::vector<std::string> ids;
  int serial = 0;
  for (double low = 600.0; low < 2250.0; low += 50.0) {
    for (int k = 0; k < puzzles_per_bin; ++k) {
      char id[16];
      std::snprintf(id, sizeof(id), "sz%05d", serial++);
      const double rating = low + 50.0 * rng.uniform();
      out << id << ',' << format_double(std::floor(rating)) << ','
          << "mateIn2 short\n";
      ids.emplace_back(id);
    }
  }
  return ids;
}

}  // namespace eegwl
