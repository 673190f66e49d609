#include "eegwl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <json.hpp>

#include "eegwl/csv.hpp"
#include "eegwl/dataset.hpp"
#include "eegwl/errors.hpp"
#include "eegwl/filters.hpp"
#include "eegwl/plots.hpp"

namespace eegwl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_filter(const json& j, FilterConfig& c) {
  maybe(j, "bandpass_low", c.bandpass_low);
  maybe(j, "bandpass_high", c.bandpass_high);
  maybe(j, "bandpass_order", c.bandpass_order);
  maybe(j, "notch_freq", c.notch_freq);
  maybe(j, "notch_q", c.notch_q);
}

void parse_asr(const json& j, AsrConfig& c) {
  maybe(j, "cutoff", c.cutoff);
  maybe(j, "window_s", c.window_s);
  maybe(j, "min_calibration_s", c.min_calibration_s);
}

void parse_reject(const json& j, RejectConfig& c) {
  maybe(j, "grid_uv", c.grid_uv);
  maybe(j, "folds", c.folds);
  maybe(j, "rest_epoch_s", c.rest_epoch_s);
}

void parse_gate(const json& j, GateConfig& c) {
  maybe(j, "limit_uv", c.limit_uv);
  maybe(j, "exclusion_cutoff", c.exclusion_cutoff);
}

void parse_epoch(const json& j, EpochConfig& c) {
  maybe(j, "length_s", c.length_s);
  maybe(j, "max_gap_s", c.max_gap_s);
}

void parse_spectral(const json& j, SpectralConfig& c) {
  maybe(j, "time_bandwidth", c.multitaper.time_bandwidth);
  maybe(j, "n_tapers", c.multitaper.n_tapers);
  maybe(j, "floor_eps", c.floor_eps);
  maybe(j, "fuse_before_integration", c.fuse_before_integration);
}

void parse_synth(const json& j, SynthSpec& c) {
  maybe(j, "participants", c.participants);
  maybe(j, "tasks", c.tasks);
  maybe(j, "blocks_per_task", c.blocks_per_task);
  maybe(j, "seconds_per_condition", c.seconds_per_condition);
  maybe(j, "band_shift_high", c.band_shift_high);
  maybe(j, "noise_uv", c.noise_uv);
  maybe(j, "artifact_rate", c.artifact_rate);
  maybe(j, "rest_seconds", c.rest_seconds);
  maybe(j, "sample_rate", c.sample_rate);
  maybe(j, "seed", c.seed);
  maybe(j, "phase", c.phase);
}

void parse_forest(const json& j, ForestParams& c) {
  maybe(j, "n_trees", c.n_trees);
  maybe(j, "max_depth", c.max_depth);
  maybe(j, "min_samples_split", c.min_samples_split);
  maybe(j, "min_samples_leaf", c.min_samples_leaf);
  maybe(j, "max_features", c.max_features);
  maybe(j, "bootstrap", c.bootstrap);
}

void parse_cv(const json& j, MccvConfig& c) {
  if (j.contains("mode")) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "cross") {
      c.mode = CvMode::cross_task;
    } else if (mode.rfind("within:", 0) == 0) {
      c.mode = CvMode::within_task;
      c.task = mode.substr(7);
    } else {
      throw ValidationError("cv mode must be within:<task> or cross");
    }
  }
  maybe(j, "iterations", c.iterations);
  maybe(j, "test_fraction", c.test_fraction);
  maybe(j, "per_participant_min", c.per_participant_min);
  maybe(j, "split_retries", c.split_retries);
  maybe(j, "failure_budget", c.failure_budget);
  maybe(j, "threads", c.threads);
  if (j.contains("forest")) parse_forest(j.at("forest"), c.forest);
}

void parse_staircase(const json& j, StaircaseRunConfig& c) {
  maybe(j, "puzzle_csv", c.puzzle_csv);
  maybe(j, "skills", c.skills);
  maybe(j, "sessions_per_skill", c.sessions_per_skill);
  maybe(j, "rounds", c.session.rounds);
  maybe(j, "puzzles_per_round", c.session.puzzles_per_round);
  maybe(j, "start_rating", c.session.start_rating);
}

}  // namespace

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DependencyError("missing config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config parse error: " + std::string(e.what()));
  }
  RunConfig cfg;
  maybe(j, "out_dir", cfg.out_dir);
  maybe(j, "manifest", cfg.manifest);
  maybe(j, "seed", cfg.seed);
  if (j.contains("filter")) parse_filter(j.at("filter"), cfg.filter);
  if (j.contains("asr")) parse_asr(j.at("asr"), cfg.asr);
  if (j.contains("reject")) parse_reject(j.at("reject"), cfg.reject);
  if (j.contains("gate")) parse_gate(j.at("gate"), cfg.gate);
  if (j.contains("epoch")) parse_epoch(j.at("epoch"), cfg.epoch);
  if (j.contains("spectral")) parse_spectral(j.at("spectral"), cfg.spectral);
  if (j.contains("synth")) parse_synth(j.at("synth"), cfg.synth);
  if (j.contains("cv")) parse_cv(j.at("cv"), cfg.cv);
  if (j.contains("staircase")) parse_staircase(j.at("staircase"), cfg.staircase);
  return cfg;
}

std::string RunConfig::to_json() const {
  json j;
  j["out_dir"] = out_dir;
  j["manifest"] = manifest;
  j["seed"] = seed;
  j["filter"] = {{"bandpass_low", filter.bandpass_low},
                 {"bandpass_high", filter.bandpass_high},
                 {"bandpass_order", filter.bandpass_order},
                 {"notch_freq", filter.notch_freq},
                 {"notch_q", filter.notch_q}};
  j["asr"] = {{"cutoff", asr.cutoff},
              {"window_s", asr.window_s},
              {"min_calibration_s", asr.min_calibration_s}};
  j["reject"] = {{"grid_uv", reject.grid_uv},
                 {"folds", reject.folds},
                 {"rest_epoch_s", reject.rest_epoch_s}};
  j["gate"] = {{"limit_uv", gate.limit_uv},
               {"exclusion_cutoff", gate.exclusion_cutoff}};
  j["epoch"] = {{"length_s", epoch.length_s}, {"max_gap_s", epoch.max_gap_s}};
  j["spectral"] = {{"time_bandwidth", spectral.multitaper.time_bandwidth},
                   {"n_tapers", spectral.multitaper.n_tapers},
                   {"floor_eps", spectral.floor_eps},
                   {"fuse_before_integration", spectral.fuse_before_integration}};
  j["synth"] = {{"participants", synth.participants},
                {"tasks", synth.tasks},
                {"blocks_per_task", synth.blocks_per_task},
                {"seconds_per_condition", synth.seconds_per_condition},
                {"band_shift_high", synth.band_shift_high},
                {"noise_uv", synth.noise_uv},
                {"artifact_rate", synth.artifact_rate},
                {"rest_seconds", synth.rest_seconds},
                {"sample_rate", synth.sample_rate},
                {"seed", synth.seed},
                {"phase", synth.phase}};
  j["cv"] = {{"mode", cv.mode == CvMode::cross_task ? "cross"
                                                    : "within:" + cv.task},
             {"iterations", cv.iterations},
             {"test_fraction", cv.test_fraction},
             {"per_participant_min", cv.per_participant_min},
             {"split_retries", cv.split_retries},
             {"failure_budget", cv.failure_budget},
             {"threads", cv.threads},
             {"forest",
              {{"n_trees", cv.forest.n_trees},
               {"max_depth", cv.forest.max_depth},
               {"min_samples_split", cv.forest.min_samples_split},
               {"min_samples_leaf", cv.forest.min_samples_leaf},
               {"max_features", cv.forest.max_features},
               {"bootstrap", cv.forest.bootstrap}}}};
  j["staircase"] = {{"puzzle_csv", staircase.puzzle_csv},
                    {"skills", staircase.skills},
                    {"sessions_per_skill", staircase.sessions_per_skill},
                    {"rounds", staircase.session.rounds},
                    {"puzzles_per_round", staircase.session.puzzles_per_round},
                    {"start_rating", staircase.session.start_rating}};
  return j.dump(2);
}

SynthOutput cmd_synth(const RunConfig& cfg) {
  SynthSpec spec = cfg.synth;
  if (spec.seed == 0) spec.seed = cfg.seed;
  return generate_synth_dataset(spec, (fs::path(cfg.out_dir) / "data").string());
}

namespace {

// chop the gap-free segments of a recording into fixed windows
std::vector<RawEpoch> cut_epochs(const Recording& rec, double epoch_s) {
  const auto len = static_cast<std::size_t>(epoch_s * rec.sample_rate);
  std::vector<RawEpoch> out;
  for (const auto& seg : rec.segments()) {
    for (std::size_t start = seg.begin; start + len <= seg.end; start += len) {
      RawEpoch ep(rec.n_channels());
      for (std::size_t c = 0; c < rec.n_channels(); ++c)
        ep[c].assign(rec.data[c].begin() + start,
                     rec.data[c].begin() + start + len);
      out.push_back(std::move(ep));
    }
  }
  return out;
}

Recording concat_epochs(const std::vector<RawEpoch>& epochs,
                        const Recording& like) {
  Recording rec;
  rec.sample_rate = like.sample_rate;
  rec.channels = like.channels;
  rec.data.resize(like.n_channels());
  for (const auto& ep : epochs)
    for (std::size_t c = 0; c < ep.size(); ++c)
      rec.data[c].insert(rec.data[c].end(), ep[c].begin(), ep[c].end());
  return rec;
}

std::map<double, int> quartiles_for(const std::vector<TrialEvent>& events) {
  std::vector<double> ratings;
  for (const auto& e : events) ratings.push_back(e.raw_difficulty);
  return chess_quartile_labels(ratings);
}

std::vector<Epoch> task_epochs(const Recording& rec,
                               const std::vector<TrialEvent>& events,
                               const std::string& participant,
                               const std::string& task,
                               double length_s) {
  const std::map<double, int> quartiles =
      task == "chess" ? quartiles_for(events) : std::map<double, int>{};
  const auto intervals =
      events_to_intervals(events, task == "chess" ? &quartiles : nullptr);
  return epoch_stream(rec, intervals, length_s, participant, task);
}

}  // namespace

void cmd_preprocess(const RunConfig& cfg) {
  if (cfg.manifest.empty())
    throw ValidationError("preprocess requires a manifest path");
  std::vector<ParticipantManifest> manifests = load_manifest(cfg.manifest);
  const fs::path out_root = fs::path(cfg.out_dir) / "preproc";
  fs::create_directories(out_root);

  std::vector<ParticipantManifest> out_manifests;
  json log = json::array();
  for (auto manifest : manifests) {
    const fs::path pdir = out_root / manifest.participant;
    fs::create_directories(pdir);
    json plog = {{"participant", manifest.participant},
                 {"warnings", json::array()}};
    try {
      std::vector<std::string> warnings;
      const double fs_hz = cfg.synth.sample_rate;
      const FilterSpec notch =
          design_notch(fs_hz, cfg.filter.notch_freq, cfg.filter.notch_q);
      const FilterSpec bandpass =
          design_bandpass(fs_hz, cfg.filter.bandpass_low,
                          cfg.filter.bandpass_high, cfg.filter.bandpass_order);

      // rest: filter, AutoReject-style clean, ASR calibration
      Recording rest = load_recording_csv(manifest.rest_recording, fs_hz,
                                          cfg.epoch.max_gap_s, &warnings);
      rest = apply_offline(rest, notch, &warnings);
      rest = apply_offline(rest, bandpass, &warnings);
      const std::vector<RawEpoch> rest_epochs =
          cut_epochs(rest, cfg.reject.rest_epoch_s);
      const RejectThresholds thresholds = estimate_reject_thresholds(
          rest_epochs, cfg.reject.grid_uv, cfg.reject.folds,
          mix_seed(cfg.seed, 1001));
      const std::vector<RawEpoch> clean = clean_rest(rest_epochs, thresholds);
      const AsrModel asr =
          asr_calibrate(concat_epochs(clean, rest), cfg.asr);
      asr.save((pdir / "asr.json").string());

      // tasks: filter, ASR, gate
      ParticipantManifest out_m = manifest;
      std::size_t total_epochs = 0, kept_epochs = 0;
      for (const auto& [task, rec_path] : manifest.recordings) {
        Recording rec =
            load_recording_csv(rec_path, fs_hz, cfg.epoch.max_gap_s, &warnings);
        rec = apply_offline(rec, notch, &warnings);
        rec = apply_offline(rec, bandpass, &warnings);
        rec = asr_process(asr, rec);
        const std::string clean_path = (pdir / (task + ".csv")).string();
        save_recording_csv(rec, clean_path);
        out_m.recordings[task] = clean_path;

        const auto events = load_events_jsonl(manifest.events.at(task));
        const auto epochs = task_epochs(rec, events, manifest.participant,
                                        task, cfg.epoch.length_s);
        const EpochMask mask = gate_epochs(epochs, cfg.gate.limit_uv);
        mask.save_jsonl((pdir / (task + ".mask.jsonl")).string());
        total_epochs += mask.keep.size();
        kept_epochs += mask.kept_count();
      }
      EpochMask pooled;
      pooled.keep.assign(total_epochs, false);
      std::fill(pooled.keep.begin(), pooled.keep.begin() + kept_epochs, true);
      pooled.reason.assign(total_epochs, "");
      out_m.included = total_epochs > 0 &&
                       participant_included(pooled, cfg.gate.exclusion_cutoff);
      plog["included"] = out_m.included;
      plog["kept_fraction"] =
          total_epochs ? static_cast<double>(kept_epochs) / total_epochs : 0.0;
      for (const auto& w : warnings) plog["warnings"].push_back(w);
      out_manifests.push_back(std::move(out_m));
    } catch (const DataError& e) {
      // calibration failure excludes the participant; the run continues
      plog["included"] = false;
      plog["error"] = e.what();
      manifest.included = false;
      out_manifests.push_back(manifest);
    }
    log.push_back(std::move(plog));
  }
  save_manifest(out_manifests, (out_root / "manifest.json").string());
  std::ofstream log_out(out_root / "preprocess_log.json");
  log_out << log.dump(2) << '\n';
}

std::string cmd_features(const RunConfig& cfg) {
  const fs::path preproc_manifest =
      fs::path(cfg.out_dir) / "preproc" / "manifest.json";
  if (!fs::exists(preproc_manifest))
    throw DependencyError("features needs the preprocess stage output: " +
                          preproc_manifest.string());
  const auto manifests = load_manifest(preproc_manifest.string());
  const BandScheme scheme = BandScheme::standard();

  std::vector<BandPowerSample> all;
  for (const auto& m : manifests) {
    if (!m.included) continue;
    for (const auto& [task, rec_path] : m.recordings) {
      std::vector<std::string> warnings;
      const Recording rec = load_recording_csv(
          rec_path, cfg.synth.sample_rate, cfg.epoch.max_gap_s, &warnings);
      const auto events = load_events_jsonl(m.events.at(task));
      const auto epochs =
          task_epochs(rec, events, m.participant, task, cfg.epoch.length_s);
      const EpochMask mask = gate_epochs(epochs, cfg.gate.limit_uv);
      for (std::size_t i = 0; i < epochs.size(); ++i) {
        if (!mask.keep[i]) continue;
        all.push_back(compute_features(epochs[i], rec.sample_rate, scheme,
                                       cfg.spectral));
      }
    }
  }
  if (all.empty()) throw DataError("no epochs survived preprocessing");

  const std::string features_path =
      (fs::path(cfg.out_dir) / "features.csv").string();
  write_features_csv(features_path, all, scheme);
  write_stats_csv(export_stats_table(all, scheme),
                  (fs::path(cfg.out_dir) / "stats.csv").string());
  return features_path;
}

MccvResult cmd_cv(const RunConfig& cfg) {
  const fs::path features_path = fs::path(cfg.out_dir) / "features.csv";
  if (!fs::exists(features_path))
    throw DependencyError("cv needs the features stage output: " +
                          features_path.string());
  const auto features =
      read_features_csv(features_path.string(), BandScheme::standard());

  MccvConfig cv = cfg.cv;
  if (cv.seed == 0) cv.seed = cfg.seed;
  const std::vector<LabeledSample> dataset =
      cv.mode == CvMode::within_task
          ? make_within_task_dataset(features, cv.task)
          : make_cross_task_dataset(features);
  const MccvResult res = run_mccv(dataset, cv);

  const std::string label =
      cv.mode == CvMode::within_task ? "within_" + cv.task : "cross";
  const fs::path dir = fs::path(cfg.out_dir) / "cv" / label;
  fs::create_directories(dir);
  write_mccv_summary_json(res, cv, (dir / "summary.json").string());
  write_mccv_iterations_csv(res, (dir / "iterations.csv").string());
  write_mccv_participants_csv(res, (dir / "participants.csv").string());
  write_report_csv(res.mean_report, (dir / "report.csv").string());
  return res;
}

void cmd_staircase(const RunConfig& cfg) {
  const fs::path dir = fs::path(cfg.out_dir) / "staircase";
  fs::create_directories(dir);

  std::string bank_csv = cfg.staircase.puzzle_csv;
  if (bank_csv.empty()) {
    bank_csv = (dir / "puzzles.csv").string();
    write_synth_puzzle_csv(bank_csv, 40, mix_seed(cfg.seed, 9001));
  }
  const PuzzleBank bank = load_bank(bank_csv);

  json summary = json::array();
  std::uint64_t session_index = 0;
  for (double skill : cfg.staircase.skills) {
    std::vector<double> last_ratings;
    for (int s = 0; s < cfg.staircase.sessions_per_skill; ++s) {
      SimPlayer player{skill, mix_seed(cfg.seed, 7000 + session_index++)};
      const auto traj = run_session(bank, player, cfg.staircase.session);
      char fname[64];
      std::snprintf(fname, sizeof(fname), "skill_%d_session_%02d.csv",
                    static_cast<int>(skill), s);
      write_trajectory_csv(traj, (dir / fname).string());
      last_ratings.push_back(traj.back().rating);
    }
    std::sort(last_ratings.begin(), last_ratings.end());
    const double median =
        last_ratings.size() % 2
            ? last_ratings[last_ratings.size() / 2]
            : 0.5 * (last_ratings[last_ratings.size() / 2 - 1] +
                     last_ratings[last_ratings.size() / 2]);
    summary.push_back({{"skill", skill},
                       {"sessions", cfg.staircase.sessions_per_skill},
                       {"median_final_rating", median}});
  }
  std::ofstream out(dir / "summary.json");
  out << summary.dump(2) << '\n';
}

void cmd_report(const RunConfig& cfg) {
  const fs::path report_dir = fs::path(cfg.out_dir) / "report";
  fs::create_directories(report_dir);
  bool produced = false;

  // band power by task
  const fs::path features_path = fs::path(cfg.out_dir) / "features.csv";
  if (fs::exists(features_path)) {
    const BandScheme scheme = BandScheme::standard();
    const auto features =
        read_features_csv(features_path.string(), scheme);
    std::map<std::string, std::vector<double>> sums;
    std::map<std::string, std::size_t> counts;
    for (const auto& f : features) {
      auto& s = sums[f.label.task];
      if (s.empty()) s.assign(scheme.bands.size(), 0.0);
      for (std::size_t b = 0; b < scheme.bands.size(); ++b)
        s[b] += f.log_power[b];
      counts[f.label.task] += 1;
    }
    std::vector<std::string> tasks;
    for (const auto& [task, s] : sums) tasks.push_back(task);
    std::vector<BarGroup> groups;
    for (std::size_t b = 0; b < scheme.bands.size(); ++b) {
      BarGroup g;
      g.name = scheme.bands[b].name;
      for (const auto& task : tasks)
        g.values.push_back(sums[task][b] / counts[task]);
      groups.push_back(std::move(g));
    }
    write_grouped_bar_svg((report_dir / "band_power_by_task.svg").string(),
                          "Mean log band power by task", tasks, groups);
    produced = true;
  }

  // per-class metric tables, one per cv run
  const fs::path cv_dir = fs::path(cfg.out_dir) / "cv";
  if (fs::exists(cv_dir)) {
    std::vector<fs::path> runs;
    for (const auto& entry : fs::directory_iterator(cv_dir))
      if (entry.is_directory()) runs.push_back(entry.path());
    std::sort(runs.begin(), runs.end());
    for (const auto& run : runs) {
      const fs::path report_csv = run / "report.csv";
      if (!fs::exists(report_csv)) continue;
      const std::string name = run.filename().string();
      fs::copy_file(report_csv, report_dir / (name + "_metrics.csv"),
                    fs::copy_options::overwrite_existing);
      const CsvTable t = read_csv(report_csv.string());
      std::ofstream txt(report_dir / (name + "_metrics.txt"));
      txt << name << " classification metrics\n";
      txt << "class        precision  recall     f1         support\n";
      for (const auto& row : t.rows) {
        char line[128];
        std::snprintf(line, sizeof(line), "%-12s %-10.3f %-10.3f %-10.3f %s\n",
                      row[0].c_str(), std::stod(row[1]), std::stod(row[2]),
                      std::stod(row[3]), row[4].c_str());
        txt << line;
      }
      produced = true;
    }
  }

  // staircase trajectories
  const fs::path stair_dir = fs::path(cfg.out_dir) / "staircase";
  if (fs::exists(stair_dir)) {
    std::vector<fs::path> trajs;
    for (const auto& entry : fs::directory_iterator(stair_dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("skill_", 0) == 0 && entry.path().extension() == ".csv")
        trajs.push_back(entry.path());
    }
    std::sort(trajs.begin(), trajs.end());
    std::vector<LineSeries> series;
    for (const auto& path : trajs) {
      const CsvTable t = read_csv(path.string());
      const int cb = t.column("bin_low");
      LineSeries s;
      s.name = path.stem().string();
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        s.x.push_back(static_cast<double>(i + 1));
        s.y.push_back(std::stod(t.rows[i][cb]));
      }
      series.push_back(std::move(s));
    }
    if (!series.empty()) {
      write_line_svg((report_dir / "staircase_trajectories.svg").string(),
                     "Staircase difficulty trajectories", series);
      produced = true;
    }
  }

  if (!produced)
    throw DependencyError(
        "report needs at least one upstream stage output under " + cfg.out_dir);
}

}  // namespace eegwl
