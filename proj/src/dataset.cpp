#include "eegwl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "eegwl/csv.hpp"
#include "eegwl/errors.hpp"

namespace eegwl {

namespace {
const std::set<std::string> kTasks = {"chess", "nback", "rotation", "stroop"};
}

std::vector<ParticipantManifest> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DependencyError("missing manifest: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("manifest parse error: " + std::string(e.what()));
  }
  std::vector<ParticipantManifest> out;
  for (const auto& entry : j.at("participants")) {
    ParticipantManifest m;
    m.participant = entry.at("participant").get<std::string>();
    m.phase = entry.at("phase").get<std::string>();
    if (m.phase != "I" && m.phase != "II")
      throw ValidationError("participant " + m.participant + ": phase must be I or II");
    m.rest_recording = entry.at("rest_recording").get<std::string>();
    for (const auto& [task, files] : entry.at("tasks").items()) {
      if (!kTasks.count(task))
        throw ValidationError("participant " + m.participant + ": unknown task " + task);
      m.recordings[task] = files.at("recording").get<std::string>();
      m.events[task] = files.at("events").get<std::string>();
    }
    if (entry.contains("included")) m.included = entry.at("included").get<bool>();
    if (m.phase == "II") {
      for (const auto& task : kTasks)
        if (!m.recordings.count(task))
          throw ValidationError("phase II participant " + m.participant +
                                " missing task " + task);
    }
    out.push_back(std::move(m));
  }
  return out;
}

void save_manifest(const std::vector<ParticipantManifest>& manifests,
                   const std::string& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : manifests) {
    nlohmann::json tasks = nlohmann::json::object();
    for (const auto& [task, rec] : m.recordings)
      tasks[task] = {{"recording", rec}, {"events", m.events.at(task)}};
    arr.push_back({{"participant", m.participant},
                   {"phase", m.phase},
                   {"rest_recording", m.rest_recording},
                   {"tasks", tasks},
                   {"included", m.included}});
  }
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << nlohmann::json{{"participants", arr}}.dump(2) << '\n';
}

std::vector<TrialEvent> load_events_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DependencyError("missing events file: " + path);
  std::vector<TrialEvent> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    TrialEvent e;
    e.participant = j.at("participant").get<std::string>();
    e.task = j.at("task").get<std::string>();
    e.block = j.at("block").get<std::string>();
    e.trial = j.at("trial").get<int>();
    e.onset_s = j.at("onset_s").get<double>();
    e.offset_s = j.at("offset_s").get<double>();
    e.raw_difficulty = j.at("raw_difficulty").get<double>();
    e.correct = j.at("correct").get<bool>();
    if (j.contains("rt_s") && !j.at("rt_s").is_null())
      e.rt_s = j.at("rt_s").get<double>();
    if (!(e.onset_s < e.offset_s))
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": onset must precede offset");
    out.push_back(std::move(e));
  }
  return out;
}

void save_events_jsonl(const std::vector<TrialEvent>& events,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  for (const auto& e : events) {
    nlohmann::json j = {{"participant", e.participant},
                        {"task", e.task},
                        {"block", e.block},
                        {"trial", e.trial},
                        {"onset_s", e.onset_s},
                        {"offset_s", e.offset_s},
                        {"raw_difficulty", e.raw_difficulty},
                        {"correct", e.correct}};
    j["rt_s"] = e.rt_s ? nlohmann::json(*e.rt_s) : nlohmann::json(nullptr);
    out << j.dump() << '\n';
  }
}

std::map<double, int> chess_quartile_labels(const std::vector<double>& ratings) {
  std::set<double> unique(ratings.begin(), ratings.end());
  if (unique.size() < 4)
    throw DataError("need at least 4 distinct puzzle ratings for quartiles");
  const std::vector<double> sorted(unique.begin(), unique.end());
  const std::size_t n = sorted.size();
  // nearest-rank boundaries over the distinct ratings; ties share the lower
  // quartile
  std::array<double, 3> bounds{};
  for (int q = 1; q <= 3; ++q) {
    const auto rank = static_cast<std::size_t>(
        std::ceil(0.25 * q * static_cast<double>(n)));
    bounds[q - 1] = sorted[rank - 1];
  }
  std::map<double, int> out;
  for (double r : sorted) {
    int level = 0;
    for (double b : bounds)
      if (r > b) ++level;
    out[r] = level;
  }
  return out;
}

bool is_high_workload(const std::string& task, int level) {
  return task == "stroop" ? level >= 1 : level >= 2;
}

WorkloadLabel assign_workload(const TrialEvent& event,
                              const std::map<double, int>* chess_quartiles) {
  int level = -1;
  const double d = event.raw_difficulty;
  if (event.task == "nback") {
    if (d == 0 || d == 1 || d == 2 || d == 3) level = static_cast<int>(d);
  } else if (event.task == "rotation") {
    if (d == 0) level = 0;
    else if (d == 50) level = 1;
    else if (d == 100) level = 2;
    else if (d == 150) level = 3;
  } else if (event.task == "stroop") {
    if (d == 0 || d == 1) level = static_cast<int>(d);
  } else if (event.task == "chess") {
    if (!chess_quartiles)
      throw DataError("chess trial needs the participant's quartile map");
    const auto it = chess_quartiles->find(d);
    if (it != chess_quartiles->end()) level = it->second;
  } else {
    throw DataError("unknown task: " + event.task);
  }
  if (level < 0)
    throw DataError("unknown raw difficulty " + std::to_string(d) + " for task " +
                    event.task);
  return {level, is_high_workload(event.task, level)};
}

std::vector<BehavioralRow> behavioral_table(
    const std::vector<TrialEvent>& events,
    const std::map<std::string, std::map<double, int>>& chess_quartiles_by_participant) {
  std::vector<BehavioralRow> out;
  for (const auto& e : events) {
    const std::map<double, int>* qmap = nullptr;
    if (e.task == "chess") {
      const auto it = chess_quartiles_by_participant.find(e.participant);
      if (it == chess_quartiles_by_participant.end())
        throw DataError("no chess quartile map for " + e.participant);
      qmap = &it->second;
    }
    BehavioralRow row;
    row.participant = e.participant;
    row.task = e.task;
    row.block = e.block;
    row.trial = e.trial;
    row.level = assign_workload(e, qmap).level;
    row.timeout = !e.rt_s.has_value();
    row.correct = e.correct;
    if (row.timeout && e.task == "chess") row.correct = false;
    if (e.rt_s) {
      if (*e.rt_s <= 0) throw DataError("non-positive reaction time");
      row.rt_s = e.rt_s;
      row.log_rt = std::log(*e.rt_s);
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<StatsRow> export_stats_table(const std::vector<BandPowerSample>& samples,
                                         const BandScheme& scheme) {
  if (samples.empty()) throw ValidationError("no samples to export");
  struct Cell {
    double sum = 0;
    std::size_t n = 0;
  };
  // (participant, task, block, workload) x band -> mean
  std::map<std::tuple<std::string, std::string, std::string, int>,
           std::vector<Cell>> cells;
  for (const auto& s : samples) {
    auto& c = cells[{s.label.participant, s.label.task, s.label.block,
                     s.label.workload}];
    if (c.empty()) c.resize(scheme.bands.size());
    for (std::size_t b = 0; b < scheme.bands.size(); ++b) {
      c[b].sum += s.log_power.at(b);
      c[b].n += 1;
    }
  }

  std::vector<StatsRow> rows;
  for (const auto& [key, c] : cells) {
    for (std::size_t b = 0; b < scheme.bands.size(); ++b) {
      StatsRow r;
      std::tie(r.participant, r.task, r.block, r.workload) = key;
      r.band = scheme.bands[b].name;
      r.mean_log_power = c[b].sum / c[b].n;
      rows.push_back(std::move(r));
    }
  }

  // z within (participant, task, band), population SD
  std::map<std::tuple<std::string, std::string, std::string>,
           std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < rows.size(); ++i)
    groups[{rows[i].participant, rows[i].task, rows[i].band}].push_back(i);
  for (const auto& [key, idx] : groups) {
    double mean = 0;
    for (std::size_t i : idx) mean += rows[i].mean_log_power;
    mean /= idx.size();
    double var = 0;
    for (std::size_t i : idx) {
      const double d = rows[i].mean_log_power - mean;
      var += d * d;
    }
    var /= idx.size();
    const double sd = std::sqrt(var);
    for (std::size_t i : idx) {
      if (sd > 0) {
        rows[i].z = (rows[i].mean_log_power - mean) / sd;
      } else {
        rows[i].z = 0;
        rows[i].degenerate = true;
      }
    }
  }
  return rows;
}

void write_stats_csv(const std::vector<StatsRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << "participant,task,block,workload,band,mean_log_power,z,degenerate\n";
  for (const auto& r : rows)
    out << r.participant << ',' << r.task << ',' << r.block << ',' << r.workload
        << ',' << r.band << ',' << format_double(r.mean_log_power) << ','
        << format_double(r.z) << ',' << (r.degenerate ? 1 : 0) << '\n';
}

std::vector<StatsRow> read_stats_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int cp = t.column("participant"), ct = t.column("task"),
            cb = t.column("block"), cw = t.column("workload"),
            cband = t.column("band"), cm = t.column("mean_log_power"),
            cz = t.column("z"), cd = t.column("degenerate");
  if (cp < 0 || ct < 0 || cb < 0 || cw < 0 || cband < 0 || cm < 0 || cz < 0 ||
      cd < 0)
    throw ValidationError(path + ": missing stats columns");
  std::vector<StatsRow> rows;
  for (const auto& row : t.rows) {
    StatsRow r;
    r.participant = row[cp];
    r.task = row[ct];
    r.block = row[cb];
    r.workload = std::stoi(row[cw]);
    r.band = row[cband];
    r.mean_log_power = std::stod(row[cm]);
    r.z = std::stod(row[cz]);
    r.degenerate = row[cd] == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<LabeledInterval> events_to_intervals(
    const std::vector<TrialEvent>& events,
    const std::map<double, int>* chess_quartiles) {
  std::vector<TrialEvent> sorted = events;
  std::sort(sorted.begin(), sorted.end(),
            [](const TrialEvent& a, const TrialEvent& b) {
              return a.onset_s < b.onset_s;
            });
  std::vector<LabeledInterval> out;
  const double eps = 1e-9;
  for (const auto& e : sorted) {
    const int level = assign_workload(e, chess_quartiles).level;
    if (!out.empty() && out.back().block == e.block &&
        out.back().workload == level && e.onset_s <= out.back().end_s + eps) {
      out.back().end_s = std::max(out.back().end_s, e.offset_s);
    } else {
      out.push_back({e.onset_s, e.offset_s, e.block, level});
    }
  }
  return out;
}

}  // namespace eegwl
