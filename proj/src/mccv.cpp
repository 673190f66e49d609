#include "eegwl/mccv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include <json.hpp>

#include "eegwl/csv.hpp"
#include "eegwl/dataset.hpp"
#include "eegwl/errors.hpp"

namespace eegwl {

std::vector<LabeledSample> make_within_task_dataset(
    const std::vector<BandPowerSample>& features, const std::string& task) {
  std::vector<LabeledSample> out;
  std::size_t id = 0;
  for (const auto& f : features) {
    if (f.label.task != task) continue;
    LabeledSample s;
    s.id = id++;
    s.features = f.log_power;
    s.participant = f.label.participant;
    s.block = f.label.task + ":" + f.label.block;
    s.label = is_high_workload(f.label.task, f.label.workload) ? "high" : "low";
    out.push_back(std::move(s));
  }
  if (out.empty()) throw DataError("no samples for task " + task);
  return out;
}

std::vector<LabeledSample> make_cross_task_dataset(
    const std::vector<BandPowerSample>& features) {
  std::set<std::string> all_tasks;
  std::map<std::string, std::set<std::string>> tasks_by_participant;
  for (const auto& f : features) {
    all_tasks.insert(f.label.task);
    tasks_by_participant[f.label.participant].insert(f.label.task);
  }
  std::vector<LabeledSample> out;
  std::size_t id = 0;
  for (const auto& f : features) {
    if (tasks_by_participant[f.label.participant] != all_tasks) continue;
    LabeledSample s;
    s.id = id++;
    s.features = f.log_power;
    s.participant = f.label.participant;
    s.block = f.label.task + ":" + f.label.block;
    s.label = f.label.task;
    out.push_back(std::move(s));
  }
  if (out.empty())
    throw DataError("no participant has samples from every task");
  return out;
}

CvSplit split_blocks(const std::vector<LabeledSample>& participant_samples,
                     double test_fraction, Rng& rng) {
  std::set<std::string> block_set;
  for (const auto& s : participant_samples) block_set.insert(s.block);
  if (block_set.size() < 2)
    throw DataError("participant has fewer than 2 blocks");

  std::vector<std::string> blocks(block_set.begin(), block_set.end());
  rng.shuffle(blocks);
  const auto n_test = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::ceil(test_fraction * static_cast<double>(blocks.size()))));
  const std::set<std::string> test_blocks(blocks.begin(),
                                          blocks.begin() + n_test);

  CvSplit split;
  split.test_blocks.assign(test_blocks.begin(), test_blocks.end());
  for (const auto& s : participant_samples)
    (test_blocks.count(s.block) ? split.test_ids : split.train_ids)
        .push_back(s.id);
  return split;
}

namespace {

// downsample each listed cell to `target`, without replacement
std::vector<std::size_t> downsample_cells(
    const std::map<std::string, std::vector<std::size_t>>& cells,
    const std::map<std::string, std::size_t>& targets, Rng& rng) {
  std::vector<std::size_t> out;
  for (const auto& [key, ids] : cells) {
    const std::size_t target = targets.at(key);
    if (ids.size() <= target) {
      out.insert(out.end(), ids.begin(), ids.end());
    } else {
      for (std::size_t j : rng.sample_without_replacement(ids.size(), target))
        out.push_back(ids[j]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<std::size_t> subsample_within(
    const std::map<std::size_t, const LabeledSample*>& by_id,
    const std::vector<std::size_t>& side_ids, Rng& rng) {
  std::map<std::string, std::vector<std::size_t>> cells;
  for (std::size_t id : side_ids) cells[by_id.at(id)->label].push_back(id);
  std::size_t min_count = SIZE_MAX;
  for (const auto& [label, ids] : cells)
    min_count = std::min(min_count, ids.size());
  std::map<std::string, std::size_t> targets;
  for (const auto& [label, ids] : cells) targets[label] = min_count;
  return downsample_cells(cells, targets, rng);
}

ScalerParams fit_scaler(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ValidationError("cannot fit scaler on no rows");
  const std::size_t d = rows[0].size();
  ScalerParams p;
  p.mean.assign(d, 0.0);
  p.sd.assign(d, 0.0);
  p.degenerate.assign(d, false);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) p.mean[j] += r[j];
  for (double& m : p.mean) m /= static_cast<double>(rows.size());
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = r[j] - p.mean[j];
      p.sd[j] += dv * dv;
    }
  for (std::size_t j = 0; j < d; ++j) {
    p.sd[j] = std::sqrt(p.sd[j] / static_cast<double>(rows.size()));
    if (p.sd[j] <= 0.0) {
      p.sd[j] = 1.0;
      p.degenerate[j] = true;
    }
  }
  return p;
}

std::vector<double> apply_scaler(const ScalerParams& p,
                                 const std::vector<double>& row) {
  if (row.size() != p.mean.size())
    throw ValidationError("scaler dimension mismatch");
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j)
    out[j] = (row[j] - p.mean[j]) / p.sd[j];
  return out;
}

std::vector<std::size_t> balance_global(
    const std::map<std::size_t, const LabeledSample*>& by_id,
    const std::vector<std::size_t>& side_ids, Rng& rng,
    bool per_participant_min) {
  std::map<std::string, std::vector<std::size_t>> cells;
  for (std::size_t id : side_ids) {
    const auto* s = by_id.at(id);
    cells[s->participant + "\x1f" + s->label].push_back(id);
  }
  std::map<std::string, std::size_t> targets;
  if (per_participant_min) {
    std::map<std::string, std::size_t> min_by_participant;
    for (const auto& [key, ids] : cells) {
      const std::string participant = key.substr(0, key.find('\x1f'));
      auto it = min_by_participant.find(participant);
      if (it == min_by_participant.end())
        min_by_participant[participant] = ids.size();
      else
        it->second = std::min(it->second, ids.size());
    }
    for (const auto& [key, ids] : cells)
      targets[key] = min_by_participant.at(key.substr(0, key.find('\x1f')));
  } else {
    std::size_t min_count = SIZE_MAX;
    for (const auto& [key, ids] : cells)
      min_count = std::min(min_count, ids.size());
    for (const auto& [key, ids] : cells) targets[key] = min_count;
  }
  return downsample_cells(cells, targets, rng);
}

IterationResult run_iteration(const std::vector<LabeledSample>& dataset,
                              const MccvConfig& cfg, std::uint64_t seed,
                              IterationTrace* trace) {
  IterationResult result;
  Rng rng(seed);

  std::map<std::size_t, const LabeledSample*> by_id;
  std::map<std::string, std::vector<LabeledSample>> by_participant;
  for (const auto& s : dataset) {
    by_id[s.id] = &s;
    by_participant[s.participant].push_back(s);
  }

  std::vector<std::size_t> train_ids, test_ids;
  std::map<std::string, ScalerParams> scalers;
  // participants iterate in sorted order so draws are reproducible
  for (const auto& [participant, samples] : by_participant) {
    bool placed = false;
    for (int attempt = 0; attempt < cfg.split_retries && !placed; ++attempt) {
      CvSplit split = split_blocks(samples, cfg.test_fraction, rng);
      const std::vector<std::size_t> tr =
          subsample_within(by_id, split.train_ids, rng);
      const std::vector<std::size_t> te =
          subsample_within(by_id, split.test_ids, rng);
      std::set<std::string> tr_labels, te_labels;
      for (std::size_t id : tr) tr_labels.insert(by_id.at(id)->label);
      for (std::size_t id : te) te_labels.insert(by_id.at(id)->label);
      if (tr_labels.size() < 2 || te_labels.size() < 2) continue;

      std::vector<std::vector<double>> train_rows;
      for (std::size_t id : tr) train_rows.push_back(by_id.at(id)->features);
      scalers[participant] = fit_scaler(train_rows);
      train_ids.insert(train_ids.end(), tr.begin(), tr.end());
      test_ids.insert(test_ids.end(), te.begin(), te.end());
      if (trace)
        trace->test_blocks_by_participant[participant] = split.test_blocks;
      placed = true;
    }
    if (!placed && trace) trace->skipped_participants.push_back(participant);
  }

  train_ids = balance_global(by_id, train_ids, rng, cfg.per_participant_min);
  test_ids = balance_global(by_id, test_ids, rng, cfg.per_participant_min);

  std::set<std::string> train_labels;
  for (std::size_t id : train_ids) train_labels.insert(by_id.at(id)->label);
  if (train_ids.empty() || test_ids.empty() || train_labels.size() < 2) {
    result.error = "no usable split for any participant";
    return result;
  }

  if (trace) {
    trace->train_ids_final = train_ids;
    trace->test_ids_final = test_ids;
    trace->scaler_by_participant = scalers;
  }

  Matrix X_train, X_test;
  std::vector<std::string> y_train, y_test, test_participants;
  for (std::size_t id : train_ids) {
    const auto* s = by_id.at(id);
    X_train.push_back(apply_scaler(scalers.at(s->participant), s->features));
    y_train.push_back(s->label);
  }
  for (std::size_t id : test_ids) {
    const auto* s = by_id.at(id);
    X_test.push_back(apply_scaler(scalers.at(s->participant), s->features));
    y_test.push_back(s->label);
    test_participants.push_back(s->participant);
  }

  ForestParams fp = cfg.forest;
  fp.seed = rng.next_u64();
  const ForestModel model = train_forest(X_train, y_train, fp);
  const std::vector<std::string> y_pred = predict(model, X_test);

  result.ok = true;
  result.overall = classification_report(y_test, y_pred);
  std::map<std::string, std::pair<std::vector<std::string>,
                                  std::vector<std::string>>> per_p;
  for (std::size_t i = 0; i < y_test.size(); ++i) {
    per_p[test_participants[i]].first.push_back(y_test[i]);
    per_p[test_participants[i]].second.push_back(y_pred[i]);
  }
  for (const auto& [participant, tp] : per_p)
    result.per_participant[participant] =
        classification_report(tp.first, tp.second);
  return result;
}

double MccvResult::mean_macro_f1() const {
  if (iteration_macro_f1.empty()) return 0.0;
  double sum = 0;
  for (double v : iteration_macro_f1) sum += v;
  return sum / static_cast<double>(iteration_macro_f1.size());
}

MccvResult run_mccv(const std::vector<LabeledSample>& dataset,
                    const MccvConfig& cfg) {
  if (cfg.iterations < 1) throw ValidationError("iterations must be >= 1");
  MccvResult res;
  res.iterations_requested = cfg.iterations;

  std::vector<IterationResult> results(cfg.iterations);
  unsigned n_threads = cfg.threads > 0
                           ? static_cast<unsigned>(cfg.threads)
                           : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads,
                                 static_cast<unsigned>(cfg.iterations));
  std::vector<std::thread> workers;
  for (unsigned t = 0; t < n_threads; ++t) {
    workers.emplace_back([&, t]() {
      for (int i = static_cast<int>(t); i < cfg.iterations;
           i += static_cast<int>(n_threads)) {
        const std::uint64_t seed =
            mix_seed(cfg.seed, static_cast<std::uint64_t>(i));
        try {
          results[i] = run_iteration(dataset, cfg, seed);
        } catch (const std::exception& e) {
          results[i].ok = false;
          results[i].error = e.what();
        }
      }
    });
  }
  for (auto& w : workers) w.join();

  std::map<std::string, ClassMetrics> class_sums;
  std::map<std::string, std::size_t> class_counts;
  std::map<std::string, double> pp_sums;
  std::map<std::string, std::size_t> pp_counts;
  for (const auto& r : results) {
    if (!r.ok) continue;
    ++res.iterations_ok;
    res.iteration_macro_f1.push_back(r.overall.macro_f1);
    for (const auto& m : r.overall.per_class) {
      auto& acc = class_sums[m.cls];
      acc.cls = m.cls;
      acc.precision += m.precision;
      acc.recall += m.recall;
      acc.f1 += m.f1;
      acc.support += m.support;
      class_counts[m.cls] += 1;
    }
    for (const auto& [participant, rep] : r.per_participant) {
      pp_sums[participant] += rep.macro_f1;
      pp_counts[participant] += 1;
    }
  }

  const int failures = cfg.iterations - res.iterations_ok;
  if (static_cast<double>(failures) >
      cfg.failure_budget * static_cast<double>(cfg.iterations)) {
    std::string first_error = "unknown";
    for (const auto& r : results)
      if (!r.ok) {
        first_error = r.error;
        break;
      }
    throw DataError("cross-validation failed " + std::to_string(failures) +
                    " of " + std::to_string(cfg.iterations) +
                    " iterations (budget " +
                    std::to_string(cfg.failure_budget) +
                    "); first error: " + first_error);
  }

  for (auto& [cls, m] : class_sums) {
    const double k = static_cast<double>(class_counts[cls]);
    m.precision /= k;
    m.recall /= k;
    m.f1 /= k;
    res.mean_report.per_class.push_back(m);
    res.mean_report.macro_precision += m.precision;
    res.mean_report.macro_recall += m.recall;
    res.mean_report.macro_f1 += m.f1;
    res.mean_report.total_support += m.support;
  }
  if (!res.mean_report.per_class.empty()) {
    const double k = static_cast<double>(res.mean_report.per_class.size());
    res.mean_report.macro_precision /= k;
    res.mean_report.macro_recall /= k;
    res.mean_report.macro_f1 /= k;
  }
  for (const auto& [participant, sum] : pp_sums)
    res.per_participant_macro_f1[participant] =
        sum / static_cast<double>(pp_counts[participant]);

  const std::size_t n = res.iteration_macro_f1.size();
  if (n >= 2) {
    const double mean = res.mean_macro_f1();
    double var = 0;
    for (double v : res.iteration_macro_f1) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n - 1);
    res.ci_half_width = 1.96 * std::sqrt(var / static_cast<double>(n));
    res.ci_defined = true;
  }
  return res;
}

void write_mccv_summary_json(const MccvResult& res, const MccvConfig& cfg,
                             const std::string& path) {
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& m : res.mean_report.per_class)
    per_class.push_back({{"class", m.cls},
                         {"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1},
                         {"support", m.support}});
  nlohmann::json j = {
      {"mode", cfg.mode == CvMode::within_task ? "within" : "cross"},
      {"task", cfg.task},
      {"iterations_requested", res.iterations_requested},
      {"iterations_ok", res.iterations_ok},
      {"mean_macro_f1", res.mean_macro_f1()},
      {"ci_half_width", res.ci_half_width},
      {"ci_defined", res.ci_defined},
      {"mean_per_class", per_class},
      {"per_participant_macro_f1", res.per_participant_macro_f1},
      {"seed", cfg.seed}};
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << j.dump(2) << '\n';
}

void write_mccv_iterations_csv(const MccvResult& res, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << "iteration,macro_f1\n";
  for (std::size_t i = 0; i < res.iteration_macro_f1.size(); ++i)
    out << i << ',' << format_double(res.iteration_macro_f1[i]) << '\n';
}

void write_mccv_participants_csv(const MccvResult& res,
                                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << "participant,mean_macro_f1\n";
  for (const auto& [participant, f1] : res.per_participant_macro_f1)
    out << participant << ',' << format_double(f1) << '\n';
}

}  // namespace eegwl
