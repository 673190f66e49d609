#include "eegwl/staircase.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "eegwl/csv.hpp"
#include "eegwl/errors.hpp"

namespace eegwl {

std::size_t PuzzleBank::bin_index_for(double rating) const {
  if (rating < range_low || rating >= range_high)
    throw ValidationError("rating " + std::to_string(rating) + " outside [" +
                          std::to_string(range_low) + ", " +
                          std::to_string(range_high) + ")");
  auto i = static_cast<std::size_t>((rating - range_low) / bin_width);
  if (i >= n_bins()) i = n_bins() - 1;
  return i;
}

PuzzleBank make_bank(const std::vector<Puzzle>& checkmate_puzzles) {
  PuzzleBank bank;
  const auto n_bins = static_cast<std::size_t>(
      (bank.range_high - bank.range_low) / bank.bin_width);
  bank.bins.resize(n_bins);
  for (const auto& p : checkmate_puzzles) {
    if (p.rating < bank.range_low || p.rating >= bank.range_high) continue;
    bank.bins[bank.bin_index_for(p.rating)].push_back(p);
  }
  for (std::size_t i = 0; i < bank.n_bins(); ++i)
    if (bank.bins[i].empty())
      throw DataError("puzzle bank bin [" + std::to_string(bank.bin_low(i)) +
                      ", " + std::to_string(bank.bin_low(i) + bank.bin_width) +
                      ") is empty");
  return bank;
}

PuzzleBank load_bank(const std::string& csv_path) {
  const CsvTable t = read_csv(csv_path);
  const int cid = t.column_ci("PuzzleId"), cr = t.column_ci("Rating"),
            cth = t.column_ci("Themes");
  if (cid < 0 || cr < 0 || cth < 0)
    throw ValidationError(csv_path + ": need PuzzleId, Rating, Themes columns");
  std::vector<Puzzle> puzzles;
  for (const auto& row : t.rows) {
    const std::string& themes = row[cth];
    if (themes.find("mate") == std::string::npos) continue;
    puzzles.push_back({row[cid], std::stod(row[cr])});
  }
  return make_bank(puzzles);
}

StaircaseState initial_state(const PuzzleBank& bank, const StaircaseConfig& cfg) {
  StaircaseState st;
  st.bin = bank.bin_index_for(cfg.start_rating);
  return st;
}

StaircaseState step(const PuzzleBank& bank, StaircaseState state,
                    Outcome outcome, const StaircaseConfig& cfg) {
  if (state.finished(cfg)) throw ValidationError("staircase already finished");
  if (outcome == Outcome::correct) {
    if (state.bin + 1 < bank.n_bins()) ++state.bin;
  } else {
    if (state.bin > 0) --state.bin;
  }
  if (state.puzzle < cfg.puzzles_per_round) {
    ++state.puzzle;
  } else {
    ++state.round;
    state.puzzle = 1;
    state.bin = bank.bin_index_for(cfg.start_rating);
  }
  return state;
}

Puzzle select_puzzle(const PuzzleBank& bank, StaircaseState& state, Rng& rng,
                     bool* fallback) {
  auto available = [&](std::size_t bin) {
    std::vector<const Puzzle*> out;
    for (const auto& p : bank.bins[bin])
      if (!state.used.count(p.id)) out.push_back(&p);
    return out;
  };

  std::size_t chosen_bin = state.bin;
  std::vector<const Puzzle*> pool = available(chosen_bin);
  bool fell_back = false;
  if (pool.empty()) {
    // nearest non-exhausted bin; ties toward easier
    for (std::size_t d = 1; d < bank.n_bins() && pool.empty(); ++d) {
      if (state.bin >= d) {
        pool = available(state.bin - d);
        if (!pool.empty()) chosen_bin = state.bin - d;
      }
      if (pool.empty() && state.bin + d < bank.n_bins()) {
        pool = available(state.bin + d);
        if (!pool.empty()) chosen_bin = state.bin + d;
      }
    }
    if (pool.empty()) throw DataError("puzzle bank exhausted");
    fell_back = true;
  }
  if (fallback) *fallback = fell_back;

  const Puzzle& pick = *pool[rng.uniform_index(pool.size())];
  state.used.insert(pick.id);
  return pick;
}

double expected_score(double skill, double rating) {
  return 1.0 / (1.0 + std::pow(10.0, (rating - skill) / 400.0));
}

std::vector<TrajectoryStep> run_session(const PuzzleBank& bank,
                                        const SimPlayer& player,
                                        const StaircaseConfig& cfg) {
  Rng rng(player.seed);
  StaircaseState state = initial_state(bank, cfg);
  std::vector<TrajectoryStep> traj;
  traj.reserve(static_cast<std::size_t>(cfg.rounds) * cfg.puzzles_per_round);
  while (!state.finished(cfg)) {
    TrajectoryStep ts;
    ts.round = state.round;
    ts.step = state.puzzle;
    ts.bin_low = bank.bin_low(state.bin);
    const Puzzle p = select_puzzle(bank, state, rng, &ts.fallback);
    ts.puzzle_id = p.id;
    ts.rating = p.rating;
    ts.correct = rng.bernoulli(expected_score(player.skill, p.rating));
    traj.push_back(ts);
    state = step(bank, state,
                 ts.correct ? Outcome::correct : Outcome::incorrect, cfg);
  }
  return traj;
}

void write_trajectory_csv(const std::vector<TrajectoryStep>& traj,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << "round,step,bin_low,puzzle_id,rating,outcome\n";
  for (const auto& t : traj)
    out << t.round << ',' << t.step << ',' << format_double(t.bin_low) << ','
        << t.puzzle_id << ',' << format_double(t.rating) << ','
        << (t.correct ? "correct" : "incorrect") << '\n';
}

}  // namespace eegwl
