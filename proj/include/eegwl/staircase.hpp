#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "eegwl/rng.hpp"

namespace eegwl {

struct Puzzle {
  std::string id;
  double rating = 0;  // Glicko2 scale
};

// Checkmate puzzles binned into width-50 rating intervals over [600, 2250].
struct PuzzleBank {
  double range_low = 600;
  double range_high = 2250;
  double bin_width = 50;
  std::vector<std::vector<Puzzle>> bins;

  std::size_t n_bins() const { return bins.size(); }
  double bin_low(std::size_t i) const { return range_low + i * bin_width; }
  std::size_t bin_index_for(double rating) const;
};

// lichess puzzle CSV (id/FEN/moves/rating/themes; only id, rating, themes
// consumed). Non-checkmate and out-of-range puzzles are dropped; an empty
// bin is a load error naming the bin.
PuzzleBank load_bank(const std::string& csv_path);
PuzzleBank make_bank(const std::vector<Puzzle>& checkmate_puzzles);

struct StaircaseConfig {
  int rounds = 6;
  int puzzles_per_round = 30;
  double start_rating = 800;  // first puzzle of every round from [800, 850)
};

enum class Outcome { correct, incorrect };

struct StaircaseState {
  std::size_t bin = 0;
  int round = 1;         // 1-based
  int puzzle = 1;        // 1-based within round
  std::set<std::string> used;

  bool finished(const StaircaseConfig& cfg = {}) const {
    return round > cfg.rounds;
  }
};

StaircaseState initial_state(const PuzzleBank& bank,
                             const StaircaseConfig& cfg = {});

// +1 bin on correct, -1 on incorrect, clamped; round boundaries advance the
// counters and reset the bin to the start bin.
StaircaseState step(const PuzzleBank& bank, StaircaseState state,
                    Outcome outcome, const StaircaseConfig& cfg = {});

// Uniform draw among unused puzzles of the current bin; if exhausted, the
// nearest non-exhausted bin (ties toward easier). Marks the id used. Sets
// *fallback when a neighbor bin had to be used.
Puzzle select_puzzle(const PuzzleBank& bank, StaircaseState& state, Rng& rng,
                     bool* fallback = nullptr);

struct SimPlayer {
  double skill = 1400;  // Glicko2 scale, [400, 2600]
  std::uint64_t seed = 0;
};

// Elo-family expected score E = 1 / (1 + 10^((rating - skill) / 400)).
double expected_score(double skill, double rating);

struct TrajectoryStep {
  int round = 0;   // 1-based
  int step = 0;    // 1-based within round
  double bin_low = 0;
  std::string puzzle_id;
  double rating = 0;
  bool correct = false;
  bool fallback = false;
};

// 6x30 steps of select -> simulate -> step; deterministic per player seed.
std::vector<TrajectoryStep> run_session(const PuzzleBank& bank,
                                        const SimPlayer& player,
                                        const StaircaseConfig& cfg = {});

void write_trajectory_csv(const std::vector<TrajectoryStep>& traj,
                          const std::string& path);

}  // namespace eegwl
