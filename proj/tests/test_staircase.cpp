#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "eegwl/errors.hpp"
#include "eegwl/staircase.hpp"
#include "eegwl/synth.hpp"

using namespace eegwl;

namespace {

PuzzleBank dense_bank(int per_bin = 40) {
  std::vector<Puzzle> puzzles;
  int serial = 0;
  for (double low = 600; low < 2250; low += 50)
    for (int k = 0; k < per_bin; ++k)
      puzzles.push_back({"pz" + std::to_string(serial++), low + 10.0 + k % 40});
  return make_bank(puzzles);
}

}  // namespace

TEST_CASE("puzzle bank binning and loading") {
  const PuzzleBank bank = dense_bank();
  CHECK(bank.n_bins() == 33);
  CHECK(bank.bin_low(0) == 600);
  CHECK(bank.bin_low(32) == 2200);
  CHECK(bank.bin_index_for(600) == 0);
  CHECK(bank.bin_index_for(649.9) == 0);
  CHECK(bank.bin_index_for(650) == 1);
  CHECK_THROWS_AS(bank.bin_index_for(2250), ValidationError);
  CHECK_THROWS_AS(bank.bin_index_for(599), ValidationError);

  SUBCASE("out-of-range and non-checkmate puzzles are dropped on load") {
    const std::string path = "test_puzzles.csv";
    std::ofstream out(path);
    out << "PuzzleId,Rating,Themes\n";
    // fill every bin with checkmate puzzles
    int serial = 0;
    for (double low = 600; low < 2250; low += 50)
      out << "ok" << serial++ << ',' << low + 25 << ",mateIn1 short\n";
    out << "hi1,2400,mateIn2\n";          // out of range
    out << "nm1,900,fork crushing\n";     // not checkmate
    out.close();
    const PuzzleBank loaded = load_bank(path);
    std::size_t total = 0;
    for (const auto& bin : loaded.bins) total += bin.size();
    CHECK(total == 33);
    for (const auto& bin : loaded.bins)
      for (const auto& p : bin) {
        CHECK(p.id.rfind("ok", 0) == 0);
      }
    std::remove(path.c_str());
  }

  SUBCASE("an empty bin is a load error naming the bin") {
    std::vector<Puzzle> sparse = {{"a", 620}};
    CHECK_THROWS_AS(make_bank(sparse), DataError);
  }
}

TEST_CASE("staircase state machine") {
  const PuzzleBank bank = dense_bank();
  const StaircaseConfig cfg;
  StaircaseState st = initial_state(bank, cfg);
  CHECK(bank.bin_low(st.bin) == 800);  // fresh session starts at [800, 850)
  CHECK(st.round == 1);
  CHECK(st.puzzle == 1);
  CHECK(st.used.empty());

  SUBCASE("correct moves up one bin, incorrect moves down") {
    auto up = step(bank, st, Outcome::correct, cfg);
    CHECK(up.bin == st.bin + 1);
    auto down = step(bank, st, Outcome::incorrect, cfg);
    CHECK(down.bin == st.bin - 1);
  }

  SUBCASE("easiest bin clamps on incorrect; hardest clamps on correct") {
    StaircaseState floor_state = st;
    floor_state.bin = 0;
    CHECK(step(bank, floor_state, Outcome::incorrect, cfg).bin == 0);
    StaircaseState top = st;
    top.bin = bank.n_bins() - 1;
    CHECK(step(bank, top, Outcome::correct, cfg).bin == bank.n_bins() - 1);
  }

  SUBCASE("puzzle 30 advances the round and resets the bin") {
    StaircaseState late = st;
    late.puzzle = 30;
    late.bin = 20;
    const auto next = step(bank, late, Outcome::correct, cfg);
    CHECK(next.round == 2);
    CHECK(next.puzzle == 1);
    CHECK(bank.bin_low(next.bin) == 800);
  }

  SUBCASE("finished session refuses further steps") {
    StaircaseState done = st;
    done.round = 7;
    CHECK(done.finished(cfg));
    CHECK_THROWS_AS(step(bank, done, Outcome::correct, cfg), ValidationError);
  }
}

TEST_CASE("puzzle selection") {
  const StaircaseConfig cfg;

  SUBCASE("deterministic draw for a fixed seed") {
    const PuzzleBank bank = dense_bank(3);
    StaircaseState a = initial_state(bank, cfg);
    StaircaseState b = initial_state(bank, cfg);
    Rng r1(5), r2(5);
    CHECK(select_puzzle(bank, a, r1).id == select_puzzle(bank, b, r2).id);
  }

  SUBCASE("exhausted bin falls back to the nearest neighbor") {
    const PuzzleBank bank = dense_bank(1);  // one puzzle per bin
    StaircaseState st = initial_state(bank, cfg);
    Rng rng(1);
    bool fallback = false;
    const Puzzle first = select_puzzle(bank, st, rng, &fallback);
    CHECK_FALSE(fallback);
    CHECK(bank.bin_index_for(first.rating) == st.bin);
    const Puzzle second = select_puzzle(bank, st, rng, &fallback);
    CHECK(fallback);
    CHECK(second.id != first.id);
    const auto dist = static_cast<int>(bank.bin_index_for(second.rating)) -
                      static_cast<int>(st.bin);
    CHECK(std::abs(dist) == 1);
  }

  SUBCASE("no id repeats within a 180-step session") {
    const PuzzleBank bank = dense_bank(10);
    const auto traj = run_session(bank, {1400, 99});
    CHECK(traj.size() == 180);
    std::set<std::string> ids;
    for (const auto& t : traj) ids.insert(t.puzzle_id);
    CHECK(ids.size() == traj.size());
  }
}

TEST_CASE("expected score formula") {
  CHECK(expected_score(1400, 1400) == doctest::Approx(0.5));
  CHECK(expected_score(1800, 1400) == doctest::Approx(0.909).epsilon(0.001));
  CHECK(expected_score(1000, 1400) == doctest::Approx(0.091).epsilon(0.01));
}

TEST_CASE("session structure and walk invariants") {
  const PuzzleBank bank = dense_bank();
  const StaircaseConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto traj = run_session(bank, {1400, seed}, cfg);
    REQUIRE(traj.size() == 180);
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const auto& t = traj[i];
      if (t.step == 1) {
        CHECK(t.bin_low == 800);  // every round restarts at [800, 850)
      } else if (!traj[i - 1].fallback) {
        // +-1 bin walk (clamped) relative to the previous step
        const double prev = traj[i - 1].bin_low;
        const double expected =
            traj[i - 1].correct ? std::min(prev + 50.0, 2200.0)
                                : std::max(prev - 50.0, 600.0);
        CHECK(t.bin_low == expected);
      }
    }
  }
}

TEST_CASE("deterministic extreme players") {
  // a bank where every draw is from the current bin keeps the walk pure
  const PuzzleBank bank = dense_bank(200);
  const StaircaseConfig cfg;

  SUBCASE("always-correct play reaches and holds the top bin") {
    // skill far above the range: expected score ~ 1 for every puzzle
    const auto traj = run_session(bank, {30000, 3});
    int top_count = 0;
    for (const auto& t : traj)
      if (t.round == cfg.rounds && t.bin_low == 2200) ++top_count;
    CHECK(top_count > 0);
    CHECK(traj.back().bin_low == 2200);
  }

  SUBCASE("always-incorrect play sits on the floor bin") {
    const auto traj = run_session(bank, {-30000, 4});
    CHECK(traj.back().bin_low == 600);
    for (const auto& t : traj) CHECK(t.bin_low <= 800);
  }
}

TEST_CASE("trajectory csv format") {
  const PuzzleBank bank = dense_bank();
  const auto traj = run_session(bank, {1400, 11});
  const std::string path = "test_traj.csv";
  write_trajectory_csv(traj, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "round,step,bin_low,puzzle_id,rating,outcome");
  std::size_t lines = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  CHECK(lines == traj.size());
  std::remove(path.c_str());
}
