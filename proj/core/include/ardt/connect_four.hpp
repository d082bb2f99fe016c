#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace ardt {

struct ConnectFourConfig {
  int rows = 4;
  int cols = 5;
  int k = 4;  // in-a-row length to win

  bool operator==(const ConnectFourConfig&) const = default;
};

enum class C4Cell : std::uint8_t { kEmpty, kP, kA };
enum class C4Status { kOngoing, kPWin, kAWin, kDraw };

// Bitboard layout: one column occupies rows+1 bits (the extra sentinel row
// keeps vertical shifts from wrapping). (rows+1)*cols must fit in 64 bits.
class ConnectFourState {
 public:
  explicit ConnectFourState(ConnectFourConfig cfg = {});

  const ConnectFourConfig& config() const { return cfg_; }
  C4Cell cell(int row, int col) const;  // row 0 is the bottom
  bool protagonist_to_move() const { return (moves_ & 1) == 0; }
  C4Status status() const { return status_; }
  bool done() const { return status_ != C4Status::kOngoing; }
  int move_count() const { return moves_; }

  bool column_full(int col) const;
  std::vector<int> legal_moves() const;

  // Drops the mover's piece in `col`. Throws on a full column, an
  // out-of-range column, or a finished game. Returns the terminal reward
  // (+1 protagonist win, -1 adversary win, 0 otherwise; nonzero only when
  // the move ends the game).
  double apply(int col);

  // Flattened row-major cells (bottom row first): 0 empty, +1 P, -1 A.
  std::vector<double> encode() const;
  static ConnectFourState decode(const ConnectFourConfig& cfg,
                                 const std::vector<double>& cells);

  // Transposition key, canonical under column reflection.
  std::uint64_t canonical_key() const;

  std::string to_string() const;

  std::uint64_t mover_mask() const { return mover_; }
  std::uint64_t occupied_mask() const { return occupied_; }

 private:
  friend class C4Solver;

  bool wins_with(std::uint64_t stones) const;
  std::uint64_t mirrored(std::uint64_t m) const;

  ConnectFourConfig cfg_;
  std::uint64_t mover_ = 0;     // stones of the player to move
  std::uint64_t occupied_ = 0;  // stones of both players
  int moves_ = 0;
  C4Status status_ = C4Status::kOngoing;
};

struct C4ApplyResult {
  ConnectFourState state;
  C4Status status = C4Status::kOngoing;
  double reward = 0.0;
};

C4ApplyResult c4_apply(const ConnectFourState& state, int col);

// Exact negamax with alpha-beta pruning and a transposition table keyed on
// canonical boards. Values are from the mover's perspective in {-1, 0, 1}.
class C4Solver {
 public:
  explicit C4Solver(ConnectFourConfig cfg,
                    std::uint64_t node_budget = kDefaultNodeBudget);

  struct Result {
    int value = 0;                  // mover's perspective
    std::vector<int> optimal_moves;  // all value-achieving columns
  };

  // Throws std::invalid_argument on a finished game and std::runtime_error
  // when the node budget is exhausted (suggesting a smaller board).
  Result solve(const ConnectFourState& state);

  std::uint64_t nodes_visited() const { return nodes_; }

  static constexpr std::uint64_t kDefaultNodeBudget = 200'000'000;

 private:
  int negamax(ConnectFourState& s, int alpha, int beta);

  ConnectFourConfig cfg_;
  std::uint64_t budget_;
  std::uint64_t nodes_ = 0;
  // Packed entry: bits 0-1 value+1, bits 2-3 flag (1 exact, 2 lower, 3 upper).
  std::unordered_map<std::uint64_t, std::uint8_t> table_;
};

}  // namespace ardt
