#include "ardt/connect_four.hpp"

#include <algorithm>
#include <stdexcept>

namespace ardt {
namespace {

constexpr std::uint8_t kFlagExact = 1;
constexpr std::uint8_t kFlagLower = 2;
constexpr std::uint8_t kFlagUpper = 3;

}  // namespace

ConnectFourState::ConnectFourState(ConnectFourConfig cfg) : cfg_(cfg) {
  if (cfg_.rows < 1 || cfg_.cols < 1 || cfg_.k < 2) {
    throw std::invalid_argument("invalid board configuration");
  }
  if ((cfg_.rows + 1) * cfg_.cols > 64) {
    throw std::invalid_argument("board too large for 64-bit representation");
  }
}

C4Cell ConnectFourState::cell(int row, int col) const {
  const std::uint64_t bit = 1ULL << (col * (cfg_.rows + 1) + row);
  if (!(occupied_ & bit)) return C4Cell::kEmpty;
  // `mover_` holds the stones of the side to move; protagonist moves on
  // even plies.
  const bool is_mover_stone = (mover_ & bit) != 0;
  const bool mover_is_p = protagonist_to_move();
  return (is_mover_stone == mover_is_p) ? C4Cell::kP : C4Cell::kA;
}

bool ConnectFourState::column_full(int col) const {
  const std::uint64_t top = 1ULL << (col * (cfg_.rows + 1) + cfg_.rows - 1);
  return (occupied_ & top) != 0;
}

std::vector<int> ConnectFourState::legal_moves() const {
  std::vector<int> moves;
  if (done()) return moves;
  for (int c = 0; c < cfg_.cols; ++c) {
    if (!column_full(c)) moves.push_back(c);
  }
  return moves;
}

bool ConnectFourState::wins_with(std::uint64_t stones) const {
  const int h = cfg_.rows + 1;
  const int strides[4] = {1, h, h + 1, h - 1};  // vertical, horiz, diagonals
  for (const int s : strides) {
    std::uint64_t m = stones;
    int got = 1;
    while (got < cfg_.k && m) {
      const int step = std::min(got, cfg_.k - got);
      m &= m >> (s * step);
      got += step;
    }
    if (m) return true;
  }
  return false;
}

double ConnectFourState::apply(int col) {
  if (done()) throw std::invalid_argument("game already finished");
  if (col < 0 || col >= cfg_.cols) {
    throw std::invalid_argument("column " + std::to_string(col) +
                                " out of range");
  }
  if (column_full(col)) {
    throw std::invalid_argument("column " + std::to_string(col) + " is full");
  }
  const std::uint64_t col_base = 1ULL << (col * (cfg_.rows + 1));
  // Lowest empty cell of the column: add one stone's worth of carry.
  const std::uint64_t stone = (occupied_ + col_base) & ~occupied_;
  const bool mover_is_p = protagonist_to_move();
  const std::uint64_t placed = mover_ | stone;
  occupied_ |= stone;
  mover_ = occupied_ ^ placed;  // switch perspective to the next mover
  ++moves_;
  if (wins_with(placed)) {
    status_ = mover_is_p ? C4Status::kPWin : C4Status::kAWin;
    return mover_is_p ? 1.0 : -1.0;
  }
  if (moves_ == cfg_.rows * cfg_.cols) {
    status_ = C4Status::kDraw;
  }
  return 0.0;
}

std::vector<double> ConnectFourState::encode() const {
  std::vector<double> cells;
  cells.reserve(static_cast<std::size_t>(cfg_.rows * cfg_.cols));
  for (int r = 0; r < cfg_.rows; ++r) {
    for (int c = 0; c < cfg_.cols; ++c) {
      switch (cell(r, c)) {
        case C4Cell::kEmpty: cells.push_back(0.0); break;
        case C4Cell::kP: cells.push_back(1.0); break;
        case C4Cell::kA: cells.push_back(-1.0); break;
      }
    }
  }
  return cells;
}

ConnectFourState ConnectFourState::decode(const ConnectFourConfig& cfg,
                                          const std::vector<double>& cells) {
  if (cells.size() != static_cast<std::size_t>(cfg.rows * cfg.cols)) {
    throw std::invalid_argument("cell array size mismatch");
  }
  // Rebuild by replaying column fills bottom-up; verifies gravity and the
  // first-mover piece-count rule.
  int p_count = 0, a_count = 0;
  ConnectFourState s(cfg);
  for (int c = 0; c < cfg.cols; ++c) {
    bool seen_empty = false;
    for (int r = 0; r < cfg.rows; ++r) {
      const double v = cells[static_cast<std::size_t>(r * cfg.cols + c)];
      if (v == 0.0) {
        seen_empty = true;
      } else if (seen_empty) {
        throw std::invalid_argument("floating piece at column " +
                                    std::to_string(c));
      } else if (v == 1.0) {
        ++p_count;
      } else if (v == -1.0) {
        ++a_count;
      } else {
        throw std::invalid_argument("cell values must be -1, 0 or 1");
      }
    }
  }
  if (p_count - a_count != 0 && p_count - a_count != 1) {
    throw std::invalid_argument("piece counts violate the first-mover rule");
  }
  const bool p_to_move = p_count == a_count;
  for (int c = 0; c < cfg.cols; ++c) {
    for (int r = 0; r < cfg.rows; ++r) {
      const double v = cells[static_cast<std::size_t>(r * cfg.cols + c)];
      if (v == 0.0) continue;
      const std::uint64_t bit = 1ULL << (c * (cfg.rows + 1) + r);
      s.occupied_ |= bit;
      const bool is_p = v == 1.0;
      // mover_ holds the to-move side's stones.
      if (is_p == p_to_move) s.mover_ |= bit;
    }
  }
  s.moves_ = p_count + a_count;
  const std::uint64_t opponent = s.occupied_ ^ s.mover_;
  if (s.wins_with(opponent)) {
    s.status_ = p_to_move ? C4Status::kAWin : C4Status::kPWin;
  } else if (s.wins_with(s.mover_)) {
    throw std::invalid_argument("board has a win for the side to move");
  } else if (s.moves_ == cfg.rows * cfg.cols) {
    s.status_ = C4Status::kDraw;
  }
  return s;
}

std::uint64_t ConnectFourState::mirrored(std::uint64_t m) const {
  std::uint64_t out = 0;
  const int h = cfg_.rows + 1;
  const std::uint64_t col_mask = (1ULL << h) - 1;
  for (int c = 0; c < cfg_.cols; ++c) {
    const std::uint64_t col = (m >> (c * h)) & col_mask;
    out |= col << ((cfg_.cols - 1 - c) * h);
  }
  return out;
}

std::uint64_t ConnectFourState::canonical_key() const {
  // Classic key: mover stones plus one guard bit per column; uniquely
  // decodable and cheap to mirror.
  std::uint64_t bottom = 0;
  const int h = cfg_.rows + 1;
  for (int c = 0; c < cfg_.cols; ++c) bottom |= 1ULL << (c * h);
  const std::uint64_t key = mover_ + occupied_ + bottom;
  const std::uint64_t mkey = mirrored(mover_) + mirrored(occupied_) + bottom;
  return std::min(key, mkey);
}

std::string ConnectFourState::to_string() const {
  std::string out;
  for (int r = cfg_.rows - 1; r >= 0; --r) {
    for (int c = 0; c < cfg_.cols; ++c) {
      switch (cell(r, c)) {
        case C4Cell::kEmpty: out += '.'; break;
        case C4Cell::kP: out += 'X'; break;
        case C4Cell::kA: out += 'O'; break;
      }
    }
    out += '\n';
  }
  return out;
}

C4ApplyResult c4_apply(const ConnectFourState& state, int col) {
  C4ApplyResult result{state, C4Status::kOngoing, 0.0};
  result.reward = result.state.apply(col);
  result.status = result.state.status();
  return result;
}

C4Solver::C4Solver(ConnectFourConfig cfg, std::uint64_t node_budget)
    : cfg_(cfg), budget_(node_budget) {}

int C4Solver::negamax(ConnectFourState& s, int alpha, int beta) {
  if (++nodes_ > budget_) {
    throw std::runtime_error(
        "Connect Four solver node budget exceeded; use a smaller board");
  }
  const std::vector<int> moves = s.legal_moves();
  if (moves.empty()) return 0;  // draw

  // Immediate win check before touching the table.
  for (const int c : moves) {
    ConnectFourState child = s;
    const double r = child.apply(c);
    if (r != 0.0) return 1;
  }

  const std::uint64_t key = s.canonical_key();
  const int alpha0 = alpha;
  if (const auto it = table_.find(key); it != table_.end()) {
    const int v = static_cast<int>(it->second & 3) - 1;
    const std::uint8_t flag = it->second >> 2;
    if (flag == kFlagExact) return v;
    if (flag == kFlagLower) alpha = std::max(alpha, v);
    if (flag == kFlagUpper) beta = std::min(beta, v);
    if (alpha >= beta) return v;
  }

  int best = -2;
  // Center-out ordering helps pruning.
  std::vector<int> ordered = moves;
  const double center = (cfg_.cols - 1) / 2.0;
  std::stable_sort(ordered.begin(), ordered.end(), [&](int a, int b) {
    return std::abs(a - center) < std::abs(b - center);
  });
  for (const int c : ordered) {
    ConnectFourState child = s;
    child.apply(c);
    const int v = child.done() ? 0 : -negamax(child, -beta, -alpha);
    best = std::max(best, v);
    alpha = std::max(alpha, v);
    if (alpha >= beta) break;
  }

  std::uint8_t flag = kFlagExact;
  if (best <= alpha0) flag = kFlagUpper;
  else if (best >= beta) flag = kFlagLower;
  table_[key] = static_cast<std::uint8_t>((flag << 2) | (best + 1));
  return best;
}

C4Solver::Result C4Solver::solve(const ConnectFourState& state) {
  if (state.config() != cfg_) {
    throw std::invalid_argument("state does not match solver configuration");
  }
  if (state.done()) throw std::invalid_argument("game already finished");

  Result result;
  int best = -2;
  std::vector<std::pair<int, int>> values;  // (col, value)
  for (const int c : state.legal_moves()) {
    ConnectFourState child = state;
    const double r = child.apply(c);
    int v;
    if (r != 0.0) {
      v = 1;  // the mover just won
    } else if (child.done()) {
      v = 0;  // draw
    } else {
      v = -negamax(child, -1, 1);
    }
    values.emplace_back(c, v);
    best = std::max(best, v);
  }
  result.value = best;
  for (const auto& [c, v] : values) {
    if (v == best) result.optimal_moves.push_back(c);
  }
  return result;
}

}  // namespace ardt
