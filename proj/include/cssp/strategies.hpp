#pragma once

// Adversary strategies behind one decision contract. A strategy sees the
// round's ObservationView and the ladder the engine built for the current
// seed, and returns which ladder entry (if any) to broadcast. Strategies are
// stateless; a pending commitment from the previous round travels in the view.

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "cssp/core.hpp"

namespace cssp {

/// A credential the adversary promised to broadcast this round (the hypothetical
/// next-round choice made when it won the previous round).
struct Commitment {
  Credential credential;
  std::size_t ladder_index = 0;

  bool operator==(const Commitment&) const = default;
};

struct ObservationView {
  Seed seed;
  /// Present iff beta > 0.
  std::optional<Score> honest_b_score;
  double alpha = 0.0;
  double beta = 0.0;
  double lambda = 1.0;
  std::optional<Commitment> pending_commitment;
  /// Minimum candidate-set size (truncation depth) for the blind case.
  std::size_t ladder_depth = 16;
};

struct Broadcast {
  std::size_t ladder_index = 0;
  Score score;
  Credential credential;

  bool operator==(const Broadcast&) const = default;
};

struct StrategyDecision {
  std::optional<Broadcast> broadcast;
  /// Credential to broadcast in the next round if this broadcast wins.
  std::optional<Commitment> commit_next;
  /// Number of candidate winning credentials the decision compared; zero when
  /// the decision did not look at the ladder (silent, or a committed broadcast).
  std::size_t candidates = 0;
  bool committed = false;

  bool operator==(const StrategyDecision&) const = default;
};

/// How much of the current seed's ladder a strategy needs before deciding.
struct LadderDemand {
  std::size_t min_entries = 0;
  /// Extend until the last entry is at least this score.
  std::optional<double> cover_score;
  /// Extend until the last entry is at least entries[0] + window.
  std::optional<double> cover_window;
};

/// Maps a hypothetical seed to the adversary's ladder for it (the
/// pre-computation of credentials in case a given credential wins).
class LadderOracle {
 public:
  virtual ~LadderOracle() = default;
  virtual ScoreLadder ladder(Seed seed, std::size_t depth) const = 0;
};

/// Evaluates the adversary's own VRF on demand at nominal stake alpha.
class PrfLadderOracle final : public LadderOracle {
 public:
  PrfLadderOracle(const AccountKey& key, StakeFraction stake) : key_(key), stake_(stake) {}
  ScoreLadder ladder(Seed seed, std::size_t depth) const override;

 private:
  const AccountKey& key_;
  StakeFraction stake_;
};

class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual std::string_view name() const = 0;
  virtual LadderDemand demand(const ObservationView& view) const = 0;
  virtual StrategyDecision decide(const ObservationView& view, const ScoreLadder& ladder,
                                  const LadderOracle& oracle) const = 0;
};

/// "honest" | "silent" | "one-lookahead". Throws std::invalid_argument otherwise.
std::unique_ptr<Strategy> make_strategy(std::string_view id);

// Decision functions ------------------------------------------------------

/// Broadcasts the ladder minimum.
StrategyDecision honest_decide(const ObservationView& view, const ScoreLadder& ladder);

/// Never broadcasts.
StrategyDecision silent_decide(const ObservationView& view);

/// Pr[win this round with s_i] + Pr[win this round and the next with s_next],
/// against honest Exp((1-beta)(1-alpha)) now and Exp(1-alpha) next round.
/// Scores are at nominal stake.
double lookahead_objective(double s_i, double s_next, double alpha, double beta);

/// One-round lookahead. With a pending commitment it broadcasts that credential.
/// Otherwise the candidates are the entries beating B's score (beta > 0) or the
/// first ladder_depth entries (beta == 0); it broadcasts the candidate with the
/// best objective and, when it compared two or more, commits to the best
/// next-round credential of the chosen seed.
StrategyDecision one_lookahead_decide(const ObservationView& view, const ScoreLadder& ladder,
                                      const LadderOracle& oracle);

}  // namespace cssp
