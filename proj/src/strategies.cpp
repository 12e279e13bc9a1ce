#include "cssp/strategies.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cssp {
namespace {

class HonestStrategy final : public Strategy {
 public:
  std::string_view name() const override { return "honest"; }
  LadderDemand demand(const ObservationView&) const override { return {1, {}, {}}; }
  StrategyDecision decide(const ObservationView& view, const ScoreLadder& ladder,
                          const LadderOracle&) const override {
    return honest_decide(view, ladder);
  }
};

class SilentStrategy final : public Strategy {
 public:
  std::string_view name() const override { return "silent"; }
  LadderDemand demand(const ObservationView&) const override { return {}; }
  StrategyDecision decide(const ObservationView& view, const ScoreLadder&,
                          const LadderOracle&) const override {
    return silent_decide(view);
  }
};

class OneLookaheadStrategy final : public Strategy {
 public:
  std::string_view name() const override { return "one-lookahead"; }

  LadderDemand demand(const ObservationView& view) const override {
    if (view.pending_commitment) return {view.pending_commitment->ladder_index + 1, {}, {}};
    if (view.beta > 0.0) {
      if (!view.honest_b_score) throw ContractViolation("one-lookahead: beta > 0 requires B's score");
      return {1, view.honest_b_score->value(), {}};
    }
    return {view.ladder_depth, {},
            lookahead_dominance_window(view.alpha, view.beta) / view.lambda};
  }

  StrategyDecision decide(const ObservationView& view, const ScoreLadder& ladder,
                          const LadderOracle& oracle) const override {
    return one_lookahead_decide(view, ladder, oracle);
  }
};

}  // namespace

ScoreLadder PrfLadderOracle::ladder(Seed seed, std::size_t depth) const {
  return score_ladder(key_, seed, stake_, depth);
}

std::unique_ptr<Strategy> make_strategy(std::string_view id) {
  if (id == "honest") return std::make_unique<HonestStrategy>();
  if (id == "silent") return std::make_unique<SilentStrategy>();
  if (id == "one-lookahead") return std::make_unique<OneLookaheadStrategy>();
  throw std::invalid_argument("unknown strategy '" + std::string(id) + "'");
}

StrategyDecision honest_decide(const ObservationView&, const ScoreLadder& ladder) {
  if (ladder.empty()) throw ContractViolation("honest: empty ladder");
  StrategyDecision d;
  d.broadcast = Broadcast{0, ladder[0].score, ladder[0].credential};
  d.candidates = 1;
  return d;
}

StrategyDecision silent_decide(const ObservationView&) { return {}; }

double lookahead_objective(double s_i, double s_next, double alpha, double beta) {
  const double win_now = std::exp(-(1.0 - beta) * (1.0 - alpha) * s_i);
  const double win_next = std::exp(-(1.0 - alpha) * s_next);
  return win_now + win_now * win_next;
}

StrategyDecision one_lookahead_decide(const ObservationView& view, const ScoreLadder& ladder,
                                      const LadderOracle& oracle) {
  StrategyDecision d;
  if (view.pending_commitment) {
    const Commitment& c = *view.pending_commitment;
    if (c.ladder_index >= ladder.size() || !(ladder[c.ladder_index].credential == c.credential))
      throw ContractViolation("one-lookahead: committed credential is not on the current ladder");
    d.broadcast = Broadcast{c.ladder_index, ladder[c.ladder_index].score, c.credential};
    d.committed = true;
    return d;
  }

  std::size_t winners = 0;
  if (view.beta > 0.0) {
    if (!view.honest_b_score) throw ContractViolation("one-lookahead: beta > 0 requires B's score");
    const double b = view.honest_b_score->value();
    if (ladder.empty() || ladder.entries().back().score.value() < b)
      throw ContractViolation("one-lookahead: ladder does not reach B's score");
    while (winners < ladder.size() && ladder[winners].score.value() < b) ++winners;
  } else {
    winners = ladder.size();
  }
  d.candidates = winners;
  if (winners == 0) return d;

  // Objective uses stake-normalised scores; ladder scores are at alpha * lambda.
  const double window = lookahead_dominance_window(view.alpha, view.beta);
  const double s0 = ladder[0].score.value() * view.lambda;
  std::size_t best = 0;
  double best_value = -1.0;
  LadderEntry best_next{};
  for (std::size_t i = 0; i < winners; ++i) {
    const double s_i = ladder[i].score.value() * view.lambda;
    if (i > 0 && s_i - s0 >= window) break;
    const ScoreLadder next = oracle.ladder(ladder[i].credential, 1);
    if (next.empty()) throw ContractViolation("one-lookahead: oracle returned an empty ladder");
    const double value = lookahead_objective(s_i, next[0].score.value(), view.alpha, view.beta);
    if (value > best_value) {
      best_value = value;
      best = i;
      best_next = next[0];
    }
  }
  d.broadcast = Broadcast{best, ladder[best].score, ladder[best].credential};
  if (winners >= 2) d.commit_next = Commitment{best_next.credential, 0};
  return d;
}

}  // namespace cssp
