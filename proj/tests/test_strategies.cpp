#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "cssp/strategies.hpp"
#include "test_util.hpp"

using namespace cssp;

namespace {

ScoreLadder make_ladder(std::vector<double> scores, std::uint64_t first_cred = 100, double rate = 0.3) {
  std::vector<LadderEntry> e;
  for (std::size_t i = 0; i < scores.size(); ++i) e.push_back({Score(scores[i]), Credential{first_cred + i}});
  return ScoreLadder::from_entries(Seed{1}, StakeFraction(rate), e);
}

// Hypothetical ladders keyed by seed bits; a miss is a contract violation.
class ScriptedOracle final : public LadderOracle {
 public:
  void set(std::uint64_t seed, double first_score, std::uint64_t cred) {
    next_[seed] = {first_score, cred};
  }
  ScoreLadder ladder(Seed seed, std::size_t) const override {
    auto it = next_.find(seed.bits);
    if (it == next_.end()) throw ContractViolation("scripted oracle: no ladder for seed");
    ++calls;
    return ScoreLadder::from_entries(seed, StakeFraction(0.3), {{Score(it->second.first), Credential{it->second.second}}});
  }
  mutable int calls = 0;

 private:
  std::map<std::uint64_t, std::pair<double, std::uint64_t>> next_;
};

ObservationView view_b1(double b_score) {
  ObservationView v;
  v.seed = Seed{1};
  v.alpha = 0.3;
  v.beta = 1.0;
  v.honest_b_score = Score(b_score);
  return v;
}

}  // namespace

TEST(Honest, BroadcastsMinimum) {
  const auto l = make_ladder({0.4, 0.9, 1.3});
  const StrategyDecision d = honest_decide(ObservationView{}, l);
  ASSERT_TRUE(d.broadcast);
  EXPECT_EQ(d.broadcast->ladder_index, 0u);
  EXPECT_EQ(d.broadcast->score.value(), 0.4);
  EXPECT_FALSE(d.commit_next);
  EXPECT_THROW(honest_decide(ObservationView{}, ScoreLadder(Seed{1}, StakeFraction(0.3))), ContractViolation);
}

TEST(Silent, NeverBroadcasts) {
  for (double b : {0.1, 5.0}) {
    const StrategyDecision d = silent_decide(view_b1(b));
    EXPECT_FALSE(d.broadcast);
    EXPECT_FALSE(d.commit_next);
  }
}

TEST(Objective, Examples) {
  for (double s_next : {0.0, 0.5, 3.0})
    EXPECT_NEAR(lookahead_objective(2.0, s_next, 0.3, 1.0), 1.0 + std::exp(-0.7 * s_next), 1e-15);
  EXPECT_LT(lookahead_objective(800.0, 0.5, 0.3, 0.0), 1e-200);
  EXPECT_NEAR(lookahead_objective(1.0, 0.5, 0.3, 0.0), 0.846523052902565, 1e-14);
}

TEST(Objective, MatchesTwoRoundWinFrequency) {
  // Pr[s_i < X_r] + Pr[s_i < X_r and s_next < X_{r+1}] with X ~ Exp(0.7).
  std::mt19937_64 rng(21);
  std::exponential_distribution<double> x(0.7);
  const std::size_t n = 1000000;
  std::size_t wins = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool now = 1.0 < x(rng);
    const bool next = 0.5 < x(rng);
    wins += now + (now && next);
  }
  // Var of (now + now*next) is bounded by 1 per round.
  EXPECT_NEAR(static_cast<double>(wins) / n, lookahead_objective(1.0, 0.5, 0.3, 0.0), 3.0 / std::sqrt(n));
}

TEST(OneLookahead, LoneWinnerBroadcastsWithoutCommitment) {
  ScriptedOracle o;
  o.set(100, 0.8, 900);
  const auto d = one_lookahead_decide(view_b1(1.0), make_ladder({0.5, 1.2}), o);
  ASSERT_TRUE(d.broadcast);
  EXPECT_EQ(d.broadcast->ladder_index, 0u);
  EXPECT_EQ(d.candidates, 1u);
  EXPECT_FALSE(d.commit_next);
}

TEST(OneLookahead, NoWinnerNoBroadcast) {
  ScriptedOracle o;
  const auto d = one_lookahead_decide(view_b1(0.2), make_ladder({0.5, 1.2}), o);
  EXPECT_FALSE(d.broadcast);
  EXPECT_EQ(d.candidates, 0u);
  EXPECT_EQ(o.calls, 0);
}

TEST(OneLookahead, PicksBestNextRoundAndCommits) {
  ScriptedOracle o;
  o.set(100, 2.0, 900);
  o.set(101, 0.1, 901);  // best: smallest next-round score
  o.set(102, 0.7, 902);
  const auto d = one_lookahead_decide(view_b1(3.0), make_ladder({0.5, 1.2, 2.9, 3.5}), o);
  ASSERT_TRUE(d.broadcast);
  EXPECT_EQ(d.broadcast->ladder_index, 1u);
  EXPECT_EQ(d.broadcast->credential.bits, 101u);
  EXPECT_EQ(d.candidates, 3u);
  ASSERT_TRUE(d.commit_next);
  EXPECT_EQ(d.commit_next->credential.bits, 901u);
  EXPECT_EQ(d.commit_next->ladder_index, 0u);
}

TEST(OneLookahead, TieGoesToLowestIndex) {
  ScriptedOracle o;
  o.set(100, 0.4, 900);
  o.set(101, 0.4, 901);
  const auto d = one_lookahead_decide(view_b1(3.0), make_ladder({0.5, 1.2, 3.5}), o);
  ASSERT_TRUE(d.broadcast);
  EXPECT_EQ(d.broadcast->ladder_index, 0u);
}

TEST(OneLookahead, HonoursPendingCommitment) {
  ScriptedOracle o;
  ObservationView v = view_b1(0.01);  // would otherwise have no winner
  v.pending_commitment = Commitment{Credential{101}, 1};
  const auto d = one_lookahead_decide(v, make_ladder({0.5, 1.2}), o);
  ASSERT_TRUE(d.broadcast);
  EXPECT_TRUE(d.committed);
  EXPECT_EQ(d.broadcast->credential.bits, 101u);
  EXPECT_FALSE(d.commit_next);
  EXPECT_EQ(o.calls, 0);

  v.pending_commitment = Commitment{Credential{555}, 1};
  EXPECT_THROW(one_lookahead_decide(v, make_ladder({0.5, 1.2}), o), ContractViolation);
}

TEST(OneLookahead, ContractViolations) {
  ScriptedOracle o;
  // Ladder stops short of B's score: W is not determined.
  EXPECT_THROW(one_lookahead_decide(view_b1(5.0), make_ladder({0.5, 1.2}), o), ContractViolation);
  // Oracle miss.
  EXPECT_THROW(one_lookahead_decide(view_b1(1.0), make_ladder({0.5, 0.7, 1.2}), o), ContractViolation);
  // beta > 0 without B's score.
  ObservationView v = view_b1(1.0);
  v.honest_b_score.reset();
  EXPECT_THROW(one_lookahead_decide(v, make_ladder({0.5, 1.2}), o), ContractViolation);
}

TEST(OneLookahead, BlindCaseStopsAtDominanceWindow) {
  ScriptedOracle o;
  ObservationView v;
  v.alpha = 0.3;
  v.beta = 0.0;
  const double w = lookahead_dominance_window(0.3, 0.0);  // ~0.99
  o.set(100, 5.0, 900);
  o.set(101, 0.0, 901);
  // Entry 2 lies beyond the window and has no scripted ladder: it must not be queried.
  const auto d = one_lookahead_decide(v, make_ladder({0.2, 0.2 + 0.5 * w, 0.2 + w + 1e-9}), o);
  ASSERT_TRUE(d.broadcast);
  EXPECT_EQ(o.calls, 2);
  EXPECT_EQ(d.candidates, 3u);
  // 1: e^{-0.7*0.2}(1 + e^{-3.5}) vs e^{-0.7*(0.2+0.5w)}(1 + 1): the second wins.
  EXPECT_EQ(d.broadcast->ladder_index, 1u);
}

TEST(OneLookahead, WindowIsExact) {
  // Past the window, even a perfect next round cannot beat entry 0 with the worst one.
  const double w = lookahead_dominance_window(0.3, 0.0);
  const double s0 = 0.4;
  EXPECT_LE(lookahead_objective(s0 + w, 0.0, 0.3, 0.0), lookahead_objective(s0, 1e300, 0.3, 0.0) * (1 + 1e-12));
}

TEST(OneLookahead, DeterministicDecisions) {
  ScriptedOracle o;
  o.set(100, 2.0, 900);
  o.set(101, 0.1, 901);
  const auto l = make_ladder({0.5, 1.2, 3.5});
  EXPECT_EQ(one_lookahead_decide(view_b1(3.0), l, o), one_lookahead_decide(view_b1(3.0), l, o));
}

TEST(Registry, KnownAndUnknown) {
  EXPECT_EQ(make_strategy("honest")->name(), "honest");
  EXPECT_EQ(make_strategy("silent")->name(), "silent");
  EXPECT_EQ(make_strategy("one-lookahead")->name(), "one-lookahead");
  EXPECT_THROW(make_strategy("two-lookahead"), std::invalid_argument);
}

TEST(Registry, DemandsMatchInformation) {
  const auto s = make_strategy("one-lookahead");
  EXPECT_EQ(s->demand(view_b1(2.5)).cover_score.value(), 2.5);
  ObservationView blind;
  blind.alpha = 0.3;
  blind.beta = 0.0;
  blind.ladder_depth = 16;
  const LadderDemand d = s->demand(blind);
  EXPECT_EQ(d.min_entries, 16u);
  EXPECT_FALSE(d.cover_score);
  ASSERT_TRUE(d.cover_window);
}
