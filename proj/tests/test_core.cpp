#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "cssp/core.hpp"
#include "test_util.hpp"

using namespace cssp;

namespace {

const AccountKey& key_a() {
  static const AccountKey k = AccountKey::derive(7, "a");
  return k;
}
const AccountKey& key_b() {
  static const AccountKey k = AccountKey::derive(7, "b");
  return k;
}

Seed random_seed(std::mt19937_64& rng) { return Seed{rng()}; }

}  // namespace

TEST(ScoreOf, Examples) {
  EXPECT_NEAR(score_of(UnitValue(1.0 - 1e-12), StakeFraction(0.3)).value(), 0.0, 1e-10);
  EXPECT_NEAR(score_of(UnitValue(std::exp(-0.3)), StakeFraction(0.3)).value(), 1.0, 1e-14);
  EXPECT_NEAR(score_of(UnitValue(0.5), StakeFraction(0.5)).value(), 1.386294361119891, 1e-14);
}

TEST(ScoreOf, DomainErrors) {
  EXPECT_THROW(UnitValue(0.0), DomainError);
  EXPECT_THROW(UnitValue(1.0), DomainError);
  EXPECT_THROW(UnitValue(-0.2), DomainError);
  EXPECT_THROW(StakeFraction(0.0), DomainError);
  EXPECT_THROW(StakeFraction(-1.0), DomainError);
  EXPECT_THROW(StakeFraction(std::nan("")), DomainError);
  EXPECT_THROW(Score(-1.0), DomainError);
  EXPECT_THROW(Score(std::numeric_limits<double>::infinity()), DomainError);
}

TEST(ScoreOf, MonotoneAndInverseStake) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(1e-9, 1.0 - 1e-9), st(0.01, 2.0);
  for (int i = 0; i < 10000; ++i) {
    double a = u(rng), b = u(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    const StakeFraction s(st(rng));
    EXPECT_GT(score_of(UnitValue(a), s).value(), score_of(UnitValue(b), s).value());
    EXPECT_NEAR(score_of(UnitValue(a), StakeFraction(s.value() / 2)).value(),
                2.0 * score_of(UnitValue(a), s).value(), 1e-9 * score_of(UnitValue(a), s).value() + 1e-15);
  }
}

TEST(ExpCdf, Examples) {
  EXPECT_EQ(exp_cdf(0.7, 0.0), 0.0);
  EXPECT_NEAR(exp_cdf(1.0, std::log(2.0)), 0.5, 1e-15);
  EXPECT_NEAR(exp_cdf(0.3, 1.0), 0.2591817793182821, 1e-15);
  EXPECT_THROW(exp_cdf(0.0, 1.0), DomainError);
  EXPECT_THROW(exp_cdf(1.0, -1.0), DomainError);
}

TEST(ErlangCdf, Examples) {
  for (double z : {0.1, 0.7, 2.0, 9.0}) EXPECT_NEAR(erlang_cdf(1, 0.4, z), exp_cdf(0.4, z), 1e-15);
  for (int l : {1, 3, 40}) EXPECT_EQ(erlang_cdf(l, 2.0, 0.0), 0.0);
  EXPECT_NEAR(erlang_cdf(2, 1.0, 1.0), 1.0 - 2.0 / std::exp(1.0), 1e-15);
  EXPECT_THROW(erlang_cdf(0, 1.0, 1.0), DomainError);
  EXPECT_THROW(erlang_cdf(2, -1.0, 1.0), DomainError);
  EXPECT_THROW(erlang_cdf(2, 1.0, -1.0), DomainError);
}

TEST(ErlangCdf, MatchesRegularisedIncompleteGamma) {
  for (int l = 1; l <= 80; ++l)
    for (double x : {1e-4, 0.05, 0.5, 1.0, 3.0, 10.0, 30.0, 60.0, 120.0}) {
      const double want = boost::math::gamma_p(static_cast<double>(l), x);
      EXPECT_NEAR(erlang_cdf(l, 1.0, x), want, 1e-13 + 1e-12 * want) << "l=" << l << " x=" << x;
      EXPECT_NEAR(erlang_cdf(l, 2.5, x / 2.5), want, 1e-13 + 1e-12 * want);
    }
}

TEST(ErlangCdf, LadderMatchesPointwise) {
  std::vector<double> out(40);
  for (double x : {1e-3, 0.3, 1.0, 4.0, 15.0}) {
    erlang_cdf_ladder(x, out);
    for (std::size_t l = 0; l < out.size(); ++l)
      EXPECT_NEAR(out[l], boost::math::gamma_p(static_cast<double>(l + 1), x), 1e-13) << x << " " << l;
  }
}

TEST(ErlangCdf, MatchesSummedExponentialsWithinDkw) {
  const std::size_t n = 100000;
  std::mt19937_64 rng(11);
  std::exponential_distribution<double> e(1.5);
  std::vector<double> sums(n);
  for (auto& s : sums) s = e(rng) + e(rng) + e(rng);
  EXPECT_LT(testutil::ks(sums, [](double z) { return erlang_cdf(3, 1.5, z); }), testutil::dkw_99(n));
}

TEST(ProbFirstSmaller, Examples) {
  EXPECT_NEAR(prob_first_smaller(0.3, 0.7), 0.3, 1e-15);
  EXPECT_NEAR(prob_first_smaller(0.4, 0.4), 0.5, 1e-15);
  EXPECT_NEAR(prob_first_smaller(0.2, 0.6), 0.25, 1e-15);
  EXPECT_THROW(prob_first_smaller(0.0, 1.0), DomainError);
  EXPECT_THROW(prob_first_smaller(1.0, -1.0), DomainError);
}

TEST(ProbFirstSmaller, LadderBeatsHonestAtPredictedFrequency) {
  std::mt19937_64 rng(3);
  const std::size_t n = 100000;
  std::size_t wins = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Seed s = random_seed(rng);
    const double adv = score_ladder(key_a(), s, StakeFraction(0.3), 1)[0].score.value();
    const double hon = score_of(prf_uniform(key_b(), s).value(), StakeFraction(0.7)).value();
    wins += adv < hon;
  }
  const double p = prob_first_smaller(0.3, 0.7);
  EXPECT_NEAR(static_cast<double>(wins) / n, p, 3 * testutil::binom_se(p, n));
}

TEST(UnitFromBits, OpenInterval) {
  EXPECT_GT(unit_from_bits(0), 0.0);
  EXPECT_LT(unit_from_bits(~std::uint64_t{0}), 1.0);
  EXPECT_LT(unit_from_bits(0), unit_from_bits(std::uint64_t{1} << 12));
}

TEST(Prf, Deterministic) {
  const Seed s{0x1234abcd};
  EXPECT_EQ(prf_uniform(key_a(), s), prf_uniform(key_a(), s));
  EXPECT_EQ(prf_uniform(AccountKey::derive(7, "a"), s), prf_uniform(key_a(), s));
}

TEST(Prf, DistinctKeysAndStreamsDiffer) {
  const Seed s{99};
  EXPECT_NE(prf_uniform(key_a(), s).bits, prf_uniform(key_b(), s).bits);
  EXPECT_NE(prf_uniform(key_a(), s, 0).bits, prf_uniform(key_a(), s, 1).bits);
  EXPECT_FALSE(AccountKey::derive(1, "x") == AccountKey::derive(2, "x"));
  EXPECT_FALSE(AccountKey::derive(1, "x") == AccountKey::derive(1, "y"));
}

TEST(Prf, UniformOverRandomSeeds) {
  std::mt19937_64 rng(5);
  std::vector<double> u(100000);
  for (auto& x : u) x = prf_uniform(key_a(), random_seed(rng)).value().value();
  EXPECT_LT(testutil::ks(u, [](double z) { return z; }), 0.01);
}

TEST(Prf, ScoresAreExponential) {
  std::mt19937_64 rng(6);
  std::vector<double> v(100000);
  for (auto& x : v) x = score_of(prf_uniform(key_b(), random_seed(rng)).value(), StakeFraction(0.3)).value();
  EXPECT_LT(testutil::ks(v, [](double z) { return testutil::exp_cdf(0.3, z); }), testutil::ks_crit_1pct(v.size()));
}

TEST(Ladder, FirstEntryIsExponential) {
  std::mt19937_64 rng(8);
  std::vector<double> v(100000);
  for (auto& x : v) x = score_ladder(key_a(), random_seed(rng), StakeFraction(0.3), 1)[0].score.value();
  EXPECT_LT(testutil::ks(v, [](double z) { return testutil::exp_cdf(0.3, z); }), testutil::ks_crit_1pct(v.size()));
}

TEST(Ladder, StrictlyIncreasingAndPrefixStable) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 200; ++t) {
    const Seed s = random_seed(rng);
    const ScoreLadder l = score_ladder(key_a(), s, StakeFraction(0.3), 40);
    ASSERT_EQ(l.size(), 40u);
    for (std::size_t i = 1; i < l.size(); ++i) EXPECT_LT(l[i - 1].score, l[i].score);
    const ScoreLadder shorter = score_ladder(key_a(), s, StakeFraction(0.3), 7);
    for (std::size_t i = 0; i < shorter.size(); ++i) {
      EXPECT_EQ(shorter[i].score, l[i].score);
      EXPECT_EQ(shorter[i].credential, l[i].credential);
    }
  }
}

TEST(Ladder, MeanSpacing) {
  std::mt19937_64 rng(10);
  const std::size_t n = 100000;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const ScoreLadder l = score_ladder(key_a(), random_seed(rng), StakeFraction(0.3), 2);
    sum += l[1].score.value() - l[0].score.value();
  }
  EXPECT_NEAR(sum / n, 1.0 / 0.3, 0.02 / 0.3);
}

TEST(Ladder, EntryIsErlang) {
  std::mt19937_64 rng(12);
  std::vector<double> v(50000);
  for (auto& x : v) x = score_ladder(key_a(), random_seed(rng), StakeFraction(0.5), 4)[3].score.value();
  EXPECT_LT(testutil::ks(v, [](double z) { return boost::math::gamma_p(4.0, 0.5 * z); }),
            testutil::ks_crit_1pct(v.size()));
}

TEST(Ladder, ExtendUntilCoversBound) {
  ScoreLadder l(Seed{4}, StakeFraction(0.3));
  l.extend_until(key_a(), 25.0, 1 << 16);
  ASSERT_FALSE(l.empty());
  EXPECT_GE(l.entries().back().score.value(), 25.0);
  if (l.size() > 1) {
    EXPECT_LT(l[l.size() - 2].score.value(), 25.0);
  }
}

TEST(Ladder, Errors) {
  EXPECT_THROW(score_ladder(key_a(), Seed{1}, StakeFraction(0.3), 0), DomainError);
  std::vector<LadderEntry> bad{{Score(1.0), Credential{1}}, {Score(0.5), Credential{2}}};
  EXPECT_THROW(ScoreLadder::from_entries(Seed{1}, StakeFraction(0.3), bad), DomainError);
}

TEST(MinOfRates, IsExponentialOfTotal) {
  std::mt19937_64 rng(13);
  const AccountKey c = AccountKey::derive(7, "c");
  std::vector<double> v(100000);
  for (auto& x : v) {
    const Seed s = random_seed(rng);
    const double a = score_ladder(key_a(), s, StakeFraction(0.2), 1)[0].score.value();
    const double b = score_of(prf_uniform(key_b(), s).value(), StakeFraction(0.5)).value();
    const double cc = score_of(prf_uniform(c, s).value(), StakeFraction(0.3)).value();
    x = std::min({a, b, cc});
  }
  EXPECT_LT(testutil::ks(v, [](double z) { return testutil::exp_cdf(1.0, z); }), testutil::ks_crit_1pct(v.size()));
}

TEST(DominanceWindow, Values) {
  EXPECT_NEAR(lookahead_dominance_window(0.3, 0.0), std::log(2.0) / 0.7, 1e-15);
  EXPECT_TRUE(std::isinf(lookahead_dominance_window(0.3, 1.0)));
}
