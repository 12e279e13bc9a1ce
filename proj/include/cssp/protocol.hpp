#pragma once

// Round-by-round engine for the refined self-selection game: one strategic
// adversary (stake alpha, split across unboundedly many accounts) against two
// aggregate honest players, B (stake beta(1-alpha), visible to the adversary
// before it decides) and C (stake (1-beta)(1-alpha), never visible). Each
// round's seed is the previous leader's credential.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cssp/core.hpp"
#include "cssp/strategies.hpp"

namespace cssp {

struct SimConfig {
  double alpha = 0.3;
  double beta = 1.0;
  std::size_t rounds = 100000;
  std::size_t burn_in = 1000;
  double delta = 0.0;
  std::string strategy = "honest";
  std::size_t ladder_depth = 16;
  std::uint64_t master_seed = 1;

  /// Throws DomainError describing the first violated constraint.
  void validate() const;
};

enum class Winner { adversary, honest_b, honest_c, none };

/// fresh_seed: the round's seed carries no bias from the adversary's choices
/// (serialised "C"); biased_seed: the seed was chosen by the adversary ("H").
enum class MarkovState { not_applicable, fresh_seed, biased_seed };

struct RoundRecord {
  std::size_t round = 0;
  Seed seed;
  Score winning_score;
  Credential winning_credential;
  Winner winner = Winner::none;
  std::optional<Score> adversary_broadcast;
  /// Absent for a player with zero stake (B when beta == 0, C when beta == 1).
  std::optional<Score> honest_b_score;
  std::optional<Score> honest_c_score;
  double online_stake = 1.0;
  MarkovState markov_state = MarkovState::not_applicable;
  bool is_reset = true;
  /// Candidate winning credentials the adversary's decision compared.
  std::size_t candidates = 0;
  /// The broadcast honoured a commitment made in the previous round.
  bool committed = false;
};

struct Trace {
  SimConfig config;
  std::vector<RoundRecord> records;
};

// Stake schedules ---------------------------------------------------------

class StakeSchedule {
 public:
  virtual ~StakeSchedule() = default;
  /// Online-stake multiplier for the next round.
  virtual double next() = 0;
};

/// lambda_r i.i.d. uniform on [1 - delta, 1 + delta]; constant 1 when delta == 0.
class UniformStakeSchedule final : public StakeSchedule {
 public:
  UniformStakeSchedule(double delta, std::uint64_t seed);
  double next() override;

 private:
  double delta_;
  std::mt19937_64 rng_;
};

std::vector<double> stake_schedule(double delta, std::size_t rounds, std::uint64_t seed);

// Engine ------------------------------------------------------------------

struct RoundState {
  std::size_t round = 0;
  Seed seed;
  std::optional<Commitment> pending;
};

/// Fixed per-simulation context: accounts, strategy and configuration.
class RoundEngine {
 public:
  RoundEngine(const SimConfig& config, const Strategy& strategy);

  RoundState initial_state() const;

  /// Plays one round at online stake lambda. The returned record has
  /// is_reset / markov_state left at their defaults; see mark_reset_rounds.
  RoundRecord run_round(RoundState& state, double lambda) const;

  const AccountKey& adversary_key() const noexcept { return adversary_; }
  const AccountKey& honest_b_key() const noexcept { return honest_b_; }
  const AccountKey& honest_c_key() const noexcept { return honest_c_; }

 private:
  SimConfig config_;
  const Strategy& strategy_;
  AccountKey adversary_;
  AccountKey honest_b_;
  AccountKey honest_c_;
  PrfLadderOracle oracle_;
};

/// Runs burn_in + rounds rounds and keeps the last `rounds` records, with
/// reset flags and Markov states filled in.
Trace run_simulation(const SimConfig& config);

/// Same, with a caller-supplied strategy and stake schedule. Reset marking is
/// applied only when config.strategy names a built-in strategy.
Trace run_simulation(const SimConfig& config, const Strategy& strategy, StakeSchedule& schedule);

/// Raised by mark_reset_rounds for strategies without a reset rule.
class UnsupportedStrategy : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sets is_reset and markov_state from the recorded decisions. Round r+1 is a
/// reset round unless the adversary won round r with a decision that compared
/// two or more candidate credentials. records[0] keeps its flag.
void mark_reset_rounds(Trace& trace);

/// Checks that each round's seed is the previous round's winning credential.
bool chain_intact(const Trace& trace);

}  // namespace cssp
