#include "cssp/protocol.hpp"

#include <string>

#include "cssp/rng.hpp"

namespace cssp {
namespace {

constexpr std::size_t kLadderCap = std::size_t{1} << 16;

bool is_builtin(const std::string& id) {
  return id == "honest" || id == "silent" || id == "one-lookahead";
}

}  // namespace

void SimConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("beta must lie in [0, 1]");
  if (rounds == 0) throw DomainError("rounds must be positive");
  if (burn_in >= rounds) throw DomainError("burn_in must be smaller than rounds");
  if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("delta must lie in [0, 1)");
  if (ladder_depth == 0) throw DomainError("ladder_depth must be positive");
}

UniformStakeSchedule::UniformStakeSchedule(double delta, std::uint64_t seed) : delta_(delta), rng_(seed) {
  if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("delta must lie in [0, 1)");
}

double UniformStakeSchedule::next() {
  const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;  // [0, 1)
  if (delta_ == 0.0) return 1.0;
  return (1.0 - delta_) + 2.0 * delta_ * u;
}

std::vector<double> stake_schedule(double delta, std::size_t rounds, std::uint64_t seed) {
  UniformStakeSchedule schedule(delta, seed);
  std::vector<double> out(rounds);
  for (auto& v : out) v = schedule.next();
  return out;
}

RoundEngine::RoundEngine(const SimConfig& config, const Strategy& strategy)
    : config_(config),
      strategy_(strategy),
      adversary_(AccountKey::derive(config.master_seed, "adversary")),
      honest_b_(AccountKey::derive(config.master_seed, "honest-b")),
      honest_c_(AccountKey::derive(config.master_seed, "honest-c")),
      oracle_(adversary_, StakeFraction(config.alpha)) {
  config_.validate();
}

RoundState RoundEngine::initial_state() const {
  return RoundState{0, Seed{splitmix64(config_.master_seed ^ 0x5eedULL)}, std::nullopt};
}

RoundRecord RoundEngine::run_round(RoundState& state, double lambda) const {
  const double alpha = config_.alpha;
  const double beta = config_.beta;
  const double rate_b = beta * (1.0 - alpha) * lambda;
  const double rate_c = (1.0 - beta) * (1.0 - alpha) * lambda;

  RoundRecord rec;
  rec.round = state.round;
  rec.seed = state.seed;
  rec.online_stake = lambda;

  const Credential cred_b = prf_uniform(honest_b_, state.seed);
  if (rate_b > 0.0) rec.honest_b_score = score_of(cred_b.value(), StakeFraction(rate_b));

  ObservationView view;
  view.seed = state.seed;
  if (beta > 0.0) view.honest_b_score = rec.honest_b_score;
  view.alpha = alpha;
  view.beta = beta;
  view.lambda = lambda;
  view.pending_commitment = state.pending;
  view.ladder_depth = config_.ladder_depth;

  const LadderDemand demand = strategy_.demand(view);
  ScoreLadder ladder(state.seed, StakeFraction(alpha * lambda));
  if (demand.min_entries > 0) ladder.extend(adversary_, demand.min_entries);
  if (demand.cover_score) ladder.extend_until(adversary_, *demand.cover_score, kLadderCap);
  if (demand.cover_window && !ladder.empty())
    ladder.extend_until(adversary_, ladder[0].score.value() + *demand.cover_window, kLadderCap);

  const StrategyDecision decision = strategy_.decide(view, ladder, oracle_);
  if (decision.broadcast) {
    const Broadcast& b = *decision.broadcast;
    if (b.ladder_index >= ladder.size() || !(ladder[b.ladder_index].score == b.score) ||
        !(ladder[b.ladder_index].credential == b.credential))
      throw ContractViolation("strategy broadcast a score that is not on its ladder");
    rec.adversary_broadcast = b.score;
  }
  rec.candidates = decision.candidates;
  rec.committed = decision.committed;

  // C's credential is only revealed after the adversary has committed.
  const Credential cred_c = prf_uniform(honest_c_, state.seed);
  if (rate_c > 0.0) rec.honest_c_score = score_of(cred_c.value(), StakeFraction(rate_c));

  // Lowest score wins; ties go to the earlier of adversary, B, C.
  if (decision.broadcast) {
    rec.winner = Winner::adversary;
    rec.winning_score = decision.broadcast->score;
    rec.winning_credential = decision.broadcast->credential;
  }
  if (rec.honest_b_score && (rec.winner == Winner::none || *rec.honest_b_score < rec.winning_score)) {
    rec.winner = Winner::honest_b;
    rec.winning_score = *rec.honest_b_score;
    rec.winning_credential = cred_b;
  }
  if (rec.honest_c_score && (rec.winner == Winner::none || *rec.honest_c_score < rec.winning_score)) {
    rec.winner = Winner::honest_c;
    rec.winning_score = *rec.honest_c_score;
    rec.winning_credential = cred_c;
  }

  state.seed = rec.winning_credential;
  state.pending = (rec.winner == Winner::adversary) ? decision.commit_next : std::nullopt;
  ++state.round;
  return rec;
}

Trace run_simulation(const SimConfig& config) {
  config.validate();
  const auto strategy = make_strategy(config.strategy);
  UniformStakeSchedule schedule(config.delta, splitmix64(config.master_seed ^ 0x57a4eULL));
  return run_simulation(config, *strategy, schedule);
}

Trace run_simulation(const SimConfig& config, const Strategy& strategy, StakeSchedule& schedule) {
  config.validate();
  RoundEngine engine(config, strategy);
  RoundState state = engine.initial_state();

  Trace trace;
  trace.config = config;
  trace.records.reserve(config.burn_in + config.rounds);
  for (std::size_t r = 0; r < config.burn_in + config.rounds; ++r)
    trace.records.push_back(engine.run_round(state, schedule.next()));

  if (is_builtin(config.strategy)) mark_reset_rounds(trace);
  trace.records.erase(trace.records.begin(),
                      trace.records.begin() + static_cast<std::ptrdiff_t>(config.burn_in));
  for (std::size_t i = 0; i < trace.records.size(); ++i) trace.records[i].round = i;
  return trace;
}

void mark_reset_rounds(Trace& trace) {
  const std::string& id = trace.config.strategy;
  if (!is_builtin(id)) throw UnsupportedStrategy("no reset rule for strategy '" + id + "'");
  auto& recs = trace.records;
  if (id != "one-lookahead") {
    for (auto& r : recs) {
      r.is_reset = true;
      r.markov_state = MarkovState::not_applicable;
    }
    return;
  }
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (i > 0) {
      const RoundRecord& prev = recs[i - 1];
      const bool biased = prev.winner == Winner::adversary && !prev.committed && prev.candidates >= 2;
      recs[i].is_reset = !biased;
    }
    recs[i].markov_state = recs[i].is_reset ? MarkovState::fresh_seed : MarkovState::biased_seed;
  }
}

bool chain_intact(const Trace& trace) {
  for (std::size_t i = 1; i < trace.records.size(); ++i)
    if (!(trace.records[i].seed == trace.records[i - 1].winning_credential)) return false;
  return true;
}

}  // namespace cssp
