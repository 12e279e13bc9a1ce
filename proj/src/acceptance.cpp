#include "cssp/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "cssp/analytics.hpp"
#include "cssp/detection.hpp"
#include "cssp/parallel.hpp"
#include "cssp/protocol.hpp"
#include "cssp/rng.hpp"

namespace cssp {
namespace {

// Pinned tolerances and scales.
constexpr double kSig = 0.01;
constexpr std::size_t kBootstrap = 1000;
constexpr std::size_t kPermutations = 1000;
constexpr std::size_t kNullTraces = 500;
constexpr std::size_t kPowerReplicates = 100;
constexpr std::size_t kEnvelopeReplicates = 100;
constexpr double kPower = 0.99;
constexpr double kTwoSE = 2.0;
constexpr double kThreeSE = 3.0;
constexpr double kFiveSE = 5.0;
constexpr double kTruncationTol = 1e-9;
constexpr double kBandMultiple = 10.0;
constexpr std::size_t kShortRounds = 100000;    // honest / silent / fluctuating traces
constexpr std::size_t kLongRounds = 1000000;    // one-lookahead traces
constexpr std::size_t kResetRounds = 1000000;   // |W| law sample
constexpr std::size_t kRaceSamples = 1000000;
constexpr std::size_t kFixtureSamples = 100000;
constexpr double kAlpha = 0.3;

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double binomial_se(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

bool rate_at_nominal(double rate, std::size_t n) { return std::abs(rate - kSig) <= kTwoSE * binomial_se(kSig, n); }

double fraction(const std::vector<char>& flags) {
  return static_cast<double>(std::count(flags.begin(), flags.end(), 1)) / static_cast<double>(flags.size());
}

// Verdicts of the three observer tests on a batch of null traces.
struct NullBatch {
  std::vector<char> distribution, correlation, envelope;
};

struct PowerBatch {
  std::vector<char> distribution, correlation_negative;
};

class Suite {
 public:
  Suite(const AcceptanceOptions& opt, std::ostream* log) : opt_(opt), log_(log) {}

  std::size_t scale(std::size_t rounds) const { return opt_.quick ? std::max<std::size_t>(rounds / 100, 1) : rounds; }

  Trace simulate(const std::string& strategy, double alpha, double beta, std::size_t rounds, double delta,
                 std::uint64_t stream) const {
    SimConfig c;
    c.alpha = alpha;
    c.beta = beta;
    c.rounds = rounds;
    c.burn_in = std::min<std::size_t>(1000, rounds / 10);
    c.delta = delta;
    c.strategy = strategy;
    c.master_seed = sub_seed(opt_.seed, stream);
    Trace t = run_simulation(c);
    if (opt_.inject_failure) tamper(t);
    return t;
  }

  // Relabels the first half of the trace as adversary wins with inflated scores.
  static void tamper(Trace& t) {
    for (std::size_t i = 0; i < t.records.size() / 2; ++i) {
      auto& r = t.records[i];
      r.winner = Winner::adversary;
      r.winning_score = Score(2.0 * r.winning_score.value() + 1.0);
    }
  }

  const Trace& primary() {
    if (!primary_) {
      note("simulating one-lookahead beta=1 alpha=0.3 primary trace");
      primary_ = simulate("one-lookahead", kAlpha, 1.0, scale(kLongRounds), 0.0, 1);
    }
    return *primary_;
  }

  const NullBatch& null_batch(const std::string& strategy) {
    auto it = nulls_.find(strategy);
    if (it != nulls_.end()) return it->second;
    note("running " + std::to_string(kNullTraces) + " " + strategy + " traces");
    const std::uint64_t tag = strategy == "honest" ? 2 : 13;
    NullBatch b;
    b.distribution.assign(kNullTraces, 0);
    b.correlation.assign(kNullTraces, 0);
    b.envelope.assign(kNullTraces, 0);
    auto body = [&](std::size_t i) {
      const Trace t = simulate(strategy, kAlpha, 0.0, scale(kShortRounds), 0.0, (tag << 32) | i);
      const ScoreSeries s = observer_view(t);
      b.distribution[i] = distribution_test(s, kSig, kBootstrap).rejected();
      b.correlation[i] = correlation_test(s, kSig, kPermutations).rejected();
      b.envelope[i] = envelope_test(s, 0.0, kSig).rejected();
    };
    body(0);  // fills the shared null caches before fanning out
    parallel_for(kNullTraces - 1, [&](std::size_t i) { body(i + 1); });
    return nulls_.emplace(strategy, std::move(b)).first->second;
  }

  const PowerBatch& power_batch() {
    if (power_) return *power_;
    note("running " + std::to_string(kPowerReplicates) + " one-lookahead replicates");
    PowerBatch b;
    b.distribution.assign(kPowerReplicates, 0);
    b.correlation_negative.assign(kPowerReplicates, 0);
    auto body = [&](std::size_t i) {
      const ScoreSeries s =
          observer_view(simulate("one-lookahead", kAlpha, 1.0, scale(kLongRounds), 0.0, (6ULL << 32) | i));
      b.distribution[i] = distribution_test(s, kSig, kBootstrap).rejected();
      const DetectionReport c = correlation_test(s, kSig, kPermutations);
      b.correlation_negative[i] = c.rejected() && c.statistic < 0.0;
    };
    body(0);
    parallel_for(kPowerReplicates - 1, [&](std::size_t i) { body(i + 1); });
    power_ = std::move(b);
    return *power_;
  }

  void note(const std::string& s) const {
    if (log_) *log_ << "  .. " << s << std::endl;
  }

  const AcceptanceOptions& options() const { return opt_; }

 private:
  AcceptanceOptions opt_;
  std::ostream* log_;
  std::optional<Trace> primary_;
  std::map<std::string, NullBatch> nulls_;
  std::optional<PowerBatch> power_;
};

CriterionResult c1_balanced(Suite& s) {
  const Trace t = s.simulate("honest", kAlpha, 0.0, s.scale(kShortRounds), 0.0, 1ULL << 32);
  const Profitability p = profitability(t, kAlpha);
  const double z = (p.win_fraction - kAlpha) / p.standard_error;
  return {1, "balanced selection", std::abs(z) <= kThreeSE,
          fmt("honest win fraction %.5f vs %.2f, z=%.2f (|z| <= 3), R=%zu", p.win_fraction, kAlpha, z, p.rounds)};
}

CriterionResult c2_honest_null(Suite& s) {
  const Trace t = s.simulate("honest", kAlpha, 0.0, s.scale(kShortRounds), 0.0, 2ULL << 40);
  const DetectionReport r = distribution_test(observer_view(t), kSig, kBootstrap);
  const double rate = fraction(s.null_batch("honest").distribution);
  const bool ok = !r.rejected() && rate_at_nominal(rate, kNullTraces);
  return {2, "honest null distribution", ok,
          fmt("KS %.5f vs bootstrap 99%% threshold %.5f; rejection rate %.4f over %zu traces (nominal 0.01 +- %.4f)",
              r.statistic, r.threshold, rate, kNullTraces, kTwoSE * binomial_se(kSig, kNullTraces))};
}

CriterionResult c3_w_law(Suite& s) {
  const std::size_t want = s.scale(kResetRounds);
  // Reset rounds are ~92% of all rounds; run long enough to collect `want`.
  const Trace t = s.simulate("one-lookahead", kAlpha, 1.0, want + want / 5, 0.0, 3ULL << 32);
  std::vector<std::size_t> counts(6, 0);
  std::size_t n = 0;
  for (const auto& r : t.records) {
    if (!r.is_reset) continue;
    if (r.candidates < counts.size()) ++counts[r.candidates];
    if (++n == want) break;
  }
  bool ok = n == want;
  std::string cells;
  for (std::size_t l = 0; l < counts.size(); ++l) {
    const double p = w_size_pmf(kAlpha, l);
    const double emp = static_cast<double>(counts[l]) / static_cast<double>(n);
    const double z = (emp - p) / binomial_se(p, n);
    ok = ok && std::abs(z) <= kThreeSE;
    cells += fmt(" l=%zu:%.5f/%.5f(z=%.2f)", l, emp, p, z);
  }
  return {3, "|W| law on reset rounds", ok, fmt("n=%zu;", n) + cells};
}

CriterionResult c4_markov(Suite& s) {
  const Trace& t = s.primary();
  const MarkovSpec m = markov_chain(kAlpha);
  std::size_t c = 0, ch = 0, c_with_next = 0;
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    const bool in_c = t.records[i].markov_state == MarkovState::fresh_seed;
    c += in_c;
    if (in_c && i + 1 < t.records.size()) {
      ++c_with_next;
      ch += t.records[i + 1].markov_state == MarkovState::biased_seed;
    }
  }
  const std::size_t n = t.records.size();
  const double f_c = static_cast<double>(c) / static_cast<double>(n);
  const double f_h = 1.0 - f_c;
  const double f_ch = static_cast<double>(ch) / static_cast<double>(c_with_next);
  const double z_c = (f_c - m.s_C) / binomial_se(m.s_C, n);
  const double z_h = (f_h - m.s_H) / binomial_se(m.s_H, n);
  const double z_ch = (f_ch - m.p_CH) / binomial_se(m.p_CH, c_with_next);
  const bool ok = std::abs(z_c) <= kThreeSE && std::abs(z_h) <= kThreeSE && std::abs(z_ch) <= kThreeSE;
  return {4, "Markov chain", ok,
          fmt("s_C %.5f/%.5f (z=%.2f), s_H %.5f/%.5f (z=%.2f), C->H %.5f/%.2f (z=%.2f)", f_c, m.s_C, z_c, f_h,
              m.s_H, z_h, f_ch, m.p_CH, z_ch)};
}

CriterionResult c5_mixture(Suite& s) {
  std::vector<double> v = observer_view(s.primary()).scores();
  std::sort(v.begin(), v.end());
  const double ks = ks_distance_sorted(v, [](double z) { return lookahead_mixture_cdf(kAlpha, z, 1e-12).value; });
  const double band = dkw_epsilon(v.size(), kSig) + kTruncationTol;
  return {5, "mixture law", ks < band, fmt("KS to mixture %.6f < DKW 99%% band %.6f (n=%zu)", ks, band, v.size())};
}

CriterionResult c6_non_exponential(Suite& s) {
  const ExpFit fit = best_exp_fit(lookahead_mixture(kAlpha));
  const double band = dkw_epsilon(kLongRounds, kSig);  // at n = 10^6 regardless of scale
  const double power = fraction(s.power_batch().distribution);
  const bool margin_ok = fit.sup_distance > 0.0 && fit.sup_distance >= kBandMultiple * band;
  const bool power_ok = power >= kPower;
  return {6, "non-exponentiality", margin_ok && power_ok,
          fmt("best fit gamma*=%.5f sup distance %.6f vs 10x DKW band %.6f [%s]; distribution-test power %.2f "
              "over %zu replicates (>= 0.99) [%s]",
              fit.gamma, fit.sup_distance, kBandMultiple * band, margin_ok ? "ok" : "FAIL", power,
              kPowerReplicates, power_ok ? "ok" : "FAIL")};
}

CriterionResult c7_correlation(Suite& s) {
  const double power = fraction(s.power_batch().correlation_negative);
  const double honest = fraction(s.null_batch("honest").correlation);
  const bool ok = power >= kPower && rate_at_nominal(honest, kNullTraces);
  return {7, "negative correlation", ok,
          fmt("one-lookahead rejects with negative sign in %.2f of %zu (>= 0.99); honest rejection rate %.4f over "
              "%zu (nominal 0.01 +- %.4f)",
              power, kPowerReplicates, honest, kNullTraces, kTwoSE * binomial_se(kSig, kNullTraces))};
}

CriterionResult c8_profitability(Suite& s) {
  struct Case {
    double alpha, beta;
  };
  const Case cases[] = {{0.1, 1.0}, {0.3, 1.0}, {0.3, 0.0}};
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    const Trace owned = (c.alpha == kAlpha && c.beta == 1.0)
                            ? Trace{}
                            : s.simulate("one-lookahead", c.alpha, c.beta, s.scale(kLongRounds), 0.0,
                                         (8ULL << 32) | static_cast<std::uint64_t>(c.alpha * 100 + c.beta));
    const Trace& t = (c.alpha == kAlpha && c.beta == 1.0) ? s.primary() : owned;
    const Profitability p = profitability(t, c.alpha);
    const double z = p.delta_profit / p.standard_error;
    const bool case_ok = z > kFiveSE;
    ok = ok && case_ok;
    detail += fmt("(a=%.1f,b=%.0f) win %.5f gain %+.5f z=%.2f [%s]; ", c.alpha, c.beta, p.win_fraction,
                  p.delta_profit, z, case_ok ? "ok" : "FAIL");
    if (c.beta == 1.0 && c.alpha == kAlpha) {
      const double w = analytic_win_rate(c.alpha);
      const double za = (p.win_fraction - w) / binomial_se(w, p.rounds);
      const bool match = std::abs(za) <= kThreeSE;
      ok = ok && match;
      detail += fmt("analytic %.5f z=%.2f [%s]; ", w, za, match ? "ok" : "FAIL");
    }
  }
  return {8, "profitability", ok, detail};
}

CriterionResult c9_reset_rounds(Suite& s) {
  const double alphas[] = {0.1, 0.2, 0.3, 0.37};
  bool ok = true;
  std::string detail;
  for (double a : alphas) {
    const Trace owned = a == kAlpha ? Trace{}
                                    : s.simulate("one-lookahead", a, 1.0, s.scale(kShortRounds), 0.0,
                                                 (9ULL << 32) | static_cast<std::uint64_t>(a * 100));
    const Trace& t = a == kAlpha ? s.primary() : owned;
    const auto resets = std::count_if(t.records.begin(), t.records.end(), [](const RoundRecord& r) { return r.is_reset; });
    const double f = static_cast<double>(resets) / static_cast<double>(t.records.size());
    ok = ok && f > 0.0;
    detail += fmt("a=%.2f: %.5f; ", a, f);
  }
  return {9, "reset rounds", ok, "reset fraction " + detail};
}

CriterionResult c10_dominance(Suite& s) {
  const DetectionReport real = dominance_test(reset_broadcasts(s.primary()), kAlpha, kSig);
  std::mt19937_64 rng(sub_seed(s.options().seed, 10));
  ResetBroadcasts fixture;
  for (std::size_t i = 0; i < s.scale(kFixtureSamples); ++i) fixture.scores.push_back(exp_draw(rng, kAlpha + 0.1));
  if (s.options().inject_failure) fixture.scores.assign(fixture.scores.size(), 1e6);
  const DetectionReport fake = dominance_test(fixture, kAlpha, kSig);
  return {10, "reset dominance", !real.rejected() && fake.rejected(),
          fmt("one-lookahead reset broadcasts excess %.5f vs %.5f (%s); Exp(0.4) fixture excess %.5f vs %.5f (%s)",
              real.statistic, real.threshold, to_string(real.verdict).c_str(), fake.statistic, fake.threshold,
              to_string(fake.verdict).c_str())};
}

CriterionResult c11_exp_race(Suite& s) {
  const ExpRaceReport t = exp_race_check(kAlpha, 0.2, s.scale(kRaceSamples), sub_seed(s.options().seed, 11));
  const bool ok = t.passed() && !s.options().inject_failure;
  return {11, "exponential algebra", ok,
          fmt("win freq %.5f vs %.6f (z=%.2f); min KS vs Exp(1.2) %.6f < %.6f", t.win_frequency, t.expected_win,
              (t.win_frequency - t.expected_win) / t.win_standard_error, t.min_ks_distance, t.min_ks_critical)};
}

CriterionResult c12_envelope(Suite& s) {
  std::vector<char> passed(kEnvelopeReplicates, 0);
  parallel_for(kEnvelopeReplicates, [&](std::size_t i) {
    const Trace t = s.simulate("honest", kAlpha, 0.0, s.scale(kShortRounds), 0.1, (12ULL << 32) | i);
    passed[i] = !envelope_test(observer_view(t), 0.1, kSig).rejected();
  });
  const double pass_rate = fraction(passed);
  const DetectionReport r = envelope_test(observer_view(s.primary()), 0.02, kSig);
  const bool honest_ok = pass_rate >= kPower;
  return {12, "robust envelope", honest_ok && r.rejected(),
          fmt("honest delta=0.1 pass rate %.2f over %zu (>= 0.99) [%s]; one-lookahead at delta=0.02 statistic %.6f "
              "vs band %.6f (%s, need reject)",
              pass_rate, kEnvelopeReplicates, honest_ok ? "ok" : "FAIL", r.statistic, r.threshold,
              to_string(r.verdict).c_str())};
}

CriterionResult c13_silent(Suite& s) {
  const NullBatch& b = s.null_batch("silent");
  const double d = fraction(b.distribution), c = fraction(b.correlation), e = fraction(b.envelope);
  const double tol = kTwoSE * binomial_se(kSig, kNullTraces);
  // The DKW band test is conservative: its rejection rate is at most nominal.
  const bool ok = rate_at_nominal(d, kNullTraces) && rate_at_nominal(c, kNullTraces) && e <= kSig + tol;
  return {13, "silent adversary undetectable", ok,
          fmt("rejection rates over %zu traces: distribution %.4f, correlation %.4f (0.01 +- %.4f), envelope %.4f "
              "(<= %.4f)",
              kNullTraces, d, c, tol, e, kSig + tol)};
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options, std::ostream& out, std::ostream* log) {
  using Fn = CriterionResult (*)(Suite&);
  const Fn criteria[kCriterionCount] = {c1_balanced,        c2_honest_null, c3_w_law,        c4_markov,
                                        c5_mixture,         c6_non_exponential, c7_correlation, c8_profitability,
                                        c9_reset_rounds,    c10_dominance,  c11_exp_race,   c12_envelope,
                                        c13_silent};
  Suite suite(options, log);
  std::vector<CriterionResult> results;
  for (int id = 1; id <= kCriterionCount; ++id) {
    if (!options.only.empty() && !options.only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = criteria[id - 1](suite);
    } catch (const std::exception& e) {
      r = {id, "criterion " + std::to_string(id), false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out << (r.passed ? "PASS" : "FAIL") << " [" << r.id << "] " << r.title << ": " << r.detail
        << fmt(" (%.1fs)", secs) << std::endl;
    results.push_back(std::move(r));
  }
  const auto passed = std::count_if(results.begin(), results.end(), [](const CriterionResult& r) { return r.passed; });
  out << passed << "/" << results.size() << " criteria passed" << (options.quick ? " (quick scale)" : "") << std::endl;
  return results;
}

}  // namespace cssp
