#include "cssp/detection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <tuple>

#include <json.hpp>

#include "cssp/core.hpp"
#include "cssp/parallel.hpp"
#include "cssp/protocol.hpp"
#include "cssp/rng.hpp"

namespace cssp {
namespace {

void check_significance(double sig) {
  if (!(sig > 0.0 && sig < 1.0)) throw DomainError("significance must lie in (0, 1)");
}

void require_length(const ScoreSeries& s, std::size_t min, const char* test) {
  if (s.size() < min)
    throw InsufficientSample(std::string(test) + ": need at least " + std::to_string(min) + " scores, got " +
                             std::to_string(s.size()));
}

std::vector<double> sorted_copy(const std::vector<double>& v) {
  std::vector<double> s(v);
  std::sort(s.begin(), s.end());
  return s;
}

// k-th order statistic (1-based, clamped) of an ascending vector.
double order_stat(const std::vector<double>& asc, double k) {
  const auto idx = static_cast<std::size_t>(std::clamp(std::ceil(k), 1.0, static_cast<double>(asc.size())));
  return asc[idx - 1];
}

double upper_tail_p(const std::vector<double>& asc, double stat) {
  const auto ge = asc.end() - std::lower_bound(asc.begin(), asc.end(), stat);
  return (1.0 + static_cast<double>(ge)) / (1.0 + static_cast<double>(asc.size()));
}

// Null statistics are pivotal in everything but their key, so they're shared
// across calls.
template <class Key>
class NullCache {
 public:
  template <class Make>
  std::shared_ptr<const std::vector<double>> get(const Key& key, Make&& make) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = map_.find(key);
      if (it != map_.end()) return it->second;
    }
    auto made = std::make_shared<const std::vector<double>>(make());
    std::lock_guard<std::mutex> lock(mu_);
    return map_.emplace(key, std::move(made)).first->second;
  }

 private:
  std::mutex mu_;
  std::map<Key, std::shared_ptr<const std::vector<double>>> map_;
};

using NullKey = std::tuple<std::size_t, std::size_t, std::uint64_t>;

// The fitted-rate KS statistic does not depend on the true rate, so the
// bootstrap runs on Exp(1). Samples are generated already sorted (Renyi).
std::vector<double> bootstrap_null(std::size_t n, std::size_t reps, std::uint64_t seed) {
  std::vector<double> stats(reps);
  parallel_for(reps, [&](std::size_t r) {
    std::mt19937_64 rng(sub_seed(seed, r));
    std::vector<double> x(n);
    double acc = 0.0, total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double e = exp_draw(rng, 1.0);
      total += e;
      acc += e / static_cast<double>(n - j);
      x[j] = acc;
    }
    stats[r] = ks_distance_exp_sorted(x, static_cast<double>(n) / total);
  });
  std::sort(stats.begin(), stats.end());
  return stats;
}

NullCache<NullKey>& bootstrap_cache() {
  static NullCache<NullKey> cache;
  return cache;
}

NullCache<NullKey>& permutation_cache() {
  static NullCache<NullKey> cache;
  return cache;
}

void shuffle_indices(std::vector<std::uint32_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(std::uniform_int_distribution<std::uint64_t>(0, i - 1)(rng));
    std::swap(v[i - 1], v[j]);
  }
}

// Average ranks (1-based); returns whether any ties were found.
bool average_ranks(const std::vector<double>& v, std::vector<double>& ranks) {
  std::vector<std::uint32_t> order(v.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return v[a] < v[b]; });
  ranks.assign(v.size(), 0.0);
  bool ties = false;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    if (j - i > 1) ties = true;
    const double r = 0.5 * static_cast<double>(i + j + 1);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ties;
}

// Spearman correlation of two tie-free rank vectors, from sum(rx * ry).
double spearman_from_cross(long double cross, std::size_t m) {
  const long double md = static_cast<long double>(m);
  const long double mean_term = md * (md + 1) * (md + 1) / 4.0L;
  const long double var_term = md * (md * md - 1) / 12.0L;
  return static_cast<double>((cross - mean_term) / var_term);
}

// |rho| under random re-pairing, for tie-free ranks 1..m.
std::vector<double> permutation_null(std::size_t m, std::size_t perms, std::uint64_t seed) {
  std::vector<double> stats(perms);
  parallel_for(perms, [&](std::size_t p) {
    std::mt19937_64 rng(sub_seed(seed, p));
    std::vector<std::uint32_t> perm(m);
    std::iota(perm.begin(), perm.end(), 1u);
    shuffle_indices(perm, rng);
    long double cross = 0.0L;
    for (std::size_t i = 0; i < m; ++i) cross += static_cast<long double>(i + 1) * perm[i];
    stats[p] = std::abs(spearman_from_cross(cross, m));
  });
  std::sort(stats.begin(), stats.end());
  return stats;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

// Lower and upper band violations of the empirical CDF at rate g.
struct Violation {
  double lower;
  double upper;
  double worst() const { return std::max(lower, upper); }
};

Violation band_violation(const std::vector<double>& asc, double g, double delta) {
  const double n = static_cast<double>(asc.size());
  const double lo_rate = (1.0 - delta) * g, hi_rate = (1.0 + delta) * g;
  Violation v{-1.0, -1.0};
  for (std::size_t i = 0; i < asc.size(); ++i) {
    const double z = asc[i];
    // F_n jumps from i/n to (i+1)/n at z.
    v.lower = std::max(v.lower, -std::expm1(-lo_rate * z) - static_cast<double>(i) / n);
    v.upper = std::max(v.upper, static_cast<double>(i + 1) / n + std::expm1(-hi_rate * z));
  }
  return v;
}

}  // namespace

ScoreSeries::ScoreSeries(std::vector<double> scores) : scores_(std::move(scores)) {
  for (double s : scores_)
    if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError("scores must be finite and nonnegative");
}

ScoreSeries observer_view(const Trace& trace) {
  std::vector<double> s;
  s.reserve(trace.records.size());
  for (const auto& r : trace.records) s.push_back(r.winning_score.value());
  return ScoreSeries(std::move(s));
}

std::string to_string(TestKind t) {
  switch (t) {
    case TestKind::distribution: return "distribution";
    case TestKind::correlation: return "correlation";
    case TestKind::envelope: return "envelope";
    case TestKind::dominance: return "dominance";
  }
  return "unknown";
}

std::string to_string(Verdict v) { return v == Verdict::reject ? "reject" : "consistent"; }

std::string DetectionReport::to_json() const {
  nlohmann::ordered_json j;
  j["test"] = cssp::to_string(test);
  j["statistic"] = statistic;
  j["threshold"] = threshold;
  j["p_value"] = p_value ? nlohmann::ordered_json(*p_value) : nlohmann::ordered_json(nullptr);
  j["fitted_gamma"] = fitted_gamma ? nlohmann::ordered_json(*fitted_gamma) : nlohmann::ordered_json(nullptr);
  j["verdict"] = cssp::to_string(verdict);
  j["sample_size"] = sample_size;
  j["parameters"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : parameters) j["parameters"][k] = v;
  return j.dump();
}

double mle_rate(const ScoreSeries& series) {
  if (series.empty()) throw InsufficientSample("mle_rate: empty series");
  const double total = std::accumulate(series.scores().begin(), series.scores().end(), 0.0);
  if (!(total > 0.0)) throw DegenerateSeries("mle_rate: all scores are zero");
  return static_cast<double>(series.size()) / total;
}

double ks_distance_sorted(const std::vector<double>& sorted, const std::function<double(double)>& cdf) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_distance_exp_sorted(const std::vector<double>& sorted, double rate) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = -std::expm1(-rate * sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double dkw_epsilon(std::size_t n, double significance) {
  check_significance(significance);
  if (n == 0) throw InsufficientSample("dkw_epsilon: n must be positive");
  return std::sqrt(std::log(2.0 / significance) / (2.0 * static_cast<double>(n)));
}

double dkw_epsilon_one_sided(std::size_t n, double significance) {
  check_significance(significance);
  if (n == 0) throw InsufficientSample("dkw_epsilon_one_sided: n must be positive");
  return std::sqrt(std::log(1.0 / significance) / (2.0 * static_cast<double>(n)));
}

double kolmogorov_cdf(double x) {
  if (!(x > 0.0)) return 0.0;
  constexpr double pi = 3.14159265358979323846;
  if (x < 1.0) {
    // Jacobi-transformed series converges fast for small x.
    double s = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double t = (2 * k - 1) * pi / x;
      s += std::exp(-t * t / 8.0);
    }
    return std::sqrt(2.0 * pi) / x * s;
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return 1.0 - 2.0 * s;
}

double kolmogorov_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("kolmogorov_quantile: p must lie in (0, 1)");
  double lo = 0.05, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (kolmogorov_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double ks_critical_value(std::size_t n, double significance) {
  check_significance(significance);
  if (n == 0) throw InsufficientSample("ks_critical_value: n must be positive");
  const double rn = std::sqrt(static_cast<double>(n));
  return kolmogorov_quantile(1.0 - significance) / (rn + 0.12 + 0.11 / rn);
}

DetectionReport distribution_test(const ScoreSeries& series, double significance, std::size_t bootstrap_reps,
                                  std::uint64_t seed) {
  check_significance(significance);
  require_length(series, kMinTestLength, "distribution_test");
  if (bootstrap_reps == 0) throw DomainError("distribution_test: bootstrap_reps must be positive");
  const double gamma = mle_rate(series);
  const auto asc = sorted_copy(series.scores());
  const double stat = ks_distance_exp_sorted(asc, gamma);

  const std::size_t n = series.size();
  const auto null = bootstrap_cache().get(NullKey{n, bootstrap_reps, seed},
                                          [&] { return bootstrap_null(n, bootstrap_reps, seed); });

  DetectionReport r;
  r.test = TestKind::distribution;
  r.statistic = stat;
  r.threshold = order_stat(*null, (1.0 - significance) * static_cast<double>(bootstrap_reps));
  r.p_value = upper_tail_p(*null, stat);
  r.fitted_gamma = gamma;
  r.verdict = stat > r.threshold ? Verdict::reject : Verdict::consistent;
  r.sample_size = n;
  r.parameters = {{"significance", significance},
                  {"bootstrap_reps", static_cast<double>(bootstrap_reps)},
                  {"seed", static_cast<double>(seed)}};
  return r;
}

DetectionReport correlation_test(const ScoreSeries& series, double significance, std::size_t permutations,
                                 std::uint64_t seed) {
  check_significance(significance);
  require_length(series, kMinTestLength, "correlation_test");
  if (permutations == 0) throw DomainError("correlation_test: permutations must be positive");
  const auto& s = series.scores();
  const std::size_t m = s.size() - 1;
  std::vector<double> rx, ry;
  const bool ties_x = average_ranks(std::vector<double>(s.begin(), s.end() - 1), rx);
  const bool ties_y = average_ranks(std::vector<double>(s.begin() + 1, s.end()), ry);

  double rho = 0.0;
  std::vector<double> null_abs;
  std::shared_ptr<const std::vector<double>> cached;
  if (!ties_x && !ties_y) {
    long double cross = 0.0L;
    for (std::size_t i = 0; i < m; ++i) cross += static_cast<long double>(rx[i]) * ry[i];
    rho = spearman_from_cross(cross, m);
    cached = permutation_cache().get(NullKey{m, permutations, seed},
                                     [&] { return permutation_null(m, permutations, seed); });
  } else {
    rho = pearson(rx, ry);
    null_abs.resize(permutations);
    parallel_for(permutations, [&](std::size_t p) {
      std::mt19937_64 rng(sub_seed(seed, p));
      std::vector<std::uint32_t> perm(m);
      std::iota(perm.begin(), perm.end(), 0u);
      shuffle_indices(perm, rng);
      std::vector<double> shuffled(m);
      for (std::size_t i = 0; i < m; ++i) shuffled[i] = ry[perm[i]];
      null_abs[p] = std::abs(pearson(rx, shuffled));
    });
    std::sort(null_abs.begin(), null_abs.end());
  }
  const std::vector<double>& null = cached ? *cached : null_abs;

  DetectionReport r;
  r.test = TestKind::correlation;
  r.statistic = rho;
  r.threshold = order_stat(null, (1.0 - significance) * static_cast<double>(permutations));
  // Use a hair of slack so |rho| equal to a null draw counts as "at least as extreme".
  r.p_value = upper_tail_p(null, std::abs(rho) * (1.0 - 1e-12));
  r.verdict = *r.p_value < significance ? Verdict::reject : Verdict::consistent;
  r.sample_size = series.size();
  r.parameters = {{"significance", significance},
                  {"permutations", static_cast<double>(permutations)},
                  {"seed", static_cast<double>(seed)},
                  {"pairs", static_cast<double>(m)},
                  {"sign", rho > 0.0 ? 1.0 : (rho < 0.0 ? -1.0 : 0.0)},
                  {"ties", (ties_x || ties_y) ? 1.0 : 0.0}};
  return r;
}

DetectionReport envelope_test(const ScoreSeries& series, double delta, double significance,
                              std::size_t gamma_points) {
  check_significance(significance);
  if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("envelope_test: delta must lie in [0, 1)");
  if (gamma_points < 2) throw DomainError("envelope_test: need at least 2 gamma grid points");
  require_length(series, 1, "envelope_test");
  const double gamma_hat = mle_rate(series);
  const auto asc = sorted_copy(series.scores());
  const double eps = dkw_epsilon(series.size(), significance);

  // Along the grid the lower violation only grows and the upper one only
  // shrinks, so the minimax point sits at their crossing.
  std::vector<double> grid(gamma_points);
  const double step = std::log(4.0) / static_cast<double>(gamma_points - 1);
  for (std::size_t k = 0; k < gamma_points; ++k) grid[k] = 0.5 * gamma_hat * std::exp(step * static_cast<double>(k));
  std::map<std::size_t, Violation> memo;
  auto at = [&](std::size_t k) -> const Violation& {
    auto it = memo.find(k);
    if (it == memo.end()) it = memo.emplace(k, band_violation(asc, grid[k], delta)).first;
    return it->second;
  };
  std::size_t lo = 0, hi = gamma_points;  // first k with lower >= upper lies in [lo, hi]
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (at(mid).lower >= at(mid).upper)
      hi = mid;
    else
      lo = mid + 1;
  }
  std::size_t best = std::min(lo, gamma_points - 1);
  if (lo > 0 && at(lo - 1).worst() < at(best).worst()) best = lo - 1;

  DetectionReport r;
  r.test = TestKind::envelope;
  r.statistic = at(best).worst();
  r.threshold = eps;
  r.fitted_gamma = grid[best];
  r.verdict = r.statistic > eps ? Verdict::reject : Verdict::consistent;
  r.sample_size = series.size();
  r.parameters = {{"delta", delta},
                  {"significance", significance},
                  {"gamma_points", static_cast<double>(gamma_points)},
                  {"gamma_mle", gamma_hat}};
  return r;
}

Profitability profitability(const Trace& trace, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("profitability: alpha must lie in (0, 1)");
  Profitability p;
  p.rounds = trace.records.size();
  if (p.rounds == 0) throw InsufficientSample("profitability: empty trace");
  std::size_t wins = 0;
  for (const auto& r : trace.records) wins += r.winner == Winner::adversary;
  p.win_fraction = static_cast<double>(wins) / static_cast<double>(p.rounds);
  p.delta_profit = p.win_fraction - alpha;
  p.standard_error = std::sqrt(alpha * (1.0 - alpha) / static_cast<double>(p.rounds));
  return p;
}

ResetBroadcasts reset_broadcasts(const Trace& trace) {
  ResetBroadcasts out;
  for (const auto& r : trace.records) {
    if (!r.is_reset) continue;
    if (r.adversary_broadcast)
      out.scores.push_back(r.adversary_broadcast->value());
    else
      ++out.withheld;
  }
  return out;
}

DetectionReport dominance_test(const ResetBroadcasts& reset, double alpha, double significance) {
  check_significance(significance);
  if (!(alpha > 0.0)) throw DomainError("dominance_test: alpha must be positive");
  const std::size_t n = reset.size();
  if (n == 0) throw InsufficientSample("dominance_test: no reset rounds");
  const auto asc = sorted_copy(reset.scores);
  double excess = 0.0;
  for (std::size_t i = 0; i < asc.size(); ++i)
    excess = std::max(excess, static_cast<double>(i + 1) / static_cast<double>(n) - exp_cdf(alpha, asc[i]));

  DetectionReport r;
  r.test = TestKind::dominance;
  r.statistic = excess;
  r.threshold = dkw_epsilon_one_sided(n, significance);
  r.verdict = excess > r.threshold ? Verdict::reject : Verdict::consistent;
  r.sample_size = n;
  r.parameters = {{"alpha", alpha},
                  {"significance", significance},
                  {"withheld", static_cast<double>(reset.withheld)}};
  return r;
}

ExpRaceReport exp_race_check(double alpha, double epsilon, std::size_t samples,
                                            std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("exp_race_check: alpha must lie in (0, 1)");
  if (!(epsilon >= 0.0)) throw DomainError("exp_race_check: epsilon must be nonnegative");
  if (samples == 0) throw InsufficientSample("exp_race_check: samples must be positive");
  std::mt19937_64 rng(sub_seed(seed, 51));
  std::vector<double> mins(samples);
  std::size_t wins = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = exp_draw(rng, 1.0 - alpha);
    const double y = exp_draw(rng, alpha + epsilon);
    wins += y < x;
    mins[i] = std::min(x, y);
  }
  std::sort(mins.begin(), mins.end());

  ExpRaceReport t;
  t.alpha = alpha;
  t.epsilon = epsilon;
  t.samples = samples;
  t.win_frequency = static_cast<double>(wins) / static_cast<double>(samples);
  t.expected_win = (alpha + epsilon) / (1.0 + epsilon);
  t.win_standard_error = std::sqrt(t.expected_win * (1.0 - t.expected_win) / static_cast<double>(samples));
  t.min_ks_distance = ks_distance_exp_sorted(mins, 1.0 + epsilon);
  t.min_ks_critical = ks_critical_value(samples, 0.01);
  t.win_ok = std::abs(t.win_frequency - t.expected_win) <= 3.0 * t.win_standard_error;
  t.min_ok = t.min_ks_distance < t.min_ks_critical;
  return t;
}

}  // namespace cssp
