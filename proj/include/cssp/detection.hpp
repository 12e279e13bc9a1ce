#pragma once

// The onlooker's tests over winning scores. Everything except
// dominance_test / profitability sees only a ScoreSeries.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cssp {

struct Trace;

class InsufficientSample : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DegenerateSeries : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Winning scores in round order.
class ScoreSeries {
 public:
  ScoreSeries() = default;
  /// Throws DomainError on negative or non-finite entries.
  explicit ScoreSeries(std::vector<double> scores);

  const std::vector<double>& scores() const noexcept { return scores_; }
  std::size_t size() const noexcept { return scores_.size(); }
  bool empty() const noexcept { return scores_.empty(); }

 private:
  std::vector<double> scores_;
};

ScoreSeries observer_view(const Trace& trace);

enum class TestKind { distribution, correlation, envelope, dominance };
enum class Verdict { consistent, reject };

std::string to_string(TestKind t);
std::string to_string(Verdict v);

struct DetectionReport {
  TestKind test = TestKind::distribution;
  double statistic = 0.0;
  double threshold = 0.0;
  std::optional<double> p_value;
  std::optional<double> fitted_gamma;
  Verdict verdict = Verdict::consistent;
  std::size_t sample_size = 0;
  std::map<std::string, double> parameters;

  bool rejected() const noexcept { return verdict == Verdict::reject; }
  /// Single JSON object.
  std::string to_json() const;
};

inline constexpr std::size_t kMinTestLength = 1000;
inline constexpr std::uint64_t kDefaultTestSeed = 0x5eed;

double mle_rate(const ScoreSeries& series);

/// sup_z |F_n(z) - F(z)| for an ascending sample.
double ks_distance_sorted(const std::vector<double>& sorted, const std::function<double(double)>& cdf);
double ks_distance_exp_sorted(const std::vector<double>& sorted, double rate);

/// Two-sided DKW half-width: sqrt(ln(2/sig) / 2n).
double dkw_epsilon(std::size_t n, double significance);
/// One-sided: sqrt(ln(1/sig) / 2n).
double dkw_epsilon_one_sided(std::size_t n, double significance);

/// Limiting Kolmogorov distribution P[sqrt(n) D <= x].
double kolmogorov_cdf(double x);
double kolmogorov_quantile(double p);
/// Level-sig critical value of the simple-null KS distance (Stephens' correction).
double ks_critical_value(std::size_t n, double significance);

/// KS distance to Exp(mle) against a parametric-bootstrap null of the same statistic.
DetectionReport distribution_test(const ScoreSeries& series, double significance = 0.01,
                                  std::size_t bootstrap_reps = 1000, std::uint64_t seed = kDefaultTestSeed);

/// Spearman correlation of (score_r, score_{r+1}) with a two-sided permutation p-value.
DetectionReport correlation_test(const ScoreSeries& series, double significance = 0.01,
                                 std::size_t permutations = 10000, std::uint64_t seed = kDefaultTestSeed);

/// Searches gamma for a (1 +- delta) band around Exp(gamma), widened by the
/// DKW half-width, that contains the empirical CDF.
DetectionReport envelope_test(const ScoreSeries& series, double delta, double significance = 0.01,
                              std::size_t gamma_points = 512);

struct Profitability {
  double win_fraction = 0.0;
  double delta_profit = 0.0;
  double standard_error = 0.0;  // binomial SE at p = alpha
  std::size_t rounds = 0;
};

Profitability profitability(const Trace& trace, double alpha);

/// Adversary broadcasts in reset rounds; rounds without a broadcast count as
/// an infinite score.
struct ResetBroadcasts {
  std::vector<double> scores;
  std::size_t withheld = 0;

  std::size_t size() const noexcept { return scores.size() + withheld; }
};

ResetBroadcasts reset_broadcasts(const Trace& trace);

/// Hidden-state diagnostic: rejects when the empirical CDF rises above
/// Exp(alpha)'s CDF by more than the one-sided DKW half-width anywhere.
DetectionReport dominance_test(const ResetBroadcasts& reset, double alpha, double significance = 0.01);

struct ExpRaceReport {
  double alpha = 0.0;
  double epsilon = 0.0;
  std::size_t samples = 0;
  double win_frequency = 0.0;
  double expected_win = 0.0;
  double win_standard_error = 0.0;
  double min_ks_distance = 0.0;
  double min_ks_critical = 0.0;
  bool win_ok = false;
  bool min_ok = false;

  bool passed() const noexcept { return win_ok && min_ok; }
};

/// Honest X ~ Exp(1 - alpha) against an independent Y ~ Exp(alpha + epsilon):
/// Pr[Y < X] = (alpha+eps)/(1+eps) within 3 SE and min(X, Y) ~ Exp(1 + eps)
/// by KS at the 1% level.
ExpRaceReport exp_race_check(double alpha, double epsilon, std::size_t samples,
                                            std::uint64_t seed = kDefaultTestSeed);

}  // namespace cssp
