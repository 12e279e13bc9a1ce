#pragma once

// Closed-form side of the one-lookahead game at beta = 1: the two-state chain
// over fresh/biased seeds, the law of |W|, the stationary winning-score
// mixture and its conditional components, and exponential best fits.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace cssp {

inline constexpr double kDefaultSeriesTol = 1e-10;

struct MarkovSpec {
  double p_CC = 0.0;
  double p_CH = 0.0;
  double p_HC = 0.0;
  double p_HH = 0.0;
  double s_C = 0.0;
  double s_H = 0.0;
};

MarkovSpec markov_chain(double alpha);

/// Pr[|W| = l] = alpha^l (1 - alpha).
double w_size_pmf(double alpha, std::size_t l);

/// Smallest truncation point with alpha^omega_max <= tol (1 - alpha), so every
/// dropped geometric tail sum_{omega > omega_max} alpha^omega (1-alpha) is < tol.
std::size_t omega_max(double alpha, double tol);

struct BoundedValue {
  double value = 0.0;
  double error_bound = 0.0;
  std::size_t omega_max = 0;
};

/// Stationary CDF of the winning score under one-lookahead at beta = 1,
/// evaluated component by component:
///   (1-a^2) Exp(1)
/// + sum_{w>=2} a^w (1-a) (1/w) sum_{l<=w} Erlang_l(1)
/// + sum_{w>=2} a^w (1-a) Exp(1 + (w-1) a),
/// all over (1 + a^2).
BoundedValue lookahead_mixture_cdf(double alpha, double z, double tol = kDefaultSeriesTol);

/// Total weight of the truncated mixture (should be 1 up to the error bound).
BoundedValue lookahead_mixture_mass(double alpha, double tol = kDefaultSeriesTol);

struct AnalyticDistribution {
  std::function<double(double)> cdf;
  double truncation_error_bound = 0.0;
  std::string description;
};

AnalyticDistribution exponential_distribution(double rate);
AnalyticDistribution lookahead_mixture(double alpha, double tol = kDefaultSeriesTol);

/// Winning-score laws conditioned on the chain transition: C->H, C->C, H
/// (averaged over the previous |W|), and C = (1-a^2) D_CC + a^2 D_CH.
struct ConditionalCdfs {
  AnalyticDistribution d_ch;
  AnalyticDistribution d_cc;
  AnalyticDistribution d_h;
  AnalyticDistribution d_c;
};

ConditionalCdfs conditional_cdfs(double alpha, double tol = kDefaultSeriesTol);

/// The H-round winning score when the previous round had |W| = omega.
AnalyticDistribution biased_round_distribution(double alpha, std::size_t omega);

struct ExpFit {
  double gamma = 0.0;
  double sup_distance = 0.0;
};

/// 2048 geometric points on [1e-3, 20].
std::vector<double> default_fit_grid();
std::vector<double> geometric_grid(double lo, double hi, std::size_t points);

/// Minimises sup_z |F(z) - (1 - e^{-gamma z})| over gamma in [0.1, 10] by
/// golden-section search.
ExpFit best_exp_fit(const AnalyticDistribution& dist, const std::vector<double>& z_grid);
ExpFit best_exp_fit(const AnalyticDistribution& dist);

/// Stationary adversary win rate of one-lookahead at beta = 1.
double analytic_win_rate(double alpha, double tol = 1e-12);

/// Writes "z,cdf" rows.
void write_cdf_table(std::ostream& os, const AnalyticDistribution& dist, const std::vector<double>& z_grid);

}  // namespace cssp
