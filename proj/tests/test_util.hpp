#pragma once

// Independent helpers for the test oracles. Nothing here calls into the
// library's statistics code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace testutil {

inline std::vector<double> exp_samples(std::size_t n, double rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> d(rate);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

/// Plain two-sided KS distance of a sample against a CDF.
inline double ks(std::vector<double> v, const std::function<double(double)>& cdf) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = cdf(v[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

/// Asymptotic 1% critical value of the simple-null KS distance.
inline double ks_crit_1pct(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

/// 99% DKW half-width.
inline double dkw_99(std::size_t n) { return std::sqrt(std::log(2.0 / 0.01) / (2.0 * n)); }

inline double exp_cdf(double rate, double z) { return 1.0 - std::exp(-rate * z); }

inline double binom_se(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / n); }

}  // namespace testutil
