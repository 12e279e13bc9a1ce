#include "cssp/analytics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "cssp/core.hpp"

namespace cssp {
namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
}

std::string fmt_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Pieces of the mixture that share the Erlang ladder at z.
struct MixtureParts {
  double stay = 0.0;    // Exp(1) part, unweighted
  double to_h = 0.0;    // sum_{w>=2} a^{w-2}(1-a) (1/w) sum_l Erlang_l
  double in_h = 0.0;    // sum_{w>=2} a^{w-2}(1-a) Exp(1+(w-1)a)
  std::size_t omega = 0;
};

MixtureParts mixture_parts(double alpha, double z, double tol) {
  check_alpha(alpha);
  if (!(z >= 0.0)) throw DomainError("z must be nonnegative");
  MixtureParts p;
  p.omega = omega_max(alpha, tol);
  if (z == 0.0) return p;
  if (std::isinf(z)) {
    p.stay = 1.0;
    p.to_h = p.in_h = -std::expm1(static_cast<double>(p.omega - 1) * std::log(alpha));
    return p;
  }
  p.stay = -std::expm1(-z);
  std::vector<double> erl(p.omega);
  erlang_cdf_ladder(z, erl);
  double prefix = erl[0];
  double weight = 1.0 - alpha;  // a^{w-2}(1-a) at w = 2
  for (std::size_t w = 2; w <= p.omega; ++w) {
    prefix += erl[w - 1];
    p.to_h += weight * prefix / static_cast<double>(w);
    p.in_h += weight * -std::expm1(-(1.0 + static_cast<double>(w - 1) * alpha) * z);
    weight *= alpha;
  }
  return p;
}

}  // namespace

MarkovSpec markov_chain(double alpha) {
  check_alpha(alpha);
  const double a2 = alpha * alpha;
  MarkovSpec m;
  m.p_CC = 1.0 - a2;
  m.p_CH = a2;
  m.p_HC = 1.0;
  m.p_HH = 0.0;
  m.s_C = 1.0 / (1.0 + a2);
  m.s_H = a2 / (1.0 + a2);
  return m;
}

double w_size_pmf(double alpha, std::size_t l) {
  check_alpha(alpha);
  return std::pow(alpha, static_cast<double>(l)) * (1.0 - alpha);
}

std::size_t omega_max(double alpha, double tol) {
  check_alpha(alpha);
  if (!(tol > 0.0 && tol < 1.0)) throw DomainError("tol must lie in (0, 1)");
  const double w = std::ceil(std::log(tol * (1.0 - alpha)) / std::log(alpha));
  return std::max<std::size_t>(2, static_cast<std::size_t>(w));
}

BoundedValue lookahead_mixture_cdf(double alpha, double z, double tol) {
  const MixtureParts p = mixture_parts(alpha, z, tol);
  const double a2 = alpha * alpha;
  BoundedValue out;
  out.value = ((1.0 - a2) * p.stay + a2 * p.to_h + a2 * p.in_h) / (1.0 + a2);
  // Each of the two truncated series drops at most alpha^{omega_max+1} mass.
  out.error_bound = 2.0 * std::pow(alpha, static_cast<double>(p.omega + 1)) / (1.0 + a2);
  out.omega_max = p.omega;
  return out;
}

BoundedValue lookahead_mixture_mass(double alpha, double tol) {
  return lookahead_mixture_cdf(alpha, std::numeric_limits<double>::infinity(), tol);
}

AnalyticDistribution exponential_distribution(double rate) {
  if (!(rate > 0.0)) throw DomainError("rate must be positive");
  return {[rate](double z) { return exp_cdf(rate, z); }, 0.0, "Exp(" + fmt_double(rate) + ")"};
}

AnalyticDistribution lookahead_mixture(double alpha, double tol) {
  const BoundedValue mass = lookahead_mixture_mass(alpha, tol);
  return {[alpha, tol](double z) { return lookahead_mixture_cdf(alpha, z, tol).value; }, mass.error_bound,
          "one-lookahead winning-score mixture, alpha=" + fmt_double(alpha)};
}

ConditionalCdfs conditional_cdfs(double alpha, double tol) {
  check_alpha(alpha);
  const std::size_t w = omega_max(alpha, tol);
  const double bound = std::pow(alpha, static_cast<double>(w - 1));
  const double a2 = alpha * alpha;
  ConditionalCdfs c;
  c.d_ch = {[alpha, tol](double z) { return mixture_parts(alpha, z, tol).to_h; }, bound, "D_CH"};
  c.d_cc = exponential_distribution(1.0);
  c.d_cc.description = "D_CC";
  c.d_h = {[alpha, tol](double z) { return mixture_parts(alpha, z, tol).in_h; }, bound, "D_H"};
  c.d_c = {[alpha, tol, a2](double z) {
             const MixtureParts p = mixture_parts(alpha, z, tol);
             return (1.0 - a2) * p.stay + a2 * p.to_h;
           },
           a2 * bound, "D_C"};
  return c;
}

AnalyticDistribution biased_round_distribution(double alpha, std::size_t omega) {
  check_alpha(alpha);
  if (omega < 2) throw DomainError("biased rounds follow |W| >= 2");
  auto d = exponential_distribution(1.0 + static_cast<double>(omega - 1) * alpha);
  d.description = "D_H | omega=" + std::to_string(omega);
  return d;
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0 && hi > lo) || points < 2) throw DomainError("geometric_grid: need 0 < lo < hi, points >= 2");
  std::vector<double> g(points);
  const double step = std::log(hi / lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) g[i] = lo * std::exp(step * static_cast<double>(i));
  g.back() = hi;
  return g;
}

std::vector<double> default_fit_grid() { return geometric_grid(1e-3, 20.0, 2048); }

ExpFit best_exp_fit(const AnalyticDistribution& dist, const std::vector<double>& z_grid) {
  if (z_grid.empty()) throw DomainError("best_exp_fit: empty grid");
  std::vector<double> f(z_grid.size());
  for (std::size_t i = 0; i < z_grid.size(); ++i) f[i] = dist.cdf(z_grid[i]);
  auto sup = [&](double g) {
    double d = 0.0;
    for (std::size_t i = 0; i < z_grid.size(); ++i) d = std::max(d, std::abs(f[i] + std::expm1(-g * z_grid[i])));
    return d;
  };
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.1, b = 10.0;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = sup(c), fd = sup(d);
  while (b - a > 1e-10) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = sup(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = sup(d);
    }
  }
  const double g = 0.5 * (a + b);
  return {g, sup(g)};
}

ExpFit best_exp_fit(const AnalyticDistribution& dist) { return best_exp_fit(dist, default_fit_grid()); }

double analytic_win_rate(double alpha, double tol) {
  const MarkovSpec m = markov_chain(alpha);
  const std::size_t w_max = omega_max(alpha, tol);
  double biased = 0.0;
  double weight = 1.0 - alpha;
  for (std::size_t w = 2; w <= w_max; ++w) {
    const double wd = static_cast<double>(w);
    biased += weight * alpha * wd / (1.0 + alpha * (wd - 1.0));
    weight *= alpha;
  }
  return m.s_C * alpha + m.s_H * biased;
}

void write_cdf_table(std::ostream& os, const AnalyticDistribution& dist, const std::vector<double>& z_grid) {
  os << "z,cdf\n";
  for (double z : z_grid) os << fmt_double(z) << ',' << fmt_double(dist.cdf(z)) << '\n';
}

}  // namespace cssp
