// cssp_lab: simulate, detect, analyze, sweep, verify.
//
// Exit codes: 0 consistent / success, 2 a detection test rejected, 1 error
// (and, for verify, any failed criterion).

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cssp/acceptance.hpp"
#include "cssp/analytics.hpp"
#include "cssp/detection.hpp"
#include "cssp/parallel.hpp"
#include "cssp/protocol.hpp"
#include "cssp/rng.hpp"
#include "cssp/trace_io.hpp"

namespace {

using namespace cssp;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitReject = 2;

struct DetectSettings {
  std::string input;
  std::string test = "all";
  double significance = 0.01;
  std::size_t bootstrap = 1000;
  std::size_t permutations = 10000;
  double delta = 0.0;
  std::string out;
};

struct SweepSettings {
  std::vector<double> alphas{0.1, 0.2, 0.3};
  std::vector<std::size_t> rounds{10000, 100000};
  std::size_t replicates = 10;
  std::string out;
};

std::uint64_t effective_seed(std::uint64_t flag) {
  if (const char* env = std::getenv("CSSP_LAB_SEED")) {
    try {
      return std::stoull(env, nullptr, 0);
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("CSSP_LAB_SEED is not an integer: '") + env + "'");
    }
  }
  return flag;
}

std::string strip_suffix(std::string path) {
  for (const char* ext : {".jsonl", ".csv", ".json"}) {
    const std::string e(ext);
    if (path.size() > e.size() && path.compare(path.size() - e.size(), e.size(), e) == 0)
      return path.substr(0, path.size() - e.size());
  }
  return path;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  return f;
}

double reset_fraction(const Trace& t) {
  std::size_t n = 0;
  for (const auto& r : t.records) n += r.is_reset;
  return t.records.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(t.records.size());
}

int cmd_simulate(const SimConfig& cfg, const std::string& out) {
  const Trace t = run_simulation(cfg);
  const std::string base = strip_suffix(out);
  {
    auto f = open_out(base + ".jsonl");
    write_trace_jsonl(f, t);
  }
  {
    auto f = open_out(base + ".csv");
    write_observer_csv(f, t);
  }
  {
    auto f = open_out(base + ".config.json");
    f << config_to_json(cfg) << '\n';
  }
  const Profitability p = profitability(t, cfg.alpha);
  std::cout << "rounds," << t.records.size() << '\n'
            << "win_fraction," << format_double(p.win_fraction) << '\n'
            << "delta_profit," << format_double(p.delta_profit) << '\n'
            << "reset_fraction," << format_double(reset_fraction(t)) << '\n'
            << "trace," << base << ".jsonl\n"
            << "observer_view," << base << ".csv\n";
  return kExitOk;
}

int cmd_detect(const DetectSettings& d, std::uint64_t seed) {
  const ScoreSeries series = read_series_file(d.input);
  std::vector<DetectionReport> reports;
  const bool all = d.test == "all";
  if (all || d.test == "distribution") reports.push_back(distribution_test(series, d.significance, d.bootstrap, seed));
  if (all || d.test == "correlation") reports.push_back(correlation_test(series, d.significance, d.permutations, seed));
  if (all || d.test == "envelope") reports.push_back(envelope_test(series, d.delta, d.significance));

  bool reject = false;
  for (const auto& r : reports) reject = reject || r.rejected();
  std::string doc;
  if (reports.size() == 1) {
    doc = reports.front().to_json();
  } else {
    nlohmann::ordered_json j;
    j["verdict"] = reject ? "reject" : "consistent";
    j["reports"] = nlohmann::ordered_json::array();
    for (const auto& r : reports) j["reports"].push_back(nlohmann::ordered_json::parse(r.to_json()));
    doc = j.dump();
  }
  if (d.out.empty()) {
    std::cout << doc << '\n';
  } else {
    auto f = open_out(d.out);
    f << doc << '\n';
  }
  return reject ? kExitReject : kExitOk;
}

int cmd_analyze(double alpha, const std::string& out) {
  const MarkovSpec m = markov_chain(alpha);
  const AnalyticDistribution mix = lookahead_mixture(alpha);
  const ExpFit fit = best_exp_fit(mix);
  std::ostringstream summary;
  summary << "key,value\n"
          << "alpha," << format_double(alpha) << '\n'
          << "p_CC," << format_double(m.p_CC) << '\n'
          << "p_CH," << format_double(m.p_CH) << '\n'
          << "p_HC," << format_double(m.p_HC) << '\n'
          << "p_HH," << format_double(m.p_HH) << '\n'
          << "s_C," << format_double(m.s_C) << '\n'
          << "s_H," << format_double(m.s_H) << '\n'
          << "analytic_win_rate," << format_double(analytic_win_rate(alpha)) << '\n'
          << "best_fit_gamma," << format_double(fit.gamma) << '\n'
          << "best_fit_distance," << format_double(fit.sup_distance) << '\n'
          << "truncation_error_bound," << format_double(mix.truncation_error_bound) << '\n';
  std::cout << summary.str();
  if (!out.empty()) {
    const std::string base = strip_suffix(out);
    {
      auto f = open_out(base + "_summary.csv");
      f << summary.str();
    }
    const auto grid = geometric_grid(1e-3, 20.0, 400);
    {
      auto f = open_out(base + "_mixture_cdf.csv");
      write_cdf_table(f, mix, grid);
    }
    const ConditionalCdfs c = conditional_cdfs(alpha);
    auto f = open_out(base + "_conditional_cdfs.csv");
    f << "z,D_CH,D_CC,D_H,D_C,best_fit_exp\n";
    for (double z : grid)
      f << format_double(z) << ',' << format_double(c.d_ch.cdf(z)) << ',' << format_double(c.d_cc.cdf(z)) << ','
        << format_double(c.d_h.cdf(z)) << ',' << format_double(c.d_c.cdf(z)) << ','
        << format_double(exp_cdf(fit.gamma, z)) << '\n';
  }
  return kExitOk;
}

int cmd_sweep(const SimConfig& base, const SweepSettings& sw, const DetectSettings& d) {
  struct Job {
    double alpha;
    std::size_t rounds;
    std::size_t replicate;
  };
  std::vector<Job> jobs;
  for (double a : sw.alphas)
    for (std::size_t r : sw.rounds)
      for (std::size_t k = 0; k < sw.replicates; ++k) jobs.push_back({a, r, k});
  std::vector<std::string> rows(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const Job& j = jobs[i];
    SimConfig c = base;
    c.alpha = j.alpha;
    c.rounds = j.rounds;
    c.burn_in = std::min(base.burn_in, j.rounds / 10);
    c.master_seed = sub_seed(base.master_seed, i);
    const Trace t = run_simulation(c);
    const Profitability p = profitability(t, j.alpha);
    const ScoreSeries s = observer_view(t);
    std::ostringstream row;
    row << format_double(j.alpha) << ',' << j.rounds << ',' << j.replicate << ',' << format_double(p.win_fraction)
        << ',' << format_double(reset_fraction(t));
    if (s.size() >= kMinTestLength) {
      const auto dr = distribution_test(s, d.significance, d.bootstrap);
      const auto cr = correlation_test(s, d.significance, d.permutations);
      const auto er = envelope_test(s, d.delta, d.significance);
      row << ',' << format_double(dr.statistic) << ',' << dr.rejected() << ',' << format_double(cr.statistic) << ','
          << cr.rejected() << ',' << format_double(er.statistic) << ',' << er.rejected();
    } else {
      row << ",,,,,,";
    }
    rows[i] = row.str();
  });
  std::ostringstream all;
  all << "alpha,rounds,replicate,win_fraction,reset_fraction,ks_statistic,distribution_reject,rank_correlation,"
         "correlation_reject,envelope_statistic,envelope_reject\n";
  for (const auto& r : rows) all << r << '\n';
  if (sw.out.empty()) {
    std::cout << all.str();
  } else {
    auto f = open_out(sw.out);
    f << all.str();
  }
  return kExitOk;
}

void add_sim_flags(CLI::App* sub, SimConfig& cfg) {
  sub->add_option("--strategy", cfg.strategy, "honest | silent | one-lookahead")
      ->check(CLI::IsMember({"honest", "silent", "one-lookahead"}));
  sub->add_option("--alpha", cfg.alpha, "adversary stake in (0, 1)");
  sub->add_option("--beta", cfg.beta, "fraction of honest stake visible before broadcasting");
  sub->add_option("--delta", cfg.delta, "online-stake fluctuation half-width in [0, 1)");
  sub->add_option("--rounds", cfg.rounds, "recorded rounds");
  sub->add_option("--burn-in", cfg.burn_in, "rounds discarded before recording");
  sub->add_option("--ladder-depth", cfg.ladder_depth, "minimum ladder prefix when beta = 0");
  sub->add_option("--seed", cfg.master_seed, "master seed (CSSP_LAB_SEED overrides)");
}

void add_detect_flags(CLI::App* sub, DetectSettings& d) {
  sub->add_option("--significance", d.significance, "test level");
  sub->add_option("--bootstrap", d.bootstrap, "bootstrap replicates for the distribution test");
  sub->add_option("--permutations", d.permutations, "permutations for the correlation test");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-selection leader-election lab: simulate, detect, analyze, sweep, verify"};
  app.require_subcommand(1);

  SimConfig cfg;
  std::string sim_out = "trace";
  auto* simulate = app.add_subcommand("simulate", "run a simulation and write JSONL + observer CSV");
  add_sim_flags(simulate, cfg);
  simulate->add_option("--out", sim_out, "output path prefix");

  DetectSettings det;
  std::uint64_t det_seed = kDefaultTestSeed;
  auto* detect = app.add_subcommand("detect", "run detection tests on an observer CSV or JSONL trace");
  detect->add_option("input", det.input, "observer-view CSV or JSONL trace")->required();
  detect->add_option("--test", det.test, "distribution | correlation | envelope | all")
      ->check(CLI::IsMember({"distribution", "correlation", "envelope", "all"}));
  add_detect_flags(detect, det);
  detect->add_option("--delta", det.delta, "envelope half-width");
  detect->add_option("--seed", det_seed, "resampling seed (CSSP_LAB_SEED overrides)");
  detect->add_option("--out", det.out, "report path (default stdout)");

  double an_alpha = 0.3;
  std::string an_out;
  auto* analyze = app.add_subcommand("analyze", "closed-form tables for one-lookahead at beta = 1");
  analyze->add_option("--alpha", an_alpha, "adversary stake in (0, 1)");
  analyze->add_option("--out", an_out, "path prefix for CSV tables");

  SimConfig sweep_cfg;
  sweep_cfg.strategy = "one-lookahead";
  SweepSettings sw;
  DetectSettings sweep_det;
  sweep_det.permutations = 1000;
  auto* sweep = app.add_subcommand("sweep", "replicated simulations + detection over alpha and R");
  add_sim_flags(sweep, sweep_cfg);
  add_detect_flags(sweep, sweep_det);
  sweep->add_option("--alphas", sw.alphas, "alpha values")->delimiter(',');
  sweep->add_option("--rounds-list", sw.rounds, "round counts")->delimiter(',');
  sweep->add_option("--replicates", sw.replicates, "replicates per cell");
  sweep->add_option("--envelope-delta", sweep_det.delta, "envelope half-width");
  sweep->add_option("--out", sw.out, "CSV path (default stdout)");

  AcceptanceOptions acc;
  std::vector<int> only;
  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  verify->add_flag("--quick", acc.quick, "round counts divided by 100");
  verify->add_option("--only", only, "criteria to run")->delimiter(',');
  verify->add_flag("--inject-failure", acc.inject_failure, "tamper with generated traces");
  verify->add_option("--seed", acc.seed, "suite seed (CSSP_LAB_SEED overrides)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*simulate) {
      cfg.master_seed = effective_seed(cfg.master_seed);
      cfg.validate();
      return cmd_simulate(cfg, sim_out);
    }
    if (*detect) return cmd_detect(det, effective_seed(det_seed));
    if (*analyze) return cmd_analyze(an_alpha, an_out);
    if (*sweep) {
      sweep_cfg.master_seed = effective_seed(sweep_cfg.master_seed);
      return cmd_sweep(sweep_cfg, sw, sweep_det);
    }
    if (*verify) {
      acc.seed = effective_seed(acc.seed);
      acc.only.insert(only.begin(), only.end());
      for (int id : acc.only)
        if (id < 1 || id > kCriterionCount) throw std::invalid_argument("--only: no criterion " + std::to_string(id));
      const auto results = run_acceptance(acc, std::cout, &std::cerr);
      for (const auto& r : results)
        if (!r.passed) return kExitError;
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
