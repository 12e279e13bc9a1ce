#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cssp/detection.hpp"
#include "cssp/trace_io.hpp"

using namespace cssp;

namespace {

Trace small_trace(const std::string& strategy, double beta = 1.0, std::size_t rounds = 3000) {
  SimConfig c;
  c.strategy = strategy;
  c.beta = beta;
  c.rounds = rounds;
  c.burn_in = 100;
  c.delta = 0.1;
  c.master_seed = 77;
  return run_simulation(c);
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("cssp_test_" + name);
}

}  // namespace

TEST(TraceIo, Formatting) {
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(to_string(Winner::honest_b), "honest_B");
}

TEST(TraceIo, JsonlRoundTrip) {
  for (const char* s : {"one-lookahead", "honest", "silent"}) {
    const Trace t = small_trace(s);
    std::stringstream ss;
    write_trace_jsonl(ss, t);
    const auto back = read_trace_jsonl(ss);
    ASSERT_EQ(back.size(), t.records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      const RoundRecord& a = t.records[i];
      const RoundRecord& b = back[i];
      EXPECT_EQ(a.round, b.round);
      EXPECT_EQ(a.seed.bits, b.seed.bits);
      EXPECT_EQ(a.winning_score.value(), b.winning_score.value());
      EXPECT_EQ(a.winning_credential.bits, b.winning_credential.bits);
      EXPECT_EQ(a.winner, b.winner);
      EXPECT_EQ(a.adversary_broadcast.has_value(), b.adversary_broadcast.has_value());
      if (a.adversary_broadcast) {
        EXPECT_EQ(a.adversary_broadcast->value(), b.adversary_broadcast->value());
      }
      EXPECT_EQ(a.honest_b_score.has_value(), b.honest_b_score.has_value());
      EXPECT_EQ(a.honest_c_score.has_value(), b.honest_c_score.has_value());
      EXPECT_EQ(a.online_stake, b.online_stake);
      EXPECT_EQ(a.markov_state, b.markov_state);
      EXPECT_EQ(a.is_reset, b.is_reset);
      EXPECT_EQ(a.candidates, b.candidates);
      EXPECT_EQ(a.committed, b.committed);
    }
  }
}

TEST(TraceIo, ConfigRoundTrip) {
  SimConfig c;
  c.alpha = 0.27;
  c.beta = 0.4;
  c.rounds = 1234;
  c.burn_in = 56;
  c.delta = 0.05;
  c.strategy = "silent";
  c.ladder_depth = 9;
  c.master_seed = 0xfedcba9876543210ULL;
  const SimConfig d = config_from_json(config_to_json(c));
  EXPECT_EQ(d.alpha, c.alpha);
  EXPECT_EQ(d.beta, c.beta);
  EXPECT_EQ(d.rounds, c.rounds);
  EXPECT_EQ(d.burn_in, c.burn_in);
  EXPECT_EQ(d.delta, c.delta);
  EXPECT_EQ(d.strategy, c.strategy);
  EXPECT_EQ(d.ladder_depth, c.ladder_depth);
  EXPECT_EQ(d.master_seed, c.master_seed);
}

TEST(TraceIo, CsvRoundTrip) {
  const Trace t = small_trace("one-lookahead");
  std::stringstream ss;
  write_observer_csv(ss, t);
  std::string header;
  std::getline(std::stringstream(ss.str()), header);
  EXPECT_EQ(header, "round,winning_score");
  const ScoreSeries s = read_observer_csv(ss);
  EXPECT_EQ(s.scores(), observer_view(t).scores());
}

TEST(TraceIo, FormatsGiveIdenticalDetection) {
  const Trace t = small_trace("one-lookahead", 1.0, 5000);
  const auto jsonl = temp_file("same.jsonl"), csv = temp_file("same.csv");
  {
    std::ofstream a(jsonl), b(csv);
    write_trace_jsonl(a, t);
    write_observer_csv(b, t);
  }
  const ScoreSeries x = read_series_file(jsonl.string()), y = read_series_file(csv.string());
  EXPECT_EQ(x.scores(), y.scores());
  EXPECT_EQ(distribution_test(x, 0.01, 200).to_json(), distribution_test(y, 0.01, 200).to_json());
  EXPECT_EQ(correlation_test(x, 0.01, 200).to_json(), correlation_test(y, 0.01, 200).to_json());
  EXPECT_EQ(envelope_test(x, 0.05).to_json(), envelope_test(y, 0.05).to_json());
  std::filesystem::remove(jsonl);
  std::filesystem::remove(csv);
}

TEST(TraceIo, MalformedInput) {
  auto csv = [](const std::string& text) {
    std::istringstream is(text);
    return read_observer_csv(is);
  };
  EXPECT_THROW(csv(""), MalformedInput);
  EXPECT_THROW(csv("round,score\n0,1.0\n"), MalformedInput);
  EXPECT_THROW(csv("round,winning_score\n0,abc\n"), MalformedInput);
  EXPECT_THROW(csv("round,winning_score\n0,1.0,2.0\n"), MalformedInput);
  EXPECT_EQ(csv("round,winning_score\n0,1.5\n1,0.5\n").size(), 2u);

  EXPECT_THROW(record_from_json("not json"), MalformedInput);
  EXPECT_THROW(record_from_json("{\"round\": 1}"), MalformedInput);
  EXPECT_THROW(config_from_json("[1,2]"), MalformedInput);
  EXPECT_THROW(read_series_file(temp_file("missing.csv").string()), std::runtime_error);
  EXPECT_THROW(read_series_file("trace.txt"), MalformedInput);
}
