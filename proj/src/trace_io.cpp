#include "cssp/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace cssp {
namespace {

using json = nlohmann::ordered_json;

json opt_score(const std::optional<Score>& s) { return s ? json(s->value()) : json(nullptr); }

std::optional<Score> read_opt_score(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return Score(j.at(key).get<double>());
}

std::uint64_t parse_hex64(const std::string& s) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw MalformedInput("bad hex value '" + s + "'");
  return v;
}

Winner winner_from_string(const std::string& s) {
  if (s == "adversary") return Winner::adversary;
  if (s == "honest_B") return Winner::honest_b;
  if (s == "honest_C") return Winner::honest_c;
  if (s == "none") return Winner::none;
  throw MalformedInput("unknown winner '" + s + "'");
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string to_string(Winner w) {
  switch (w) {
    case Winner::adversary: return "adversary";
    case Winner::honest_b: return "honest_B";
    case Winner::honest_c: return "honest_C";
    case Winner::none: return "none";
  }
  return "none";
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  auto res = std::to_chars(buf, buf + sizeof buf, v, 16);
  const std::string digits(buf, res.ptr);
  return std::string(16 - digits.size(), '0') + digits;
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string record_to_json(const RoundRecord& r) {
  json j;
  j["round"] = r.round;
  j["seed_bits"] = hex64(r.seed.bits);
  j["winning_score"] = r.winning_score.value();
  j["winning_credential"] = hex64(r.winning_credential.bits);
  j["winner"] = to_string(r.winner);
  j["adversary_broadcast"] = opt_score(r.adversary_broadcast);
  j["honest_scores"] = {{"B", opt_score(r.honest_b_score)}, {"C", opt_score(r.honest_c_score)}};
  j["online_stake"] = r.online_stake;
  switch (r.markov_state) {
    case MarkovState::fresh_seed: j["markov_state"] = "C"; break;
    case MarkovState::biased_seed: j["markov_state"] = "H"; break;
    case MarkovState::not_applicable: j["markov_state"] = nullptr; break;
  }
  j["is_reset"] = r.is_reset;
  j["candidates"] = r.candidates;
  j["committed"] = r.committed;
  return j.dump();
}

RoundRecord record_from_json(const std::string& line) {
  try {
    const json j = json::parse(line);
    RoundRecord r;
    r.round = j.at("round").get<std::size_t>();
    r.seed = Seed{parse_hex64(j.at("seed_bits").get<std::string>())};
    r.winning_score = Score(j.at("winning_score").get<double>());
    r.winning_credential = Credential{parse_hex64(j.at("winning_credential").get<std::string>())};
    r.winner = winner_from_string(j.at("winner").get<std::string>());
    r.adversary_broadcast = read_opt_score(j, "adversary_broadcast");
    const json& hs = j.at("honest_scores");
    r.honest_b_score = read_opt_score(hs, "B");
    r.honest_c_score = read_opt_score(hs, "C");
    r.online_stake = j.at("online_stake").get<double>();
    const json& ms = j.at("markov_state");
    if (ms.is_null())
      r.markov_state = MarkovState::not_applicable;
    else if (ms == "C")
      r.markov_state = MarkovState::fresh_seed;
    else if (ms == "H")
      r.markov_state = MarkovState::biased_seed;
    else
      throw MalformedInput("unknown markov_state");
    r.is_reset = j.at("is_reset").get<bool>();
    r.candidates = j.value("candidates", std::size_t{0});
    r.committed = j.value("committed", false);
    return r;
  } catch (const json::exception& e) {
    throw MalformedInput(std::string("malformed trace record: ") + e.what());
  } catch (const std::domain_error& e) {
    throw MalformedInput(std::string("malformed trace record: ") + e.what());
  }
}

void write_trace_jsonl(std::ostream& os, const Trace& trace) {
  for (const auto& r : trace.records) os << record_to_json(r) << '\n';
}

std::vector<RoundRecord> read_trace_jsonl(std::istream& is) {
  std::vector<RoundRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    out.push_back(record_from_json(line));
  }
  return out;
}

std::string config_to_json(const SimConfig& c) {
  json j;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["rounds"] = c.rounds;
  j["burn_in"] = c.burn_in;
  j["delta"] = c.delta;
  j["strategy"] = c.strategy;
  j["ladder_depth"] = c.ladder_depth;
  j["master_seed"] = c.master_seed;
  return j.dump(2);
}

SimConfig config_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    SimConfig c;
    c.alpha = j.at("alpha").get<double>();
    c.beta = j.at("beta").get<double>();
    c.rounds = j.at("rounds").get<std::size_t>();
    c.burn_in = j.at("burn_in").get<std::size_t>();
    c.delta = j.at("delta").get<double>();
    c.strategy = j.at("strategy").get<std::string>();
    c.ladder_depth = j.at("ladder_depth").get<std::size_t>();
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    return c;
  } catch (const json::exception& e) {
    throw MalformedInput(std::string("malformed config: ") + e.what());
  }
}

void write_observer_csv(std::ostream& os, const Trace& trace) {
  os << "round,winning_score\n";
  for (const auto& r : trace.records) os << r.round << ',' << format_double(r.winning_score.value()) << '\n';
}

void write_observer_csv(std::ostream& os, const ScoreSeries& series) {
  os << "round,winning_score\n";
  for (std::size_t i = 0; i < series.size(); ++i) os << i << ',' << format_double(series.scores()[i]) << '\n';
}

ScoreSeries read_observer_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != "round,winning_score")
    throw MalformedInput("observer CSV must start with header 'round,winning_score'");
  std::vector<double> scores;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto comma = t.find(',');
    if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos)
      throw MalformedInput("line " + std::to_string(lineno) + ": expected two columns");
    double v = 0.0;
    const char* b = t.data() + comma + 1;
    const char* e = t.data() + t.size();
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e)
      throw MalformedInput("line " + std::to_string(lineno) + ": bad winning_score");
    scores.push_back(v);
  }
  try {
    return ScoreSeries(std::move(scores));
  } catch (const std::domain_error& e) {
    throw MalformedInput(e.what());
  }
}

ScoreSeries read_series_file(const std::string& path) {
  if (!ends_with(path, ".jsonl") && !ends_with(path, ".csv"))
    throw MalformedInput("'" + path + "': expected a .jsonl trace or .csv observer view");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  if (ends_with(path, ".jsonl")) {
    std::vector<double> s;
    for (const auto& r : read_trace_jsonl(in)) s.push_back(r.winning_score.value());
    return ScoreSeries(std::move(s));
  }
  return read_observer_csv(in);
}

}  // namespace cssp
