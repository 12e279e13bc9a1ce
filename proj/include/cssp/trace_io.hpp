#pragma once

// Trace files: JSONL records (one round per line), a JSON sidecar for the
// SimConfig, and the observer-view CSV "round,winning_score".

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "cssp/detection.hpp"
#include "cssp/protocol.hpp"

namespace cssp {

class MalformedInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string to_string(Winner w);
std::string hex64(std::uint64_t v);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

std::string record_to_json(const RoundRecord& r);
RoundRecord record_from_json(const std::string& line);

void write_trace_jsonl(std::ostream& os, const Trace& trace);
/// Records only; the config comes from the sidecar if needed.
std::vector<RoundRecord> read_trace_jsonl(std::istream& is);

std::string config_to_json(const SimConfig& c);
SimConfig config_from_json(const std::string& text);

void write_observer_csv(std::ostream& os, const Trace& trace);
void write_observer_csv(std::ostream& os, const ScoreSeries& series);
ScoreSeries read_observer_csv(std::istream& is);

/// Reads a series from either format, chosen by extension (.jsonl or .csv).
ScoreSeries read_series_file(const std::string& path);

}  // namespace cssp
