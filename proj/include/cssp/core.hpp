#pragma once

// Numeric and sampling primitives shared by every other module: strong types
// for stakes, scores and credentials, the exponential/Erlang kernels, a keyed
// pseudorandom function standing in for each account's VRF, and the ladder of
// order-statistic scores held by an adversary that splits its stake across
// arbitrarily many accounts.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace cssp {

/// Raised when an argument lies outside the domain of a numeric primitive.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a caller breaks an interface contract (e.g. a strategy returns
/// a broadcast that is not on its own ladder).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Positive stake weight or exponential rate. Totals may exceed one when the
/// online stake fluctuates, so the upper bound is 2.
class StakeFraction {
 public:
  static constexpr double kMax = 2.0;

  explicit StakeFraction(double value);
  double value() const noexcept { return value_; }

  auto operator<=>(const StakeFraction&) const = default;

 private:
  double value_;
};

/// Nonnegative finite score on the exponential scale.
class Score {
 public:
  constexpr Score() = default;
  explicit Score(double value);
  double value() const noexcept { return value_; }

  auto operator<=>(const Score&) const = default;

 private:
  double value_ = 0.0;
};

/// Real number in the open interval (0, 1).
class UnitValue {
 public:
  explicit UnitValue(double value);
  double value() const noexcept { return value_; }

  auto operator<=>(const UnitValue&) const = default;

 private:
  double value_;
};

/// Maps 64 random bits into (0, 1) as (m + 0.5) / 2^52 with m the top 52
/// bits. Every result is exactly representable, the smallest is 2^-53 and the
/// largest 1 - 2^-53, so -ln of the result is finite and strictly positive.
double unit_from_bits(std::uint64_t bits) noexcept;

/// A VRF output. The 64-bit pattern is the identity; the unit value is derived
/// from it. Seeds are credentials (the leader's credential seeds the next
/// round), so equality is bit-pattern equality.
struct Credential {
  std::uint64_t bits = 0;

  UnitValue value() const { return UnitValue(unit_from_bits(bits)); }
  bool operator==(const Credential&) const = default;
};

using Seed = Credential;

/// Opaque 256-bit account identifier (the secret key of a simulated VRF).
class AccountKey {
 public:
  explicit AccountKey(const std::array<std::uint8_t, 32>& bytes);

  /// Deterministic key for a labelled account under a master seed.
  static AccountKey derive(std::uint64_t master_seed, std::string_view label);

  const std::array<std::uint8_t, 32>& bytes() const noexcept { return bytes_; }
  bool operator==(const AccountKey& other) const noexcept { return bytes_ == other.bytes_; }

  // Internal: 128-bit key schedule for the keyed hash.
  const std::array<std::uint8_t, 16>& prf_key() const noexcept { return prf_key_; }

 private:
  std::array<std::uint8_t, 32> bytes_;
  std::array<std::uint8_t, 16> prf_key_;
};

// -- Scoring and distribution kernels -------------------------------------

/// -ln(credential) / stake. Strictly decreasing in the credential.
Score score_of(UnitValue credential, StakeFraction stake);

/// 1 - e^{-rate z}.
double exp_cdf(double rate, double z);

/// CDF at z of the sum of `shape` i.i.d. Exp(rate) variables.
double erlang_cdf(int shape, double rate, double z);

/// Fills out[l-1] = P[Erlang(l, 1) <= x] for l = 1..out.size() in one pass.
void erlang_cdf_ladder(double x, std::vector<double>& out);

/// Probability that an Exp(rate_a) draw is below an independent Exp(rate_b).
double prob_first_smaller(double rate_a, double rate_b);

// -- Simulated VRF and the adversary's ladder ------------------------------

/// Keyed pseudorandom uniform for (key, seed). `stream` selects one of
/// independent outputs for the same pair; stream 0 is the account's credential.
Credential prf_uniform(const AccountKey& key, Seed seed, std::uint64_t stream = 0);

struct LadderEntry {
  Score score;
  Credential credential;
};

/// The first order statistics of the scores of an adversary whose stake is
/// split across infinitely many accounts. Entry i is entry i-1 plus an
/// independent Exp(rate) spacing drawn from stream i of the PRF, so any
/// prefix is stable under extension.
class ScoreLadder {
 public:
  ScoreLadder(Seed seed, StakeFraction rate) : seed_(seed), rate_(rate) {}

  /// Wraps precomputed entries (e.g. a scripted oracle). Throws DomainError
  /// unless scores are strictly increasing.
  static ScoreLadder from_entries(Seed seed, StakeFraction rate, std::vector<LadderEntry> entries);

  Seed seed() const noexcept { return seed_; }
  StakeFraction rate() const noexcept { return rate_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const LadderEntry& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<LadderEntry>& entries() const noexcept { return entries_; }

  /// Appends entries drawn from `key` until size() == count.
  void extend(const AccountKey& key, std::size_t count);

  /// Appends entries until the last one is >= bound or size() reaches cap.
  void extend_until(const AccountKey& key, double bound, std::size_t cap);

 private:
  Seed seed_;
  StakeFraction rate_;
  std::vector<LadderEntry> entries_;
};

ScoreLadder score_ladder(const AccountKey& key, Seed seed, StakeFraction stake, std::size_t count);

/// Score gap beyond the ladder minimum past which no entry can maximise the
/// one-round-lookahead objective: an entry with score s has objective at most
/// 2 e^{-c s}, while the minimum scores at least e^{-c s_0}, with
/// c = (1 - beta)(1 - alpha). Infinite when c == 0.
double lookahead_dominance_window(double alpha, double beta);

}  // namespace cssp
