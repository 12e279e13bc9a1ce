#include "cssp/core.hpp"

#include <sodium.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <mutex>
#include <string>

namespace cssp {
namespace {

void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
  });
}

void store_le64(std::uint8_t* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint64_t load_le64(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | in[i];
  return v;
}

}  // namespace

StakeFraction::StakeFraction(double value) : value_(value) {
  if (!(value > 0.0) || !(value <= kMax))
    throw DomainError("stake fraction must lie in (0, 2], got " + std::to_string(value));
}

Score::Score(double value) : value_(value) {
  if (!(value >= 0.0) || !std::isfinite(value))
    throw DomainError("score must be finite and nonnegative, got " + std::to_string(value));
}

UnitValue::UnitValue(double value) : value_(value) {
  if (!(value > 0.0 && value < 1.0))
    throw DomainError("unit value must lie in (0, 1), got " + std::to_string(value));
}

double unit_from_bits(std::uint64_t bits) noexcept {
  constexpr double kScale = 0x1.0p-52;
  return (static_cast<double>(bits >> 12) + 0.5) * kScale;
}

AccountKey::AccountKey(const std::array<std::uint8_t, 32>& bytes) : bytes_(bytes) {
  ensure_sodium();
  static_assert(crypto_shorthash_KEYBYTES == 16);
  crypto_generichash(prf_key_.data(), prf_key_.size(), bytes_.data(), bytes_.size(), nullptr, 0);
}

AccountKey AccountKey::derive(std::uint64_t master_seed, std::string_view label) {
  ensure_sodium();
  std::array<std::uint8_t, 8> seed_bytes{};
  store_le64(seed_bytes.data(), master_seed);
  std::array<std::uint8_t, 32> out{};
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, out.size());
  crypto_generichash_update(&st, seed_bytes.data(), seed_bytes.size());
  crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(label.data()), label.size());
  crypto_generichash_final(&st, out.data(), out.size());
  return AccountKey(out);
}

Score score_of(UnitValue credential, StakeFraction stake) {
  return Score(-std::log(credential.value()) / stake.value());
}

double exp_cdf(double rate, double z) {
  if (!(rate > 0.0)) throw DomainError("exp_cdf: rate must be positive");
  if (!(z >= 0.0)) throw DomainError("exp_cdf: z must be nonnegative");
  return -std::expm1(-rate * z);
}

double erlang_cdf(int shape, double rate, double z) {
  if (shape < 1) throw DomainError("erlang_cdf: shape must be >= 1");
  if (!(rate > 0.0)) throw DomainError("erlang_cdf: rate must be positive");
  if (!(z >= 0.0)) throw DomainError("erlang_cdf: z must be nonnegative");
  const double x = rate * z;
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double k = shape;
  if (x < k + 1.0) {
    // Lower tail directly: e^{-x} sum_{j>=k} x^j / j!.
    double term = std::exp(-x + k * std::log(x) - std::lgamma(k + 1.0));
    double sum = term;
    for (int j = shape + 1; j < shape + 2000; ++j) {
      term *= x / j;
      sum += term;
      if (term < sum * 1e-17) break;
    }
    return std::min(sum, 1.0);
  }
  // Upper tail: e^{-x} sum_{j<k} x^j / j!, accumulated from the top term down.
  double term = std::exp(-x + (k - 1.0) * std::log(x) - std::lgamma(k));
  double sum = 0.0;
  for (int j = shape - 1; j >= 0; --j) {
    sum += term;
    if (j > 0) term *= j / x;
  }
  return std::max(0.0, 1.0 - sum);
}

void erlang_cdf_ladder(double x, std::vector<double>& out) {
  if (out.empty()) return;
  if (!(x > 0.0)) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double head = std::exp(-x);
  double term = head;  // e^{-x} x^{l-1} / (l-1)!
  double cdf = -std::expm1(-x);
  out[0] = cdf;
  for (std::size_t l = 1; l < out.size(); ++l) {
    term *= x / static_cast<double>(l);
    cdf -= term;
    out[l] = cdf > 0.0 ? cdf : 0.0;
  }
}

double prob_first_smaller(double rate_a, double rate_b) {
  if (!(rate_a > 0.0) || !(rate_b > 0.0)) throw DomainError("prob_first_smaller: rates must be positive");
  return rate_a / (rate_a + rate_b);
}

Credential prf_uniform(const AccountKey& key, Seed seed, std::uint64_t stream) {
  std::array<std::uint8_t, 16> msg{};
  store_le64(msg.data(), seed.bits);
  store_le64(msg.data() + 8, stream);
  std::array<std::uint8_t, crypto_shorthash_BYTES> out{};
  crypto_shorthash(out.data(), msg.data(), msg.size(), key.prf_key().data());
  return Credential{load_le64(out.data())};
}

ScoreLadder ScoreLadder::from_entries(Seed seed, StakeFraction rate, std::vector<LadderEntry> entries) {
  for (std::size_t i = 1; i < entries.size(); ++i)
    if (!(entries[i - 1].score < entries[i].score)) throw DomainError("ladder scores must be strictly increasing");
  ScoreLadder ladder(seed, rate);
  ladder.entries_ = std::move(entries);
  return ladder;
}

void ScoreLadder::extend(const AccountKey& key, std::size_t count) {
  if (count <= entries_.size()) return;
  if (entries_.empty()) entries_.reserve(count);
  double last = entries_.empty() ? 0.0 : entries_.back().score.value();
  while (entries_.size() < count) {
    const Credential cred = prf_uniform(key, seed_, entries_.size());
    last += score_of(cred.value(), rate_).value();
    entries_.push_back({Score(last), cred});
  }
}

void ScoreLadder::extend_until(const AccountKey& key, double bound, std::size_t cap) {
  while (entries_.size() < cap && (entries_.empty() || entries_.back().score.value() < bound))
    extend(key, entries_.size() + 1);
}

ScoreLadder score_ladder(const AccountKey& key, Seed seed, StakeFraction stake, std::size_t count) {
  if (count == 0) throw DomainError("score_ladder: count must be >= 1");
  ScoreLadder ladder(seed, stake);
  ladder.extend(key, count);
  return ladder;
}

double lookahead_dominance_window(double alpha, double beta) {
  const double c = (1.0 - beta) * (1.0 - alpha);
  if (c <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log(2.0) / c;
}

}  // namespace cssp
