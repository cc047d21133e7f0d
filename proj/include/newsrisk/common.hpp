#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace newsrisk {

/// Every failure the library reports carries one of these kinds so callers
/// (notably the CLI) can map it to an exit status without parsing messages.
enum class ErrorKind {
  // input validation
  ParseError,
  ConfigError,
  OverlapError,
  MalformedHeader,
  DimensionMismatch,
  FeatureMismatch,
  // domain errors
  UnknownPid,
  MixedKeys,
  BothMissing,
  NoCurrentRating,
  EmptyCorpus,
  DegenerateVocabulary,
  InsufficientCorpus,
  TooFewMinority,
  NonFinite,
  DegenerateData,
  JoinKeyMismatch,
  SingleClass,
  NoPositives,
  Io,
};

const char* to_string(ErrorKind kind);

/// True for kinds that indicate bad user input rather than a failed computation.
bool is_validation_error(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Calendar day (UTC).
class Date {
 public:
  Date() = default;
  explicit Date(std::chrono::sys_days days) : days_(days) {}
  Date(int year, unsigned month, unsigned day);

  /// Parses strict ISO-8601 `YYYY-MM-DD`; throws ParseError otherwise.
  static Date parse(std::string_view text);

  std::string to_string() const;
  int year() const;
  std::chrono::sys_days days() const { return days_; }

  Date plus_days(long n) const { return Date(days_ + std::chrono::days(n)); }
  long days_until(const Date& other) const { return (other.days_ - days_).count(); }

  auto operator<=>(const Date&) const = default;

 private:
  std::chrono::sys_days days_{};
};

/// Identifies one observation row: a company on a day.
struct RowKey {
  std::string pid;
  Date date;

  std::string to_string() const { return pid + "@" + date.to_string(); }
  auto operator<=>(const RowKey&) const = default;
};

struct RowKeyHash {
  std::size_t operator()(const RowKey& key) const noexcept {
    std::size_t h = std::hash<std::string>{}(key.pid);
    return h ^ (static_cast<std::size_t>(key.date.days().time_since_epoch().count()) * 0x9e3779b97f4a7c15ULL);
  }
};

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t mix_seed(std::uint64_t seed, std::string_view stream);

// The distributions below are written out instead of using <random>'s so that
// generated artifacts are identical across standard library implementations.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

double standard_normal(Rng& rng);

/// FNV-1a 64-bit, hex encoded. Used for artifact fingerprints in manifests.
std::string fnv1a_hex(std::string_view bytes);

/// Calls fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). The first exception thrown is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads = 0);

}  // namespace newsrisk
