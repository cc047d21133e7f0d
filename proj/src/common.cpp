#include "newsrisk/common.hpp"

#include <cmath>
#include <cstdio>
#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>
#include <vector>

namespace newsrisk {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::OverlapError: return "OverlapError";
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::FeatureMismatch: return "FeatureMismatch";
    case ErrorKind::UnknownPid: return "UnknownPid";
    case ErrorKind::MixedKeys: return "MixedKeys";
    case ErrorKind::BothMissing: return "BothMissing";
    case ErrorKind::NoCurrentRating: return "NoCurrentRating";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::DegenerateVocabulary: return "DegenerateVocabulary";
    case ErrorKind::InsufficientCorpus: return "InsufficientCorpus";
    case ErrorKind::TooFewMinority: return "TooFewMinority";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::DegenerateData: return "DegenerateData";
    case ErrorKind::JoinKeyMismatch: return "JoinKeyMismatch";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::NoPositives: return "NoPositives";
    case ErrorKind::Io: return "IoError";
  }
  return "Error";
}

bool is_validation_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError:
    case ErrorKind::ConfigError:
    case ErrorKind::OverlapError:
    case ErrorKind::MalformedHeader:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::FeatureMismatch:
    case ErrorKind::Io:
      return true;
    default:
      return false;
  }
}

Date::Date(int year, unsigned month, unsigned day) {
  std::chrono::year_month_day ymd{std::chrono::year(year), std::chrono::month(month), std::chrono::day(day)};
  if (!ymd.ok()) throw Error(ErrorKind::ParseError, "invalid calendar date");
  days_ = std::chrono::sys_days(ymd);
}

Date Date::parse(std::string_view text) {
  auto digits = [&](std::size_t from, std::size_t count) {
    int value = 0;
    for (std::size_t i = from; i < from + count; ++i) {
      char c = text[i];
      if (c < '0' || c > '9') throw Error(ErrorKind::ParseError, "bad date '" + std::string(text) + "'");
      value = value * 10 + (c - '0');
    }
    return value;
  };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    throw Error(ErrorKind::ParseError, "bad date '" + std::string(text) + "'");
  int y = digits(0, 4);
  int m = digits(5, 2);
  int d = digits(8, 2);
  std::chrono::year_month_day ymd{std::chrono::year(y), std::chrono::month(static_cast<unsigned>(m)),
                                  std::chrono::day(static_cast<unsigned>(d))};
  if (!ymd.ok()) throw Error(ErrorKind::ParseError, "bad date '" + std::string(text) + "'");
  return Date(std::chrono::sys_days(ymd));
}

std::string Date::to_string() const {
  std::chrono::year_month_day ymd{days_};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

int Date::year() const { return static_cast<int>(std::chrono::year_month_day{days_}.year()); }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::string_view stream) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix_seed(seed, h);
}

double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  double u2 = uniform01(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  std::size_t workers = std::min<std::size_t>(threads, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n && !failed; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace newsrisk
