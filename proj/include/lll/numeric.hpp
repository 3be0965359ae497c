#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>
#include <functional>

namespace lll {

using Rat = boost::multiprecision::cpp_rational;

inline double to_double(const Rat& r) { return r.template convert_to<double>(); }

// Shared tolerances. Probability vectors must sum to 1 within kProbTol;
// float-mode comparisons use kCmpTol.
constexpr double kProbTol = 1e-12;
constexpr double kCmpTol = 1e-9;

enum class NumericMode { Rational, LogDouble };

// Nonnegative reals kept in the log domain. Products of event weights
// shrink geometrically with wdag size, so linear doubles underflow first.
struct LogReal {
  double lg = -std::numeric_limits<double>::infinity();  // natural log; -inf encodes 0

  static LogReal zero() { return LogReal{}; }
  static LogReal one() { return LogReal{0.0}; }
  static LogReal from_linear(double x) {
    if (x <= 0) return zero();
    return LogReal{std::log(x)};
  }
  static LogReal from_log(double l) { return LogReal{l}; }

  bool is_zero() const { return std::isinf(lg) && lg < 0; }
  double linear() const { return is_zero() ? 0.0 : std::exp(lg); }

  LogReal operator*(LogReal o) const {
    if (is_zero() || o.is_zero()) return zero();
    return LogReal{lg + o.lg};
  }
  LogReal& operator*=(LogReal o) { *this = *this * o; return *this; }
  LogReal operator/(LogReal o) const {
    if (is_zero()) return zero();
    return LogReal{lg - o.lg};
  }
  LogReal operator+(LogReal o) const {  // logsumexp
    if (is_zero()) return o;
    if (o.is_zero()) return *this;
    double a = lg, b = o.lg;
    if (a < b) std::swap(a, b);
    return LogReal{a + std::log1p(std::exp(b - a))};
  }
  LogReal& operator+=(LogReal o) { *this = *this + o; return *this; }

  bool operator<(LogReal o) const { return lg < o.lg; }
  bool operator<=(LogReal o) const { return lg <= o.lg; }
  bool operator>=(LogReal o) const { return lg >= o.lg; }
  // Comparison with multiplicative tolerance (log-domain additive kCmpTol).
  bool ge_tol(LogReal o) const {
    if (o.is_zero()) return true;
    if (is_zero()) return false;
    return lg >= o.lg - kCmpTol;
  }
};

// --- deterministic counter-mode PRNG ------------------------------------

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix3(uint64_t a, uint64_t b, uint64_t c) {
  return splitmix64(splitmix64(splitmix64(a) ^ b) ^ c);
}

// Uniform in [0,1), keyed by (seed, i, j). O(1) random access, reproducible.
inline double unit_double(uint64_t seed, uint64_t i, uint64_t j) {
  return double(mix3(seed, i, j) >> 11) * 0x1.0p-53;
}

// --- error taxonomy ------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define LLL_ERROR_TYPE(Name) \
  struct Name : Error { using Error::Error; };

LLL_ERROR_TYPE(MalformedSpec)
LLL_ERROR_TYPE(ConstantEvent)
LLL_ERROR_TYPE(Unsatisfiable)
LLL_ERROR_TYPE(StabExplosion)
LLL_ERROR_TYPE(MissingMapEntry)
LLL_ERROR_TYPE(DegenerateGap)
LLL_ERROR_TYPE(NotAWdag)
LLL_ERROR_TYPE(FamilyExplosion)
LLL_ERROR_TYPE(TableTooShort)
LLL_ERROR_TYPE(TableExhaustedError)
LLL_ERROR_TYPE(NotMaximal)
LLL_ERROR_TYPE(CapacityExplosion)
LLL_ERROR_TYPE(OrderMismatch)
LLL_ERROR_TYPE(UnsupportedForm)
LLL_ERROR_TYPE(NoConvergence)
LLL_ERROR_TYPE(CEStuck)
LLL_ERROR_TYPE(PathExplosion)
LLL_ERROR_TYPE(BMinUnmet)
LLL_ERROR_TYPE(Stalled)
LLL_ERROR_TYPE(CriterionUnmet)

#undef LLL_ERROR_TYPE

// --- tiny worker pool -----------------------------------------------------

// Chunked parallel loop. Deterministic as long as the body only writes to
// disjoint slots; reductions merge chunk results in index order.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t, std::size_t)>& body) {
  if (workers <= 1 || n < 2048) {
    body(0, n);
    return;
  }
  std::size_t chunks = std::min<std::size_t>(workers, (n + 2047) / 2048);
  std::size_t per = (n + chunks - 1) / chunks;
  std::vector<std::thread> ts;
  for (std::size_t c = 0; c < chunks; ++c) {
    std::size_t lo = c * per, hi = std::min(n, lo + per);
    if (lo >= hi) break;
    ts.emplace_back(body, lo, hi);
  }
  for (auto& t : ts) t.join();
}

// FNV-1a, used for input content hashes in reports.
inline uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace lll
