#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string_view>
#include <thread>
#include <vector>

namespace urllc {

using Rng = std::mt19937_64;

/// Raised when a queue or policy cannot meet the stability / delay constraints.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed configuration or input files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Seed fan-out: one 64-bit seed plus a label and an index yield an
// independent stream.  The mapping is splitmix64 over (seed, fnv1a(label),
// index) and is part of the reproducibility contract.
std::uint64_t split_seed(std::uint64_t seed, std::string_view label,
                         std::uint64_t index = 0);

// Uniform draw on [0,1) with 53 random bits.
inline double uniform01(Rng& rng) { return double(rng() >> 11) * 0x1.0p-53; }

inline Rng make_stream(std::uint64_t seed, std::string_view label,
                       std::uint64_t index = 0) {
  return Rng(split_seed(seed, label, index));
}

std::uint64_t fnv1a64(std::string_view bytes);

// Worker count used by parallel_for.  0 means hardware concurrency.
void set_worker_count(unsigned workers);
unsigned worker_count();

// Runs fn(i) for i in [0, n).  Callers write results by index so the
// outcome does not depend on the number of workers.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace urllc
