#include "urllc/common.hpp"

namespace urllc {

namespace {

std::atomic<unsigned> g_workers{0};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t split_seed(std::uint64_t seed, std::string_view label,
                         std::uint64_t index) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ fnv1a64(label));
  return splitmix64(s ^ splitmix64(index));
}

void set_worker_count(unsigned workers) { g_workers = workers; }

unsigned worker_count() {
  unsigned w = g_workers;
  if (w == 0) w = std::max(1u, std::thread::hardware_concurrency());
  return w;
}

}  // namespace urllc
