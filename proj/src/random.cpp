#include "noisestab/random.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace noisestab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

unsigned worker_count() {
  static const unsigned count = [] {
    if (const char* env = std::getenv("NOISESTAB_THREADS")) {
      try {
        const long v = std::stol(env);
        if (v >= 1) return static_cast<unsigned>(v);
      } catch (...) {
      }
    }
    return std::max(1u, std::thread::hardware_concurrency());
  }();
  return count;
}

}  // namespace noisestab
