#include "daf/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace daf {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform() {
  // 53 mantissa bits -> [0, 1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int n) {
  if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be > 0");
  return static_cast<int>((static_cast<unsigned __int128>(next_u64()) *
                           static_cast<unsigned __int128>(n)) >>
                          64);
}

double Rng::normal() {
  double u1 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t hash_bytes(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t sub_seed(std::uint64_t master, std::string_view purpose) {
  // FNV-1a over the label, then one splitmix round against the master.
  std::uint64_t state = master ^ hash_bytes(purpose.data(), purpose.size());
  return splitmix64(state);
}

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t salt) {
  std::uint64_t state = master ^ (salt + 0x9e3779b97f4a7c15ULL);
  return splitmix64(state);
}

}  // namespace daf
