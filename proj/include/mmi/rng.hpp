#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace mmi {

using Engine = std::mt19937_64;

/// Stream domains. Every random quantity in the library is drawn from
/// stream(master_seed, domain, index) so results never depend on the order
/// in which replicates, repetitions or grid points are scheduled.
enum class StreamDomain : std::uint64_t {
  Search = 1,
  Bootstrap = 2,
  Wbar = 3,
  KappaScan = 4,
  Data = 5,
  Repetition = 6,
  MonteCarlo = 7,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// seed' = splitmix(splitmix(master + domain * golden) ^ splitmix(index)).
constexpr std::uint64_t derive_seed(std::uint64_t master, StreamDomain domain,
                                    std::uint64_t index = 0) noexcept {
  const std::uint64_t base =
      splitmix64(master + static_cast<std::uint64_t>(domain) * 0x9e3779b97f4a7c15ULL);
  return splitmix64(base ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Engine make_stream(std::uint64_t master, StreamDomain domain, std::uint64_t index = 0) {
  return Engine(derive_seed(master, domain, index));
}

template <typename Derived>
void fill_standard_normal(Engine& engine, Eigen::DenseBase<Derived>& out) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = normal(engine);
}

template <typename Derived>
void fill_standard_normal(Engine& engine, Eigen::DenseBase<Derived>&& out) {
  fill_standard_normal(engine, out);
}

/// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace mmi
