// Deterministic random streams.
//
// RngStream is a counter-based generator (Philox4x32-10) keyed by a 64-bit
// seed, with a 64-bit stream id occupying the upper half of the counter.
// Every (seed, stream id) pair yields the same sequence on every platform,
// and distinct stream ids never share a counter value.
//
// Normal variates use the Marsaglia polar method; each accepted pair yields
// two draws, the second of which is cached in the stream.
#ifndef HZO_RNG_HPP
#define HZO_RNG_HPP

#include "hzo/core.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace hzo {

/// Philox4x32 with 10 rounds. Pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, bound), unbiased. bound must be positive.
  std::uint64_t below(std::uint64_t bound);
  double gaussian();

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  std::optional<double> spare_normal_;
};

/// dim i.i.d. standard normal draws.
template <typename Scalar = double>
VectorX<Scalar> sample_gaussian(RngStream& rng, Index dim) {
  if (dim < 1) {
    throw DimensionError("sample_gaussian: dim must be >= 1");
  }
  VectorX<Scalar> v(dim);
  for (Index k = 0; k < dim; ++k) {
    v[k] = static_cast<Scalar>(rng.gaussian());
  }
  return v;
}

/// Uniform direction on the unit sphere in R^dim (normalized Gaussian draw).
template <typename Scalar = double>
VectorX<Scalar> sample_unit_sphere(RngStream& rng, Index dim) {
  if (dim < 1) {
    throw DimensionError("sample_unit_sphere: dim must be >= 1");
  }
  for (;;) {
    VectorX<double> g = sample_gaussian<double>(rng, dim);
    const double norm = g.norm();
    if (norm > 0.0) {
      return (g / norm).template cast<Scalar>();
    }
  }
}

/// Uniformly random permutation of {0, ..., n-1} (Fisher-Yates).
std::vector<Index> shuffle_permutation(RngStream& rng, Index n);

}  // namespace hzo

#endif  // HZO_RNG_HPP
