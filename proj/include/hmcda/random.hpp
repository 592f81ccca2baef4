/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

#include "hmcda/state.hpp"

namespace hmcda {

/// Name of the Gaussian sampler compiled into this build; recorded in run
/// metadata so sampled output can be tied to the generator.
inline constexpr std::string_view kGaussianMethod = "box-muller";

/// Named sub-streams. Each consumer draws from its own stream so that, e.g.,
/// adding a jitter draw never shifts the momentum sequence.
enum class Stream : std::uint64_t {
  Momentum = 1,
  Jitter = 2,
  Acceptance = 3,
  ObservationNoise = 4,
  BackgroundPerturbation = 5,
  EnsembleInit = 6,
  EnkfPerturbation = 7,
  General = 8,
};

/**
 * Seeded generator for one (seed, stream, substream) triple.
 *
 * Built on std::mt19937_64 seeded through std::seed_seq, both of which are
 * fully specified by the standard, and converts bits to doubles by hand, so
 * sequences are identical across standard libraries.
 */
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, Stream stream, std::uint64_t substream = 0);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal draw (Box-Muller, second value cached).
  double normal();
  Vector normal_vector(Index n);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace hmcda
