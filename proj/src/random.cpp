/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "hmcda/random.hpp"

#include <cmath>
#include <numbers>

namespace hmcda {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, Stream stream, std::uint64_t substream) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffU); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  const auto s = static_cast<std::uint64_t>(stream);
  std::seed_seq seq{lo(seed), hi(seed), lo(s), hi(s), lo(substream), hi(substream)};
  return std::mt19937_64(seq);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, Stream stream, std::uint64_t substream)
    : engine_(make_engine(seed, stream, substream)) {}

double RandomStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double RandomStream::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 == 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

Vector RandomStream::normal_vector(Index n) {
  Vector z(n);
  for (Index i = 0; i < n; ++i) z[i] = normal();
  return z;
}

}  // namespace hmcda
