#pragma once

#include "tensor.hpp"

#include <boost/random/normal_distribution.hpp>

#include <array>
#include <cstdint>

namespace ssd {

/*
 * xoshiro256** seeded through splitmix64. Streams derived with Split() are
 * a pure function of (seed, stream id), so parallel chains stay reproducible
 * and results do not depend on the standard library's distributions.
 */
class Rng
{
public:
  explicit Rng(std::uint64_t seed);

  Rng split(std::uint64_t stream) const;

  std::uint64_t next();
  // UniformRandomBitGenerator interface.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next(); }

  // Uniform in [0, 1).
  double uniform();
  double normal();
  // Real and imaginary parts each N(0, 1).
  Cx complexNormal();

  void fillNormal(ComplexArray &a);

private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_;
  boost::random::normal_distribution<double> gauss_; // ziggurat
};

ComplexArray NormalArray(Shape const &shape, Rng &rng);

} // namespace ssd
