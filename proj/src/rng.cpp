#include "spirit_sde/rng.hpp"

#include <cmath>

namespace ssd {

namespace {

std::uint64_t SplitMix(std::uint64_t &x)
{
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t Rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

} // namespace

Rng::Rng(std::uint64_t seed)
  : seed_{seed}
{
  std::uint64_t x = seed;
  for (auto &w : s_) {
    w = SplitMix(x);
  }
}

Rng Rng::split(std::uint64_t stream) const
{
  std::uint64_t x = seed_ ^ Rotl(stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL, 17);
  return Rng(SplitMix(x));
}

std::uint64_t Rng::next()
{
  std::uint64_t const result = Rotl(s_[1] * 5, 7) * 9;
  std::uint64_t const t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = Rotl(s_[3], 45);
  return result;
}

double Rng::uniform()
{
  return double(next() >> 11) * 0x1.0p-53;
}

double Rng::normal()
{
  return gauss_(*this);
}

Cx Rng::complexNormal()
{
  double const re = normal();
  double const im = normal();
  return {re, im};
}

void Rng::fillNormal(ComplexArray &a)
{
  for (auto &v : a.data()) {
    v = complexNormal();
  }
}

ComplexArray NormalArray(Shape const &shape, Rng &rng)
{
  ComplexArray a(shape);
  rng.fillNormal(a);
  return a;
}

} // namespace ssd
