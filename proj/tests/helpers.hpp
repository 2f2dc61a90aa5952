#pragma once

#include "spirit_sde/encoding.hpp"
#include "spirit_sde/error.hpp"
#include "spirit_sde/rng.hpp"
#include "spirit_sde/simulation.hpp"
#include "spirit_sde/spirit.hpp"

#include <catch_amalgamated.hpp>

namespace ssd::test {

inline ComplexArray Random(Shape const &shape, std::uint64_t seed)
{
  Rng rng(seed);
  return NormalArray(shape, rng);
}

// Relative adjoint mismatch |<A x, y> - <x, B y>| / (||x|| ||y||).
template <typename Fwd, typename Adj>
double AdjointGap(Fwd &&fwd, Adj &&adj, ComplexArray const &x, ComplexArray const &y)
{
  Cx const lhs = Inner(fwd(x), y);
  Cx const rhs = Inner(x, adj(y));
  return std::abs(lhs - rhs) / (Norm(x) * Norm(y));
}

// Noiseless desk-scale scene: phantom, coil maps, and fully sampled k-space.
struct Scene
{
  ComplexArray image;
  CoilSensitivities maps;
  ComplexArray coil_images;
  ComplexArray kspace;

  Scene(std::size_t n = 64, std::size_t nc = 8, std::uint64_t seed = 1)
    : image{MakePhantom(PhantomSpec{.rows = n, .cols = n, .kind = PhantomKind::SheppLogan, .seed = seed})}
    , maps{MakeCoilMaps(n, n, nc, seed + 100)}
    , coil_images{CoilExpand(image, maps)}
    , kspace{FFT2c(coil_images)}
  {
  }
};

} // namespace ssd::test
