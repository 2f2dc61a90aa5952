#pragma once

#include "encoding.hpp"

#include <cstdint>
#include <string>

namespace ssd {

enum struct PhantomKind
{
  SheppLogan,
  SmoothBlobs
};

enum struct MaskPattern
{
  UniformCartesian,
  VariableDensity
};

PhantomKind ParsePhantomKind(std::string const &s);
MaskPattern ParseMaskPattern(std::string const &s);
std::string ToString(PhantomKind k);
std::string ToString(MaskPattern p);

struct PhantomSpec
{
  std::size_t rows = 64, cols = 64;
  PhantomKind kind = PhantomKind::SheppLogan;
  std::uint64_t seed = 0;
};

struct MaskSpec
{
  MaskPattern pattern = MaskPattern::VariableDensity;
  double acceleration = 4.0;
  std::size_t acs_rows = 16, acs_cols = 16;
  std::uint64_t seed = 0;
  double density_exponent = 2.0;
};

// Magnitude in [0, 1] with max exactly 1, times a smooth seed-dependent phase.
ComplexArray MakePhantom(PhantomSpec const &spec);

CoilSensitivities MakeCoilMaps(std::size_t rows, std::size_t cols, std::size_t nc, std::uint64_t seed);

// Width x width moving average of each map (over in-image pixels only), then renormalized.
CoilSensitivities BoxSmoothMaps(CoilSensitivities const &S, std::size_t width);

// Phase-encode lines run along the row axis; ACS is always fully sampled.
SamplingMask MakeMask(std::size_t rows, std::size_t cols, MaskSpec const &spec);

// y = M (F S x + n), n complex Gaussian with std noise_std per real/imag component.
MeasuredData SynthesizeMeasurement(
  ComplexArray const &x, CoilSensitivities const &S, SamplingMask const &mask, double noise_std, std::uint64_t seed);

} // namespace ssd
