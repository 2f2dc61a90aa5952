#pragma once

#include "tensor.hpp"

#include <filesystem>
#include <iosfwd>

namespace ssd {

/*
 * CXT1 tensor files: magic "CXT1", u32 LE rank, rank x u64 LE extents, then
 * row-major interleaved (real, imag) f32 LE. Reading promotes to double.
 */
void WriteCXT1(std::ostream &os, ComplexArray const &a);
ComplexArray ReadCXT1(std::istream &is);
void WriteCXT1(std::filesystem::path const &path, ComplexArray const &a);
ComplexArray ReadCXT1(std::filesystem::path const &path);

// Rounds every component to the nearest f32, i.e. what a CXT1 round trip yields.
ComplexArray QuantizeToFloat(ComplexArray a);

} // namespace ssd
