#pragma once

#include "tensor.hpp"

#include <cstdint>
#include <vector>

namespace ssd {

struct Rect
{
  std::size_t row0 = 0, col0 = 0, rows = 0, cols = 0;

  bool contains(std::size_t r, std::size_t c) const
  {
    return r >= row0 && r < row0 + rows && c >= col0 && c < col0 + cols;
  }
  bool empty() const { return rows == 0 || cols == 0; }
};

// Centered rectangle of the given extents inside an image of (rows, cols).
Rect CenteredRect(std::size_t rows, std::size_t cols, std::size_t rr, std::size_t rc);

/*
 * Coil sensitivities normalized so that sum_c |s_c(p)|^2 = 1 on the support.
 * Pixels with no sensitivity at all are zeroed and marked off-support.
 */
class CoilSensitivities
{
public:
  CoilSensitivities() = default;
  // Normalizes raw maps pixelwise.
  explicit CoilSensitivities(ComplexArray raw);

  ComplexArray const &maps() const { return maps_; }
  std::vector<std::uint8_t> const &support() const { return support_; }
  std::size_t coils() const { return maps_.slices(); }
  std::size_t rows() const { return maps_.rows(); }
  std::size_t cols() const { return maps_.cols(); }

private:
  ComplexArray maps_;
  std::vector<std::uint8_t> support_;
};

class SamplingMask
{
public:
  SamplingMask() = default;
  SamplingMask(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> bits, Rect acs);
  static SamplingMask Full(std::size_t rows, std::size_t cols);
  // Mask stored as a complex array (0/1 real part); the ACS rectangle is supplied separately.
  static SamplingMask FromArray(ComplexArray const &a, Rect acs);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Rect const &acs() const { return acs_; }
  std::vector<std::uint8_t> const &bits() const { return bits_; }
  bool operator()(std::size_t r, std::size_t c) const { return bits_[r * cols_ + c] != 0; }
  std::size_t popcount() const;
  double acceleration() const;

  ComplexArray toArray() const;

private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<std::uint8_t> bits_;
  Rect acs_;
};

struct MeasuredData
{
  ComplexArray y; // (coil, row, col), zero off-mask
  SamplingMask mask;
  double noise_std = 0.0;
};

ComplexArray CoilExpand(ComplexArray const &x, CoilSensitivities const &S);
ComplexArray CoilCombine(ComplexArray const &xc, CoilSensitivities const &S);
// S S^*: orthogonal projection onto coil-consistent images.
ComplexArray CoilProject(ComplexArray const &xc, CoilSensitivities const &S);

// Zeroes k-space outside the mask, per coil.
ComplexArray ApplyMask(ComplexArray ksp, SamplingMask const &mask);

// A = M F S and its adjoint.
ComplexArray ForwardA(ComplexArray const &x, CoilSensitivities const &S, SamplingMask const &mask);
ComplexArray AdjointA(ComplexArray const &y, CoilSensitivities const &S, SamplingMask const &mask);

RealImage SosCombine(ComplexArray const &xc);

// Copies the ACS rectangle of multi-coil k-space out into its own array.
ComplexArray ExtractACS(ComplexArray const &ksp, Rect const &acs);

} // namespace ssd
