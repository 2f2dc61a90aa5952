#pragma once

#include "tensor.hpp"

namespace ssd {

/*
 * SPIRiT interpolation kernel G. weights has shape (target, source, k_rows, k_cols);
 * tap (a, b) multiplies source k-space at offset (a - k_rows/2, b - k_cols/2), i.e.
 * (G x)_t(k) = sum_s sum_d w[t, s, d] x_s(k - d) with circular wrap.
 */
struct SpiritKernel
{
  ComplexArray weights;
  std::size_t k_rows = 5, k_cols = 5;
  double tikhonov = 0.0;
  double calib_residual = 0.0;

  std::size_t coils() const { return weights.rank() == 4 ? weights.shape()[0] : 0; }
  Cx const &at(std::size_t t, std::size_t s, std::size_t a, std::size_t b) const
  {
    return weights[((t * coils() + s) * k_rows + a) * k_cols + b];
  }
};

/*
 * Fits every interior ACS point of each target coil from its neighbourhood across all
 * coils, excluding the target's own centre tap. The regularizer is
 * lambda = tikhonov * trace(A^H A) of the calibration matrix A; each target solves
 * min ||A w - b||^2 + lambda ||w||^2 by column-pivoted QR.
 */
SpiritKernel Calibrate(ComplexArray const &acs, std::size_t k_rows, std::size_t k_cols, double tikhonov);

// Circular k-space convolution with G.
ComplexArray ApplyG(ComplexArray const &ksp, SpiritKernel const &kern);
ComplexArray ApplyGMinusI(ComplexArray const &ksp, SpiritKernel const &kern);
ComplexArray AdjointOfGMinusI(ComplexArray const &ksp, SpiritKernel const &kern);

// Psi = F^-1 (G - I)^H (G - I) F on image-domain coil images.
ComplexArray ApplyPsi(ComplexArray const &xc, SpiritKernel const &kern);

/*
 * Psi diagonalized by the Fourier transform: at every pixel it is the Hermitian
 * nc x nc matrix (W(p) - I)^H (W(p) - I), where W(p) is the image-domain response of
 * the circular kernel. Equivalent to ApplyPsi, without any FFTs.
 */
class PsiOperator
{
public:
  PsiOperator() = default;
  PsiOperator(SpiritKernel const &kern, std::size_t rows, std::size_t cols);

  ComplexArray apply(ComplexArray const &xc) const;
  // (G - I) in the image domain; ||(G - I) F x|| = ||this(x)||.
  ComplexArray applyGMinusI(ComplexArray const &xc) const;
  // <x, Psi x>, the self-consistency energy ||(G - I) F x||^2.
  double energy(ComplexArray const &xc) const;

  std::size_t coils() const { return nc_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

private:
  void check(ComplexArray const &xc) const;

  std::size_t nc_ = 0, rows_ = 0, cols_ = 0;
  std::vector<Cx> gmi_; // per pixel, (W - I) row-major nc x nc
  std::vector<Cx> psi_; // per pixel, (W - I)^H (W - I)
};

} // namespace ssd
