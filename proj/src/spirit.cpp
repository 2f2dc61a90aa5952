#include "spirit_sde/spirit.hpp"

#include "spirit_sde/error.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace ssd {

SpiritKernel Calibrate(ComplexArray const &acs, std::size_t k_rows, std::size_t k_cols, double tikhonov)
{
  if (acs.rank() != 3) {
    throw InvalidInput(fmt::format("ACS must be (coil, row, col), got {}", ShapeString(acs.shape())));
  }
  if (k_rows % 2 == 0 || k_cols % 2 == 0 || k_rows == 0 || k_cols == 0) {
    throw InvalidInput(fmt::format("kernel size must be odd, got {}x{}", k_rows, k_cols));
  }
  if (acs.rows() < k_rows + 4 || acs.cols() < k_cols + 4) {
    throw InvalidInput(
      fmt::format("ACS {}x{} too small for a {}x{} kernel", acs.rows(), acs.cols(), k_rows, k_cols));
  }
  if (!(tikhonov >= 0.0) || !std::isfinite(tikhonov)) {
    throw InvalidInput("tikhonov must be finite and non-negative");
  }
  RequireFinite(acs, "Calibrate");

  std::size_t const nc = acs.slices();
  std::size_t const hr = k_rows / 2, hc = k_cols / 2;
  std::size_t const taps = k_rows * k_cols;
  std::size_t const nunk = nc * taps;
  std::size_t const pr = acs.rows() - 2 * hr, pc = acs.cols() - 2 * hc;
  std::size_t const npts = pr * pc;

  Eigen::MatrixXcd A(npts, nunk);
  Eigen::MatrixXcd B(npts, nc);
  for (std::size_t i = 0; i < pr; ++i) {
    for (std::size_t j = 0; j < pc; ++j) {
      std::size_t const row = i * pc + j;
      std::size_t const r = i + hr, c = j + hc;
      for (std::size_t s = 0; s < nc; ++s) {
        for (std::size_t a = 0; a < k_rows; ++a) {
          for (std::size_t b = 0; b < k_cols; ++b) {
            // Tap (a, b) reads x_s(k - d) with d = (a - hr, b - hc).
            A(row, (s * k_rows + a) * k_cols + b) = acs(s, r + hr - a, c + hc - b);
          }
        }
        B(row, s) = acs(s, r, c);
      }
    }
  }

  double const lambda = tikhonov * A.squaredNorm();
  double const sqrt_lambda = std::sqrt(lambda);

  SpiritKernel kern;
  kern.k_rows = k_rows;
  kern.k_cols = k_cols;
  kern.tikhonov = tikhonov;
  kern.weights = ComplexArray({nc, nc, k_rows, k_cols});

  double resid2 = 0.0, total2 = 0.0;
  for (std::size_t t = 0; t < nc; ++t) {
    std::size_t const skip = (t * k_rows + hr) * k_cols + hc;
    Eigen::Index const n = Eigen::Index(nunk - 1);
    // Stacked system [A_t; sqrt(lambda) I] avoids squaring the conditioning of A.
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(Eigen::Index(npts) + n, n);
    M.topLeftCorner(Eigen::Index(npts), Eigen::Index(skip)) = A.leftCols(Eigen::Index(skip));
    M.topRightCorner(Eigen::Index(npts), n - Eigen::Index(skip)) = A.rightCols(n - Eigen::Index(skip));
    M.bottomRows(n).diagonal().setConstant(sqrt_lambda);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(Eigen::Index(npts) + n);
    rhs.head(Eigen::Index(npts)) = B.col(Eigen::Index(t));

    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(M);
    if (qr.rank() < n) {
      throw NumericalError(fmt::format(
        "calibration system for target coil {} is rank deficient ({} of {}); use tikhonov > 0", t, qr.rank(), n));
    }
    Eigen::VectorXcd const w = qr.solve(rhs);
    if (!w.allFinite()) {
      throw NumericalError(fmt::format("non-finite calibration weights for target coil {}", t));
    }

    Eigen::VectorXcd full = Eigen::VectorXcd::Zero(Eigen::Index(nunk));
    full.head(Eigen::Index(skip)) = w.head(Eigen::Index(skip));
    full.tail(n - Eigen::Index(skip)) = w.tail(n - Eigen::Index(skip));
    resid2 += (A * full - B.col(Eigen::Index(t))).squaredNorm();
    total2 += B.col(Eigen::Index(t)).squaredNorm();
    for (std::size_t u = 0; u < nunk; ++u) {
      kern.weights[t * nunk + u] = full(Eigen::Index(u));
    }
  }
  kern.calib_residual = total2 > 0.0 ? std::sqrt(resid2 / total2) : 0.0;
  return kern;
}

namespace {

void CheckKernelCoils(ComplexArray const &x, SpiritKernel const &kern, char const *what)
{
  if (x.rank() != 3 || x.slices() != kern.coils()) {
    throw InvalidInput(
      fmt::format("{}: kernel has {} coils, data is {}", what, kern.coils(), ShapeString(x.shape())));
  }
}

// out_t(k) += sum_s sum_d w(t, s, d) x_s(k - d), or with adjoint=true
// out_s(k) += sum_t sum_d conj(w(t, s, d)) x_t(k + d).
void Convolve(ComplexArray const &x, SpiritKernel const &kern, bool adjoint, ComplexArray &out)
{
  std::size_t const nc = kern.coils(), R = x.rows(), C = x.cols();
  std::size_t const hr = kern.k_rows / 2, hc = kern.k_cols / 2;
  for (std::size_t t = 0; t < nc; ++t) {
    for (std::size_t s = 0; s < nc; ++s) {
      for (std::size_t a = 0; a < kern.k_rows; ++a) {
        for (std::size_t b = 0; b < kern.k_cols; ++b) {
          Cx const w = kern.at(t, s, a, b);
          if (w == Cx{}) {
            continue;
          }
          // Offsets as non-negative shifts modulo the extents.
          std::size_t const dr = (a + R - hr) % R, dc = (b + C - hc) % C;
          std::size_t const src = adjoint ? t : s, dst = adjoint ? s : t;
          Cx const ww = adjoint ? std::conj(w) : w;
          std::size_t const shr = adjoint ? dr : R - dr, shc = adjoint ? dc : C - dc;
          for (std::size_t r = 0; r < R; ++r) {
            std::size_t const rr = (r + shr) % R;
            Cx *o = &out(dst, r, 0);
            Cx const *in = &x(src, rr, 0);
            for (std::size_t c = 0; c < C; ++c) {
              std::size_t cc = c + shc;
              cc = cc >= C ? cc - C : cc;
              o[c] += ww * in[cc];
            }
          }
        }
      }
    }
  }
}

} // namespace

ComplexArray ApplyG(ComplexArray const &ksp, SpiritKernel const &kern)
{
  CheckKernelCoils(ksp, kern, "ApplyG");
  ComplexArray out(ksp.shape());
  Convolve(ksp, kern, false, out);
  return out;
}

ComplexArray ApplyGMinusI(ComplexArray const &ksp, SpiritKernel const &kern)
{
  ComplexArray out = ApplyG(ksp, kern);
  out -= ksp;
  return out;
}

ComplexArray AdjointOfGMinusI(ComplexArray const &ksp, SpiritKernel const &kern)
{
  CheckKernelCoils(ksp, kern, "AdjointOfGMinusI");
  ComplexArray out(ksp.shape());
  Convolve(ksp, kern, true, out);
  out -= ksp;
  return out;
}

ComplexArray ApplyPsi(ComplexArray const &xc, SpiritKernel const &kern)
{
  CheckKernelCoils(xc, kern, "ApplyPsi");
  return IFFT2c(AdjointOfGMinusI(ApplyGMinusI(FFT2c(xc), kern), kern));
}

PsiOperator::PsiOperator(SpiritKernel const &kern, std::size_t rows, std::size_t cols)
  : nc_{kern.coils()}
  , rows_{rows}
  , cols_{cols}
{
  if (nc_ == 0) {
    throw InvalidInput("PsiOperator: empty kernel");
  }
  std::size_t const np = rows * cols, nn = nc_ * nc_;
  std::size_t const hr = kern.k_rows / 2, hc = kern.k_cols / 2;
  std::size_t const cr = rows / 2, cc = cols / 2;
  gmi_.assign(np * nn, Cx{});
  psi_.assign(np * nn, Cx{});
  // A k-space shift by d multiplies the centered image by exp(+2 pi i d.(p - c) / N).
  std::vector<Cx> phase_r(kern.k_rows * rows), phase_c(kern.k_cols * cols);
  for (std::size_t a = 0; a < kern.k_rows; ++a) {
    double const d = double(a) - double(hr);
    for (std::size_t r = 0; r < rows; ++r) {
      phase_r[a * rows + r] = std::polar(1.0, 2.0 * std::numbers::pi * d * (double(r) - double(cr)) / double(rows));
    }
  }
  for (std::size_t b = 0; b < kern.k_cols; ++b) {
    double const d = double(b) - double(hc);
    for (std::size_t c = 0; c < cols; ++c) {
      phase_c[b * cols + c] = std::polar(1.0, 2.0 * std::numbers::pi * d * (double(c) - double(cc)) / double(cols));
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::size_t const p = r * cols + c;
      Cx *W = &gmi_[p * nn];
      for (std::size_t t = 0; t < nc_; ++t) {
        for (std::size_t s = 0; s < nc_; ++s) {
          Cx acc{};
          for (std::size_t a = 0; a < kern.k_rows; ++a) {
            for (std::size_t b = 0; b < kern.k_cols; ++b) {
              acc += kern.at(t, s, a, b) * phase_r[a * rows + r] * phase_c[b * cols + c];
            }
          }
          W[t * nc_ + s] = acc - (t == s ? 1.0 : 0.0);
        }
      }
      Cx *P = &psi_[p * nn];
      for (std::size_t i = 0; i < nc_; ++i) {
        for (std::size_t j = 0; j < nc_; ++j) {
          Cx acc{};
          for (std::size_t t = 0; t < nc_; ++t) {
            acc += std::conj(W[t * nc_ + i]) * W[t * nc_ + j];
          }
          P[i * nc_ + j] = acc;
        }
      }
    }
  }
}

void PsiOperator::check(ComplexArray const &xc) const
{
  if (xc.rank() != 3 || xc.slices() != nc_ || xc.rows() != rows_ || xc.cols() != cols_) {
    throw InvalidInput(fmt::format(
      "PsiOperator: expected ({}, {}, {}), got {}", nc_, rows_, cols_, ShapeString(xc.shape())));
  }
}

namespace {

ComplexArray PixelwiseApply(std::vector<Cx> const &mats, std::size_t nc, ComplexArray const &xc)
{
  std::size_t const np = xc.pixels(), nn = nc * nc;
  ComplexArray out(xc.shape());
  auto const in = xc.data();
  auto o = out.data();
  for (std::size_t p = 0; p < np; ++p) {
    Cx const *M = &mats[p * nn];
    for (std::size_t i = 0; i < nc; ++i) {
      Cx acc{};
      for (std::size_t j = 0; j < nc; ++j) {
        acc += M[i * nc + j] * in[j * np + p];
      }
      o[i * np + p] = acc;
    }
  }
  return out;
}

} // namespace

ComplexArray PsiOperator::apply(ComplexArray const &xc) const
{
  check(xc);
  return PixelwiseApply(psi_, nc_, xc);
}

ComplexArray PsiOperator::applyGMinusI(ComplexArray const &xc) const
{
  check(xc);
  return PixelwiseApply(gmi_, nc_, xc);
}

double PsiOperator::energy(ComplexArray const &xc) const
{
  return SquaredNorm(applyGMinusI(xc));
}

} // namespace ssd
