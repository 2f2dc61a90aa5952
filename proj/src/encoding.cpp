#include "spirit_sde/encoding.hpp"

#include "spirit_sde/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ssd {

Rect CenteredRect(std::size_t rows, std::size_t cols, std::size_t rr, std::size_t rc)
{
  if (rr > rows || rc > cols) {
    throw InvalidInput(fmt::format("ACS {}x{} exceeds image {}x{}", rr, rc, rows, cols));
  }
  // Keeps the k-space center (floor(N/2)) inside, centered for even and odd extents alike.
  return Rect{.row0 = rows / 2 - rr / 2, .col0 = cols / 2 - rc / 2, .rows = rr, .cols = rc};
}

CoilSensitivities::CoilSensitivities(ComplexArray raw)
  : maps_{std::move(raw)}
{
  if (maps_.rank() != 3 || maps_.slices() < 1) {
    throw InvalidInput(fmt::format("coil maps must be (coil, row, col), got {}", ShapeString(maps_.shape())));
  }
  RequireFinite(maps_, "CoilSensitivities");
  std::size_t const nc = maps_.slices(), np = maps_.pixels();
  support_.assign(np, 0);
  for (std::size_t p = 0; p < np; ++p) {
    double ss = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      ss += std::norm(maps_[c * np + p]);
    }
    // Below this the pixel carries no usable sensitivity.
    if (ss > 1e-24) {
      double const inv = 1.0 / std::sqrt(ss);
      for (std::size_t c = 0; c < nc; ++c) {
        maps_[c * np + p] *= inv;
      }
      support_[p] = 1;
    } else {
      for (std::size_t c = 0; c < nc; ++c) {
        maps_[c * np + p] = 0.0;
      }
    }
  }
}

SamplingMask::SamplingMask(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> bits, Rect acs)
  : rows_{rows}
  , cols_{cols}
  , bits_{std::move(bits)}
  , acs_{acs}
{
  if (bits_.size() != rows_ * cols_) {
    throw InvalidInput("mask size does not match its extents");
  }
  for (auto &b : bits_) {
    if (b > 1) {
      throw InvalidInput("mask entries must be 0 or 1");
    }
  }
  if (acs_.row0 + acs_.rows > rows_ || acs_.col0 + acs_.cols > cols_) {
    throw InvalidInput("ACS rectangle outside the mask");
  }
  for (std::size_t r = acs_.row0; r < acs_.row0 + acs_.rows; ++r) {
    for (std::size_t c = acs_.col0; c < acs_.col0 + acs_.cols; ++c) {
      if (!bits_[r * cols_ + c]) {
        throw InvalidInput(fmt::format("ACS entry ({}, {}) is not sampled", r, c));
      }
    }
  }
  if (popcount() == 0) {
    throw InvalidInput("mask samples nothing");
  }
}

SamplingMask SamplingMask::Full(std::size_t rows, std::size_t cols)
{
  return SamplingMask(rows, cols, std::vector<std::uint8_t>(rows * cols, 1), Rect{0, 0, rows, cols});
}

SamplingMask SamplingMask::FromArray(ComplexArray const &a, Rect acs)
{
  if (a.rank() != 2) {
    throw InvalidInput("mask array must be 2D");
  }
  std::vector<std::uint8_t> bits(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    double const v = a[i].real();
    if (a[i].imag() != 0.0 || (v != 0.0 && v != 1.0)) {
      throw InvalidInput("mask array entries must be 0 or 1");
    }
    bits[i] = v != 0.0;
  }
  return SamplingMask(a.rows(), a.cols(), std::move(bits), acs);
}

std::size_t SamplingMask::popcount() const
{
  return std::size_t(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

double SamplingMask::acceleration() const
{
  return double(bits_.size()) / double(popcount());
}

ComplexArray SamplingMask::toArray() const
{
  ComplexArray a = ComplexArray::Image(rows_, cols_);
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    a[i] = bits_[i] ? 1.0 : 0.0;
  }
  return a;
}

namespace {

void CheckSpatial(ComplexArray const &x, CoilSensitivities const &S, char const *what)
{
  if (x.rows() != S.rows() || x.cols() != S.cols()) {
    throw InvalidInput(fmt::format(
      "{}: spatial extents {} do not match sensitivities {}", what, ShapeString(x.shape()),
      ShapeString(S.maps().shape())));
  }
}

void CheckCoils(ComplexArray const &xc, CoilSensitivities const &S, char const *what)
{
  if (xc.rank() != 3 || xc.slices() != S.coils()) {
    throw InvalidInput(fmt::format("{}: expected {} coils, got {}", what, S.coils(), ShapeString(xc.shape())));
  }
  CheckSpatial(xc, S, what);
}

} // namespace

ComplexArray CoilExpand(ComplexArray const &x, CoilSensitivities const &S)
{
  if (x.rank() != 2) {
    throw InvalidInput("CoilExpand expects a 2D image");
  }
  CheckSpatial(x, S, "CoilExpand");
  std::size_t const nc = S.coils(), np = x.size();
  ComplexArray out = ComplexArray::Coils(nc, x.rows(), x.cols());
  auto const &m = S.maps();
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t p = 0; p < np; ++p) {
      out[c * np + p] = m[c * np + p] * x[p];
    }
  }
  return out;
}

ComplexArray CoilCombine(ComplexArray const &xc, CoilSensitivities const &S)
{
  CheckCoils(xc, S, "CoilCombine");
  std::size_t const nc = S.coils(), np = xc.pixels();
  ComplexArray out = ComplexArray::Image(xc.rows(), xc.cols());
  auto const &m = S.maps();
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t p = 0; p < np; ++p) {
      out[p] += std::conj(m[c * np + p]) * xc[c * np + p];
    }
  }
  return out;
}

ComplexArray CoilProject(ComplexArray const &xc, CoilSensitivities const &S)
{
  return CoilExpand(CoilCombine(xc, S), S);
}

ComplexArray ApplyMask(ComplexArray ksp, SamplingMask const &mask)
{
  if (ksp.rows() != mask.rows() || ksp.cols() != mask.cols()) {
    throw InvalidInput(fmt::format("mask {}x{} does not match k-space {}", mask.rows(), mask.cols(),
                                   ShapeString(ksp.shape())));
  }
  auto const &bits = mask.bits();
  for (std::size_t s = 0; s < ksp.slices(); ++s) {
    auto sl = ksp.slice(s);
    for (std::size_t p = 0; p < sl.size(); ++p) {
      if (!bits[p]) {
        sl[p] = 0.0;
      }
    }
  }
  return ksp;
}

ComplexArray ForwardA(ComplexArray const &x, CoilSensitivities const &S, SamplingMask const &mask)
{
  return ApplyMask(FFT2c(CoilExpand(x, S)), mask);
}

ComplexArray AdjointA(ComplexArray const &y, CoilSensitivities const &S, SamplingMask const &mask)
{
  return CoilCombine(IFFT2c(ApplyMask(y, mask)), S);
}

RealImage SosCombine(ComplexArray const &xc)
{
  if (xc.rank() != 3) {
    throw InvalidInput("SosCombine expects (coil, row, col)");
  }
  std::size_t const np = xc.pixels();
  RealImage out(xc.rows(), xc.cols());
  for (std::size_t c = 0; c < xc.slices(); ++c) {
    for (std::size_t p = 0; p < np; ++p) {
      out.data[p] += std::norm(xc[c * np + p]);
    }
  }
  for (auto &v : out.data) {
    v = std::sqrt(v);
  }
  return out;
}

ComplexArray ExtractACS(ComplexArray const &ksp, Rect const &acs)
{
  if (ksp.rank() != 3 || acs.row0 + acs.rows > ksp.rows() || acs.col0 + acs.cols > ksp.cols()) {
    throw InvalidInput("ExtractACS: rectangle outside k-space");
  }
  ComplexArray out = ComplexArray::Coils(ksp.slices(), acs.rows, acs.cols);
  for (std::size_t c = 0; c < ksp.slices(); ++c) {
    for (std::size_t r = 0; r < acs.rows; ++r) {
      for (std::size_t q = 0; q < acs.cols; ++q) {
        out(c, r, q) = ksp(c, acs.row0 + r, acs.col0 + q);
      }
    }
  }
  return out;
}

} // namespace ssd
