#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ssd {

using Cx = std::complex<double>;
using Shape = std::vector<std::size_t>;

std::size_t Product(Shape const &shape);
std::string ShapeString(Shape const &shape);

/*
 * Dense complex array in row-major order. 3-axis data is (coil, row, col),
 * 2-axis data is (row, col). The spatial axes are always the trailing two.
 */
class ComplexArray
{
public:
  ComplexArray() = default;
  explicit ComplexArray(Shape shape);
  ComplexArray(Shape shape, std::vector<Cx> data);

  static ComplexArray Image(std::size_t rows, std::size_t cols) { return ComplexArray({rows, cols}); }
  static ComplexArray Coils(std::size_t nc, std::size_t rows, std::size_t cols)
  {
    return ComplexArray({nc, rows, cols});
  }

  Shape const &shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t pixels() const { return rows() * cols(); }
  // Number of leading (coil) slices; 1 for 2-axis arrays.
  std::size_t slices() const;

  std::span<Cx> data() { return data_; }
  std::span<Cx const> data() const { return data_; }
  std::span<Cx> slice(std::size_t i);
  std::span<Cx const> slice(std::size_t i) const;

  Cx &operator[](std::size_t i) { return data_[i]; }
  Cx const &operator[](std::size_t i) const { return data_[i]; }
  Cx &operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  Cx const &operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  Cx &operator()(std::size_t k, std::size_t r, std::size_t c) { return data_[(k * rows() + r) * cols() + c]; }
  Cx const &operator()(std::size_t k, std::size_t r, std::size_t c) const
  {
    return data_[(k * rows() + r) * cols() + c];
  }

  bool allFinite() const;
  void setZero();

  ComplexArray &operator+=(ComplexArray const &o);
  ComplexArray &operator-=(ComplexArray const &o);
  ComplexArray &operator*=(Cx a);
  ComplexArray &operator*=(double a);

  // this += a * x
  ComplexArray &axpy(Cx a, ComplexArray const &x);

private:
  Shape shape_;
  std::vector<Cx> data_;
};

ComplexArray operator+(ComplexArray a, ComplexArray const &b);
ComplexArray operator-(ComplexArray a, ComplexArray const &b);
ComplexArray operator*(Cx s, ComplexArray a);
ComplexArray operator*(double s, ComplexArray a);

void RequireSameShape(ComplexArray const &a, ComplexArray const &b, char const *what);
void RequireFinite(ComplexArray const &a, char const *what);

// Sum of conj(a_i) * b_i.
Cx Inner(ComplexArray const &a, ComplexArray const &b);
double Norm(ComplexArray const &a);
double SquaredNorm(ComplexArray const &a);
double MaxAbsDiff(ComplexArray const &a, ComplexArray const &b);

// Centered, unitary 2D DFT over the trailing two axes, applied per leading index.
ComplexArray FFT2c(ComplexArray const &img);
ComplexArray IFFT2c(ComplexArray const &ksp);

/* Real-valued 2D image (magnitudes, masks, metric inputs). */
struct RealImage
{
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;

  RealImage() = default;
  RealImage(std::size_t r, std::size_t c, double v = 0.0)
    : rows{r}
    , cols{c}
    , data(r * c, v)
  {
  }

  double &operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

RealImage Magnitude(ComplexArray const &img);

} // namespace ssd
