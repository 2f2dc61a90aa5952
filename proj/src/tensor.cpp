#include "spirit_sde/tensor.hpp"

#include "spirit_sde/error.hpp"

#include <fftw3.h>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>

namespace ssd {

std::size_t Product(Shape const &shape)
{
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string ShapeString(Shape const &shape)
{
  return fmt::format("({})", fmt::join(shape, ", "));
}

ComplexArray::ComplexArray(Shape shape)
  : shape_{std::move(shape)}
  , data_(Product(shape_))
{
}

ComplexArray::ComplexArray(Shape shape, std::vector<Cx> data)
  : shape_{std::move(shape)}
  , data_{std::move(data)}
{
  if (data_.size() != Product(shape_)) {
    throw InvalidInput(fmt::format("data length {} does not match shape {}", data_.size(), ShapeString(shape_)));
  }
}

std::size_t ComplexArray::rows() const
{
  return shape_.size() >= 2 ? shape_[shape_.size() - 2] : 1;
}

std::size_t ComplexArray::cols() const
{
  return shape_.empty() ? 0 : shape_.back();
}

std::size_t ComplexArray::slices() const
{
  std::size_t const px = pixels();
  return px ? data_.size() / px : 0;
}

std::span<Cx> ComplexArray::slice(std::size_t i)
{
  return std::span<Cx>(data_).subspan(i * pixels(), pixels());
}

std::span<Cx const> ComplexArray::slice(std::size_t i) const
{
  return std::span<Cx const>(data_).subspan(i * pixels(), pixels());
}

bool ComplexArray::allFinite() const
{
  return std::all_of(data_.begin(), data_.end(), [](Cx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

void ComplexArray::setZero()
{
  std::fill(data_.begin(), data_.end(), Cx{});
}

ComplexArray &ComplexArray::operator+=(ComplexArray const &o)
{
  RequireSameShape(*this, o, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) {
    data_[i] += o.data_[i];
  }
  return *this;
}

ComplexArray &ComplexArray::operator-=(ComplexArray const &o)
{
  RequireSameShape(*this, o, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) {
    data_[i] -= o.data_[i];
  }
  return *this;
}

ComplexArray &ComplexArray::operator*=(Cx a)
{
  for (auto &v : data_) {
    v *= a;
  }
  return *this;
}

ComplexArray &ComplexArray::operator*=(double a)
{
  for (auto &v : data_) {
    v *= a;
  }
  return *this;
}

ComplexArray &ComplexArray::axpy(Cx a, ComplexArray const &x)
{
  RequireSameShape(*this, x, "axpy");
  for (std::size_t i = 0; i < data_.size(); ++i) {
    data_[i] += a * x.data_[i];
  }
  return *this;
}

ComplexArray operator+(ComplexArray a, ComplexArray const &b)
{
  a += b;
  return a;
}

ComplexArray operator-(ComplexArray a, ComplexArray const &b)
{
  a -= b;
  return a;
}

ComplexArray operator*(Cx s, ComplexArray a)
{
  a *= s;
  return a;
}

ComplexArray operator*(double s, ComplexArray a)
{
  a *= s;
  return a;
}

void RequireSameShape(ComplexArray const &a, ComplexArray const &b, char const *what)
{
  if (a.shape() != b.shape()) {
    throw InvalidInput(
      fmt::format("{}: shape mismatch {} vs {}", what, ShapeString(a.shape()), ShapeString(b.shape())));
  }
}

void RequireFinite(ComplexArray const &a, char const *what)
{
  if (!a.allFinite()) {
    throw InvalidInput(fmt::format("{}: non-finite input", what));
  }
}

Cx Inner(ComplexArray const &a, ComplexArray const &b)
{
  RequireSameShape(a, b, "Inner");
  Cx acc{};
  auto const x = a.data();
  auto const y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += std::conj(x[i]) * y[i];
  }
  return acc;
}

double SquaredNorm(ComplexArray const &a)
{
  double acc = 0.0;
  for (auto const v : a.data()) {
    acc += std::norm(v);
  }
  return acc;
}

double Norm(ComplexArray const &a)
{
  return std::sqrt(SquaredNorm(a));
}

double MaxAbsDiff(ComplexArray const &a, ComplexArray const &b)
{
  RequireSameShape(a, b, "MaxAbsDiff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

namespace {

struct BufferDeleter
{
  void operator()(fftw_complex *p) const { fftw_free(p); }
};

struct Plan
{
  fftw_plan plan = nullptr;
  std::unique_ptr<fftw_complex, BufferDeleter> buffer;
};

// FFTW planning is not thread-safe, so plans are created and executed under one lock.
class PlanCache
{
public:
  static PlanCache &Get()
  {
    static PlanCache cache;
    return cache;
  }

  // fill writes the FFT input into the plan buffer, drain reads the output.
  template <typename Fill, typename Drain>
  void run(std::size_t rows, std::size_t cols, int sign, Fill &&fill, Drain &&drain)
  {
    std::lock_guard lock(mutex_);
    auto &p = plans_[{rows, cols, sign}];
    if (!p.plan) {
      p.buffer.reset(fftw_alloc_complex(rows * cols));
      p.plan = fftw_plan_dft_2d(int(rows), int(cols), p.buffer.get(), p.buffer.get(), sign, FFTW_ESTIMATE);
    }
    auto *buf = reinterpret_cast<Cx *>(p.buffer.get());
    fill(buf);
    fftw_execute(p.plan);
    drain(static_cast<Cx const *>(buf));
  }

  ~PlanCache()
  {
    for (auto &[k, p] : plans_) {
      fftw_destroy_plan(p.plan);
    }
  }

private:
  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, int>, Plan> plans_;
};

ComplexArray Centered(ComplexArray const &x, int sign, char const *what)
{
  if (x.rank() < 2 || x.rows() < 2 || x.cols() < 2) {
    throw InvalidInput(fmt::format("{}: spatial extents must be at least 2, got {}", what, ShapeString(x.shape())));
  }
  RequireFinite(x, what);
  std::size_t const R = x.rows(), C = x.cols();
  std::size_t const cr = R / 2, cc = C / 2;
  double const scale = 1.0 / std::sqrt(double(R * C));
  ComplexArray out(x.shape());
  for (std::size_t s = 0; s < x.slices(); ++s) {
    auto const src = x.slice(s);
    auto dst = out.slice(s);
    // Centered index p sits at FFT index (p - c) mod N: dst(j, i) = src((j + cr) % R, (i + cc) % C).
    auto fill = [&](Cx *buf) {
      for (std::size_t j = 0; j < R; ++j) {
        Cx const *row = src.data() + ((j + cr) % R) * C;
        Cx *o = buf + j * C;
        std::copy(row + cc, row + C, o);
        std::copy(row, row + cc, o + (C - cc));
      }
    };
    auto drain = [&](Cx const *buf) {
      for (std::size_t r = 0; r < R; ++r) {
        Cx const *row = buf + ((r + R - cr) % R) * C;
        Cx *o = dst.data() + r * C;
        std::size_t const split = C - cc; // source column (c + C - cc) % C wraps at c = cc
        for (std::size_t c = 0; c < cc; ++c) {
          o[c] = scale * row[c + split];
        }
        for (std::size_t c = cc; c < C; ++c) {
          o[c] = scale * row[c - cc];
        }
      }
    };
    PlanCache::Get().run(R, C, sign, fill, drain);
  }
  return out;
}

} // namespace

ComplexArray FFT2c(ComplexArray const &img)
{
  return Centered(img, FFTW_FORWARD, "FFT2c");
}

ComplexArray IFFT2c(ComplexArray const &ksp)
{
  return Centered(ksp, FFTW_BACKWARD, "IFFT2c");
}

RealImage Magnitude(ComplexArray const &img)
{
  if (img.rank() != 2) {
    throw InvalidInput(fmt::format("Magnitude expects a 2D image, got {}", ShapeString(img.shape())));
  }
  RealImage out(img.rows(), img.cols());
  for (std::size_t i = 0; i < img.size(); ++i) {
    out.data[i] = std::abs(img[i]);
  }
  return out;
}

} // namespace ssd
