#include "spirit_sde/simulation.hpp"

#include "spirit_sde/error.hpp"
#include "spirit_sde/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

namespace ssd {

PhantomKind ParsePhantomKind(std::string const &s)
{
  if (s == "shepp-logan") {
    return PhantomKind::SheppLogan;
  }
  if (s == "smooth-blobs") {
    return PhantomKind::SmoothBlobs;
  }
  throw InvalidInput(fmt::format("unsupported phantom kind '{}'", s));
}

MaskPattern ParseMaskPattern(std::string const &s)
{
  if (s == "uniform-cartesian") {
    return MaskPattern::UniformCartesian;
  }
  if (s == "variable-density-random") {
    return MaskPattern::VariableDensity;
  }
  throw InvalidInput(fmt::format("unsupported mask pattern '{}'", s));
}

std::string ToString(PhantomKind k)
{
  return k == PhantomKind::SheppLogan ? "shepp-logan" : "smooth-blobs";
}

std::string ToString(MaskPattern p)
{
  return p == MaskPattern::UniformCartesian ? "uniform-cartesian" : "variable-density-random";
}

namespace {

// Normalized coordinates in [-1, 1] at pixel centers, y pointing up.
double XCoord(std::size_t c, std::size_t cols) { return (double(c) + 0.5 - cols / 2.0) / (cols / 2.0); }
double YCoord(std::size_t r, std::size_t rows) { return -(double(r) + 0.5 - rows / 2.0) / (rows / 2.0); }

struct Ellipse
{
  double value, a, b, x0, y0, phi_deg;
};

// Modified Shepp-Logan (Toft) parameters.
constexpr std::array<Ellipse, 10> kSheppLogan{{
  {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
  {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
  {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},
  {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
  {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},
  {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
  {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},
  {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
  {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},
  {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
}};

std::vector<double> SheppLogan(std::size_t rows, std::size_t cols, Rng &rng)
{
  auto ellipses = kSheppLogan;
  // Outer two ellipses are the fixed head outline; the inner features vary per seed.
  for (std::size_t i = 2; i < ellipses.size(); ++i) {
    ellipses[i].value *= 1.0 + 0.2 * (rng.uniform() - 0.5);
    ellipses[i].x0 += 0.02 * (rng.uniform() - 0.5);
    ellipses[i].y0 += 0.02 * (rng.uniform() - 0.5);
  }
  std::vector<double> img(rows * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double const y = YCoord(r, rows);
    for (std::size_t c = 0; c < cols; ++c) {
      double const x = XCoord(c, cols);
      double v = 0.0;
      for (auto const &e : ellipses) {
        double const th = e.phi_deg * std::numbers::pi / 180.0;
        double const dx = x - e.x0, dy = y - e.y0;
        double const u = dx * std::cos(th) + dy * std::sin(th);
        double const w = -dx * std::sin(th) + dy * std::cos(th);
        if ((u * u) / (e.a * e.a) + (w * w) / (e.b * e.b) <= 1.0) {
          v += e.value;
        }
      }
      img[r * cols + c] = std::max(v, 0.0);
    }
  }
  return img;
}

std::vector<double> SmoothBlobs(std::size_t rows, std::size_t cols, Rng &rng)
{
  std::size_t const nblobs = 6 + std::size_t(rng.uniform() * 5.0);
  struct Blob
  {
    double x0, y0, w, amp;
  };
  std::vector<Blob> blobs(nblobs);
  for (auto &b : blobs) {
    double const rad = 0.55 * std::sqrt(rng.uniform());
    double const ang = 2.0 * std::numbers::pi * rng.uniform();
    b = Blob{rad * std::cos(ang), rad * std::sin(ang), 0.08 + 0.2 * rng.uniform(), 0.3 + 0.7 * rng.uniform()};
  }
  std::vector<double> img(rows * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double const y = YCoord(r, rows);
    for (std::size_t c = 0; c < cols; ++c) {
      double const x = XCoord(c, cols);
      // Smooth elliptical support so the background is genuinely empty.
      double const rr = (x * x) / (0.8 * 0.8) + (y * y) / (0.9 * 0.9);
      if (rr >= 1.0) {
        continue;
      }
      double v = 0.0;
      for (auto const &b : blobs) {
        double const d2 = (x - b.x0) * (x - b.x0) + (y - b.y0) * (y - b.y0);
        v += b.amp * std::exp(-d2 / (2.0 * b.w * b.w));
      }
      img[r * cols + c] = v * (1.0 - rr * rr);
    }
  }
  return img;
}

} // namespace

ComplexArray MakePhantom(PhantomSpec const &spec)
{
  if (spec.rows < 16 || spec.cols < 16) {
    throw InvalidInput(fmt::format("phantom extents must be at least 16, got {}x{}", spec.rows, spec.cols));
  }
  Rng const rng(spec.seed);
  Rng shape_rng = rng.split(1);
  Rng phase_rng = rng.split(2);
  std::vector<double> mag;
  switch (spec.kind) {
  case PhantomKind::SheppLogan: mag = SheppLogan(spec.rows, spec.cols, shape_rng); break;
  case PhantomKind::SmoothBlobs: mag = SmoothBlobs(spec.rows, spec.cols, shape_rng); break;
  default: throw InvalidInput("unsupported phantom kind");
  }
  double const peak = *std::max_element(mag.begin(), mag.end());
  if (!(peak > 0.0)) {
    throw NumericalError("phantom has no signal");
  }
  std::array<double, 5> a;
  for (auto &v : a) {
    v = (phase_rng.uniform() - 0.5) * 0.5 * std::numbers::pi;
  }
  // Quadratic terms kept gentler than the linear ones.
  a[3] *= 0.5;
  a[4] *= 0.5;
  ComplexArray img = ComplexArray::Image(spec.rows, spec.cols);
  for (std::size_t r = 0; r < spec.rows; ++r) {
    double const y = YCoord(r, spec.rows);
    for (std::size_t c = 0; c < spec.cols; ++c) {
      double const x = XCoord(c, spec.cols);
      double const ph = a[0] + a[1] * x + a[2] * y + a[3] * x * y + a[4] * x * x;
      img(r, c) = std::polar(mag[r * spec.cols + c] / peak, ph);
    }
  }
  return img;
}

CoilSensitivities MakeCoilMaps(std::size_t rows, std::size_t cols, std::size_t nc, std::uint64_t seed)
{
  if (nc < 1) {
    throw InvalidInput("coil count must be at least 1");
  }
  Rng rng(seed);
  ComplexArray raw = ComplexArray::Coils(nc, rows, cols);
  double const jitter = 2.0 * std::numbers::pi * rng.uniform();
  for (std::size_t k = 0; k < nc; ++k) {
    double const ang = jitter + 2.0 * std::numbers::pi * double(k) / double(nc) + 0.3 * (rng.uniform() - 0.5);
    double const cx = 1.1 * std::cos(ang), cy = 1.1 * std::sin(ang);
    double const w = 0.6 + 0.2 * rng.uniform();
    double const kx = (rng.uniform() - 0.5) * std::numbers::pi;
    double const ky = (rng.uniform() - 0.5) * std::numbers::pi;
    double const ph0 = 2.0 * std::numbers::pi * rng.uniform();
    for (std::size_t r = 0; r < rows; ++r) {
      double const y = YCoord(r, rows);
      for (std::size_t c = 0; c < cols; ++c) {
        double const x = XCoord(c, cols);
        double const d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        raw(k, r, c) = std::polar(std::exp(-d2 / (2.0 * w * w)), ph0 + kx * x + ky * y);
      }
    }
  }
  return CoilSensitivities(std::move(raw));
}

namespace {

std::vector<std::uint8_t> AcsBits(std::size_t rows, std::size_t cols, Rect const &acs)
{
  std::vector<std::uint8_t> bits(rows * cols, 0);
  for (std::size_t r = acs.row0; r < acs.row0 + acs.rows; ++r) {
    for (std::size_t c = acs.col0; c < acs.col0 + acs.cols; ++c) {
      bits[r * cols + c] = 1;
    }
  }
  return bits;
}

std::vector<std::uint8_t> LinesAtStride(std::size_t rows, std::size_t cols, Rect const &acs, double stride)
{
  auto bits = AcsBits(rows, cols, acs);
  double const center = double(rows / 2);
  auto mark = [&](double pos) {
    auto const r = std::llround(pos);
    if (r >= 0 && r < std::int64_t(rows)) {
      std::fill_n(bits.begin() + r * std::int64_t(cols), cols, std::uint8_t{1});
    }
  };
  for (double pos = center; pos > -1.0; pos -= stride) {
    mark(pos);
  }
  for (double pos = center + stride; pos < double(rows); pos += stride) {
    mark(pos);
  }
  return bits;
}

double Realized(std::vector<std::uint8_t> const &bits)
{
  return double(bits.size()) / double(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::vector<std::uint8_t> UniformMask(std::size_t rows, std::size_t cols, Rect const &acs, double R)
{
  auto bits = LinesAtStride(rows, cols, acs, R);
  if (std::abs(Realized(bits) / R - 1.0) <= 0.1) {
    return bits;
  }
  // The ACS block pulls the realized factor down; widen the stride until the target is met.
  double lo = 1.0, hi = double(rows);
  for (int it = 0; it < 60; ++it) {
    double const mid = 0.5 * (lo + hi);
    (Realized(LinesAtStride(rows, cols, acs, mid)) < R ? lo : hi) = mid;
  }
  auto const a = LinesAtStride(rows, cols, acs, lo);
  auto const b = LinesAtStride(rows, cols, acs, hi);
  return std::abs(Realized(a) - R) <= std::abs(Realized(b) - R) ? a : b;
}

std::vector<std::uint8_t>
VariableDensityMask(std::size_t rows, std::size_t cols, Rect const &acs, double R, double exponent, Rng &rng)
{
  auto bits = AcsBits(rows, cols, acs);
  std::size_t const total = rows * cols;
  auto const target = std::size_t(std::llround(double(total) / R));
  std::size_t const have = std::size_t(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
  if (target <= have) {
    return bits;
  }
  // Weighted sampling without replacement (exponential keys): exact popcount, density ~ (1 - r)^p.
  double const cr = double(rows / 2), cc = double(cols / 2);
  double const rmax = std::hypot(std::max(cr, rows - 1 - cr), std::max(cc, cols - 1 - cc));
  std::vector<std::pair<double, std::size_t>> keys;
  keys.reserve(total - have);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double const u = 1.0 - rng.uniform();
      if (bits[r * cols + c]) {
        continue;
      }
      double const rad = std::hypot(double(r) - cr, double(c) - cc) / rmax;
      double const w = std::max(std::pow(std::max(1.0 - rad, 0.0), exponent), 1e-6);
      keys.emplace_back(std::log(u) / w, r * cols + c);
    }
  }
  std::size_t const need = target - have;
  std::partial_sort(keys.begin(), keys.begin() + need, keys.end(), [](auto const &a, auto const &b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  for (std::size_t i = 0; i < need; ++i) {
    bits[keys[i].second] = 1;
  }
  return bits;
}

} // namespace

CoilSensitivities BoxSmoothMaps(CoilSensitivities const &S, std::size_t width)
{
  if (width == 0 || width % 2 == 0) {
    throw InvalidInput(fmt::format("box width must be odd, got {}", width));
  }
  auto const &m = S.maps();
  std::size_t const nc = S.coils(), R = S.rows(), C = S.cols();
  auto const h = std::ptrdiff_t(width / 2);
  ComplexArray out = ComplexArray::Coils(nc, R, C);
  for (std::size_t k = 0; k < nc; ++k) {
    for (std::ptrdiff_t r = 0; r < std::ptrdiff_t(R); ++r) {
      for (std::ptrdiff_t c = 0; c < std::ptrdiff_t(C); ++c) {
        Cx acc{0.0, 0.0};
        std::size_t n = 0;
        for (std::ptrdiff_t dr = -h; dr <= h; ++dr) {
          for (std::ptrdiff_t dc = -h; dc <= h; ++dc) {
            std::ptrdiff_t const rr = r + dr, cc = c + dc;
            if (rr >= 0 && rr < std::ptrdiff_t(R) && cc >= 0 && cc < std::ptrdiff_t(C)) {
              acc += m(k, std::size_t(rr), std::size_t(cc));
              ++n;
            }
          }
        }
        out(k, std::size_t(r), std::size_t(c)) = acc / double(n);
      }
    }
  }
  return CoilSensitivities(std::move(out));
}

SamplingMask MakeMask(std::size_t rows, std::size_t cols, MaskSpec const &spec)
{
  if (!(spec.acceleration >= 1.0)) {
    throw InvalidInput(fmt::format("acceleration must be >= 1, got {}", spec.acceleration));
  }
  Rect const acs = CenteredRect(rows, cols, spec.acs_rows, spec.acs_cols);
  if (spec.acceleration == 1.0) {
    return SamplingMask(rows, cols, std::vector<std::uint8_t>(rows * cols, 1), acs);
  }
  Rng rng(spec.seed);
  std::vector<std::uint8_t> bits;
  switch (spec.pattern) {
  case MaskPattern::UniformCartesian: bits = UniformMask(rows, cols, acs, spec.acceleration); break;
  case MaskPattern::VariableDensity:
    bits = VariableDensityMask(rows, cols, acs, spec.acceleration, spec.density_exponent, rng);
    break;
  }
  double const realized = Realized(bits);
  if (std::abs(realized / spec.acceleration - 1.0) > 0.1) {
    throw InvalidInput(fmt::format(
      "cannot realize acceleration {} with ACS {}x{} on {}x{} (got {:.3f})", spec.acceleration, spec.acs_rows,
      spec.acs_cols, rows, cols, realized));
  }
  return SamplingMask(rows, cols, std::move(bits), acs);
}

MeasuredData SynthesizeMeasurement(
  ComplexArray const &x, CoilSensitivities const &S, SamplingMask const &mask, double noise_std, std::uint64_t seed)
{
  if (!(noise_std >= 0.0)) {
    throw InvalidInput("noise_std must be non-negative");
  }
  ComplexArray ksp = FFT2c(CoilExpand(x, S));
  if (noise_std > 0.0) {
    Rng rng(seed);
    for (auto &v : ksp.data()) {
      v += noise_std * rng.complexNormal();
    }
  }
  return MeasuredData{ApplyMask(std::move(ksp), mask), mask, noise_std};
}

} // namespace ssd
