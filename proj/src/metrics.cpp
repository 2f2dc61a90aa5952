#include "spirit_sde/metrics.hpp"

#include "spirit_sde/error.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <sstream>

namespace ssd {
namespace {

Rect Region(RealImage const &ref, RealImage const &test, std::optional<Rect> const &roi, char const *who)
{
  if (ref.rows != test.rows || ref.cols != test.cols) {
    throw InvalidInput(fmt::format("{}: images are {}x{} and {}x{}", who, ref.rows, ref.cols, test.rows, test.cols));
  }
  if (ref.data.empty()) {
    throw InvalidInput(fmt::format("{}: empty image", who));
  }
  Rect const r = roi.value_or(Rect{0, 0, ref.rows, ref.cols});
  if (r.rows == 0 || r.cols == 0 || r.row0 + r.rows > ref.rows || r.col0 + r.cols > ref.cols) {
    throw InvalidInput(fmt::format("{}: ROI ({}, {}, {}x{}) outside {}x{} image", who, r.row0, r.col0, r.rows,
                                   r.cols, ref.rows, ref.cols));
  }
  return r;
}

template <typename F>
void ForRoi(Rect const &r, F &&f)
{
  for (std::size_t i = r.row0; i < r.row0 + r.rows; ++i) {
    for (std::size_t j = r.col0; j < r.col0 + r.cols; ++j) {
      f(i, j);
    }
  }
}

constexpr std::size_t kWin = 11;

std::array<double, kWin> GaussianTaps()
{
  std::array<double, kWin> w{};
  double sum = 0.0;
  for (std::size_t k = 0; k < kWin; ++k) {
    double const d = double(k) - double(kWin / 2);
    w[k] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    sum += w[k];
  }
  for (auto &v : w) {
    v /= sum;
  }
  return w;
}

} // namespace

double Nmse(RealImage const &ref, RealImage const &test, std::optional<Rect> const &roi)
{
  Rect const r = Region(ref, test, roi, "nmse");
  double num = 0.0, den = 0.0;
  ForRoi(r, [&](std::size_t i, std::size_t j) {
    double const d = test(i, j) - ref(i, j);
    num += d * d;
    den += ref(i, j) * ref(i, j);
  });
  if (den == 0.0) {
    throw InvalidInput("nmse: reference is zero on the ROI");
  }
  return num / den;
}

double Psnr(RealImage const &ref, RealImage const &test, std::optional<Rect> const &roi)
{
  Rect const r = Region(ref, test, roi, "psnr");
  double se = 0.0, peak = 0.0;
  ForRoi(r, [&](std::size_t i, std::size_t j) {
    double const d = test(i, j) - ref(i, j);
    se += d * d;
    peak = std::max(peak, std::abs(ref(i, j)));
  });
  if (se == 0.0) {
    return kPsnrCap;
  }
  double const mse = se / double(r.rows * r.cols);
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double Ssim(RealImage const &ref, RealImage const &test, std::optional<Rect> const &roi)
{
  Rect const r = Region(ref, test, roi, "ssim");
  if (r.rows < kWin || r.cols < kWin) {
    throw InvalidInput(fmt::format("ssim: ROI {}x{} smaller than the {}x{} window", r.rows, r.cols, kWin, kWin));
  }
  double lo = ref(r.row0, r.col0), hi = lo;
  ForRoi(r, [&](std::size_t i, std::size_t j) {
    lo = std::min(lo, ref(i, j));
    hi = std::max(hi, ref(i, j));
  });
  double const L = hi - lo;
  double const c1 = (0.01 * L) * (0.01 * L), c2 = (0.03 * L) * (0.03 * L);
  auto const w = GaussianTaps();

  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = r.row0; i + kWin <= r.row0 + r.rows; ++i) {
    for (std::size_t j = r.col0; j + kWin <= r.col0 + r.cols; ++j) {
      double mx = 0.0, my = 0.0, xx = 0.0, yy = 0.0, xy = 0.0;
      for (std::size_t a = 0; a < kWin; ++a) {
        for (std::size_t b = 0; b < kWin; ++b) {
          double const wt = w[a] * w[b];
          double const x = ref(i + a, j + b), y = test(i + a, j + b);
          mx += wt * x;
          my += wt * y;
          xx += wt * x * x;
          yy += wt * y * y;
          xy += wt * x * y;
        }
      }
      double const vx = xx - mx * mx, vy = yy - my * my, cxy = xy - mx * my;
      double const num = (2.0 * mx * my + c1) * (2.0 * cxy + c2);
      double const den = (mx * mx + my * my + c1) * (vx + vy + c2);
      // A flat, all-zero reference makes L and both constants vanish.
      total += den > 0.0 ? num / den : 1.0;
      ++count;
    }
  }
  return total / double(count);
}

Rect BoundingBox(RealImage const &img, double frac)
{
  if (img.data.empty()) {
    throw InvalidInput("bounding box of an empty image");
  }
  double const peak = *std::max_element(img.data.begin(), img.data.end());
  double const cut = frac * peak;
  std::size_t r0 = img.rows, r1 = 0, c0 = img.cols, c1 = 0;
  for (std::size_t i = 0; i < img.rows; ++i) {
    for (std::size_t j = 0; j < img.cols; ++j) {
      if (img(i, j) > cut) {
        r0 = std::min(r0, i);
        r1 = std::max(r1, i);
        c0 = std::min(c0, j);
        c1 = std::max(c1, j);
      }
    }
  }
  if (r0 > r1) {
    return Rect{0, 0, img.rows, img.cols};
  }
  return Rect{r0, c0, r1 - r0 + 1, c1 - c0 + 1};
}

EvalReport Evaluate(RealImage const &ref, RealImage const &test, std::optional<Rect> const &roi)
{
  return EvalReport{Nmse(ref, test, roi), Psnr(ref, test, roi), Ssim(ref, test, roi), roi};
}

void WriteMetricsTsv(std::ostream &os, std::vector<MetricsRow> const &rows)
{
  os << "method\tacceleration\tnmse\tpsnr_db\tssim\n";
  for (auto const &row : rows) {
    fmt::print(os, "{}\t{:.4f}\t{:.9e}\t{:.6f}\t{:.9f}\n", row.method, row.acceleration, row.report.nmse,
               row.report.psnr_db, row.report.ssim);
  }
}

std::vector<MetricsRow> ReadMetricsTsv(std::istream &is)
{
  std::string line;
  if (!std::getline(is, line) || line != "method\tacceleration\tnmse\tpsnr_db\tssim") {
    throw IoError("metrics file: missing or unexpected header");
  }
  std::vector<MetricsRow> rows;
  std::size_t n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) {
      continue;
    }
    std::istringstream ls(line);
    MetricsRow row;
    if (!std::getline(ls, row.method, '\t') ||
        !(ls >> row.acceleration >> row.report.nmse >> row.report.psnr_db >> row.report.ssim)) {
      throw IoError(fmt::format("metrics file line {}: expected 5 tab-separated fields", n));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void WriteMetricsTable(std::ostream &os, std::vector<MetricsRow> const &rows)
{
  fmt::print(os, "{:<18} {:>6} {:>12} {:>10} {:>8}\n", "method", "R", "NMSE", "PSNR(dB)", "SSIM");
  for (auto const &row : rows) {
    fmt::print(os, "{:<18} {:>6.2f} {:>12.4e} {:>10.2f} {:>8.4f}\n", row.method, row.acceleration,
               row.report.nmse, row.report.psnr_db, row.report.ssim);
  }
}

} // namespace ssd
