#pragma once

#include "encoding.hpp"
#include "tensor.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ssd {

// Returned by Psnr when the images agree exactly on the ROI.
inline constexpr double kPsnrCap = 300.0;

// All metrics take magnitude images; an empty ROI means the whole image.
double Nmse(RealImage const &ref, RealImage const &test, std::optional<Rect> const &roi = {});
double Psnr(RealImage const &ref, RealImage const &test, std::optional<Rect> const &roi = {});
// Mean local SSIM over every 11x11 Gaussian window (std 1.5) lying inside the ROI.
double Ssim(RealImage const &ref, RealImage const &test, std::optional<Rect> const &roi = {});

// Smallest rectangle holding every pixel above frac * max(img).
Rect BoundingBox(RealImage const &img, double frac = 0.05);

struct EvalReport
{
  double nmse = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  std::optional<Rect> roi;
};

EvalReport Evaluate(RealImage const &ref, RealImage const &test, std::optional<Rect> const &roi = {});

struct MetricsRow
{
  std::string method;
  double acceleration = 1.0;
  EvalReport report;
};

// Tab-separated: method, acceleration, nmse, psnr_db, ssim.
void WriteMetricsTsv(std::ostream &os, std::vector<MetricsRow> const &rows);
std::vector<MetricsRow> ReadMetricsTsv(std::istream &is);
void WriteMetricsTable(std::ostream &os, std::vector<MetricsRow> const &rows);

} // namespace ssd
