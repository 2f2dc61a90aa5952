#include "pipeline.hpp"

#include "spirit_sde/error.hpp"
#include "spirit_sde/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ssd::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path At(ExperimentConfig const &cfg, std::string const &name) { return cfg.output_dir / name; }

json ReadJson(fs::path const &path)
{
  std::ifstream in(path);
  if (!in) {
    throw IoError(fmt::format("cannot open '{}' (run the earlier stage first)", path.string()));
  }
  try {
    return json::parse(in);
  } catch (json::exception const &e) {
    throw IoError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void WriteJson(fs::path const &path, json const &j)
{
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) {
    throw IoError(fmt::format("cannot write '{}'", path.string()));
  }
}

void WriteText(fs::path const &path, std::string const &text)
{
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    throw IoError(fmt::format("cannot write '{}'", path.string()));
  }
}

json RectJson(Rect const &r) { return {{"row0", r.row0}, {"col0", r.col0}, {"rows", r.rows}, {"cols", r.cols}}; }

Rect JsonRect(json const &j)
{
  return Rect{j.at("row0").get<std::size_t>(), j.at("col0").get<std::size_t>(), j.at("rows").get<std::size_t>(),
              j.at("cols").get<std::size_t>()};
}

MeasuredData LoadMeasurement(ExperimentConfig const &cfg)
{
  json const sim = ReadJson(At(cfg, files::simulate));
  MeasuredData y;
  y.y = ReadCXT1(At(cfg, files::kspace));
  y.mask = SamplingMask::FromArray(ReadCXT1(At(cfg, files::mask)), JsonRect(sim.at("acs")));
  y.noise_std = sim.at("noise_std").get<double>();
  return y;
}

CoilSensitivities LoadMaps(ExperimentConfig const &cfg, bool for_recon)
{
  CoilSensitivities S(ReadCXT1(At(cfg, files::maps)));
  if (for_recon && cfg.box_smooth > 1) {
    return BoxSmoothMaps(S, cfg.box_smooth);
  }
  return S;
}

SpiritKernel LoadKernel(ExperimentConfig const &cfg)
{
  json const meta = ReadJson(At(cfg, files::calibrate));
  SpiritKernel k;
  k.weights = ReadCXT1(At(cfg, files::kernel));
  if (k.weights.rank() != 4) {
    throw IoError(fmt::format("{}: expected a rank-4 kernel", At(cfg, files::kernel).string()));
  }
  k.k_rows = k.weights.shape()[2];
  k.k_cols = k.weights.shape()[3];
  k.tikhonov = meta.at("tikhonov").get<double>();
  k.calib_residual = meta.at("calib_residual").get<double>();
  return k;
}

RealImage ToMagnitude(ComplexArray const &a)
{
  if (a.rank() == 3) {
    return SosCombine(a);
  }
  if (a.rank() == 2) {
    return Magnitude(a);
  }
  throw IoError(fmt::format("expected a 2D image or 3D coil images, got {}", ShapeString(a.shape())));
}

std::vector<ComplexArray> TrainingSet(ExperimentConfig const &cfg, CoilSensitivities const &truth_maps)
{
  std::vector<ComplexArray> ds;
  ds.reserve(cfg.score.training_samples);
  for (std::size_t k = 0; k < cfg.score.training_samples; ++k) {
    PhantomSpec spec = cfg.phantom;
    spec.seed = cfg.score.training_seed + k;
    ds.push_back(CoilExpand(MakePhantom(spec), truth_maps));
  }
  return ds;
}

template <typename Trace>
void MaybeTrace(bool on, ExperimentConfig const &cfg, std::string const &method, Trace const &trace,
                void (*write)(std::ostream &, Trace const &), json &info)
{
  if (!on) {
    return;
  }
  std::string const name = fmt::format("trace_{}.tsv", method);
  std::ostringstream os;
  write(os, trace);
  WriteText(At(cfg, name), os.str());
  info["trace"] = name;
}

} // namespace

void WritePgm(fs::path const &path, RealImage const &img, double lo, double hi)
{
  std::string out = fmt::format("P5\n{} {}\n255\n", img.cols, img.rows);
  double const span = hi > lo ? hi - lo : 1.0;
  for (double const v : img.data) {
    double const u = std::clamp((v - lo) / span, 0.0, 1.0);
    out.push_back(char(static_cast<unsigned char>(std::lround(255.0 * u))));
  }
  WriteText(path, out);
}

json Simulate(ExperimentConfig const &cfg)
{
  fs::create_directories(cfg.output_dir);
  auto const rows = cfg.phantom.rows, cols = cfg.phantom.cols;
  ComplexArray const img = MakePhantom(cfg.phantom);
  auto const S = MakeCoilMaps(rows, cols, cfg.coils, cfg.coil_seed);
  auto const mask = MakeMask(rows, cols, cfg.mask);
  auto const y = SynthesizeMeasurement(img, S, mask, cfg.noise_std, cfg.noise_seed);

  WriteCXT1(At(cfg, files::truth), img);
  WriteCXT1(At(cfg, files::maps), S.maps());
  WriteCXT1(At(cfg, files::mask), mask.toArray());
  WriteCXT1(At(cfg, files::kspace), y.y);

  json j{{"acs", RectJson(mask.acs())},
         {"acceleration", mask.acceleration()},
         {"samples", mask.popcount()},
         {"noise_std", cfg.noise_std},
         {"files", {files::truth, files::maps, files::mask, files::kspace}}};
  WriteJson(At(cfg, files::simulate), j);
  return j;
}

json CalibrateStage(ExperimentConfig const &cfg)
{
  auto const y = LoadMeasurement(cfg);
  SpiritKernel kern;
  try {
    kern = Calibrate(ExtractACS(y.y, y.mask.acs()), cfg.kernel_size, cfg.kernel_size, cfg.tikhonov);
  } catch (NumericalError const &e) {
    throw NumericalError(fmt::format("calibrate: {}", e.what()));
  }
  WriteCXT1(At(cfg, files::kernel), kern.weights);
  json j{{"k_rows", kern.k_rows},
         {"k_cols", kern.k_cols},
         {"tikhonov", kern.tikhonov},
         {"calib_residual", kern.calib_residual},
         {"file", files::kernel}};
  WriteJson(At(cfg, files::calibrate), j);
  return j;
}

json Recon(ExperimentConfig const &cfg, std::string const &method, bool trace)
{
  if (std::find(kMethods.begin(), kMethods.end(), method) == kMethods.end()) {
    throw ConfigError(fmt::format("unknown method '{}'", method));
  }
  auto const y = LoadMeasurement(cfg);
  auto const S = LoadMaps(cfg, true);
  json info{{"method", method}};

  ComplexArray result;
  try {
    if (method == "zero-filled") {
      result = ZeroFilled(y, S);
    } else if (method == "cg-spirit" || method == "gd-spirit") {
      auto const kern = LoadKernel(cfg);
      ClassicResult r;
      if (method == "cg-spirit") {
        r = CgSpirit(y, kern, S, cfg.classic);
      } else {
        ComplexArray const start = IFFT2c(y.y);
        r = GdSpirit(y, kern, S, cfg.classic, &start);
      }
      result = std::move(r.coil_images);
      info["iterations"] = r.trace.empty() ? 0 : r.trace.back().iter;
      info["objective"] = r.trace.empty() ? 0.0 : r.trace.back().objective;
      MaybeTrace(trace, cfg, method, r.trace, &WriteTrace, info);
    } else {
      auto const truth_maps = LoadMaps(cfg, false);
      auto const data = TrainingSet(cfg, truth_maps);
      SamplerTrace st;
      if (method == "spirit-diffusion") {
        NoiseSchedule const sched(cfg.schedule.beta_min, cfg.schedule.beta_max, cfg.schedule.eta0,
                                  cfg.sampler.n_steps);
        auto const score = FitLinearScore(data, sched, S, cfg.score.ridge);
        info["score_v0"] = score.v0();
        result = PcSample(score, y, LoadKernel(cfg), S, sched, cfg.sampler, &st);
      } else {
        NoiseSchedule const sched(cfg.schedule.beta_min, cfg.schedule.beta_max, 0.0, cfg.sampler.n_steps);
        auto const score = FitLinearScore(data, sched, S, cfg.score.ridge);
        info["score_v0"] = score.v0();
        result = VeSdeSample(score, y, S, sched, cfg.sampler, &st);
      }
      info["final_residual"] = st.empty() ? 0.0 : st.back().residual;
      MaybeTrace(trace, cfg, method, st, &WriteSamplerTrace, info);
    }
  } catch (NumericalError const &e) {
    throw NumericalError(fmt::format("recon {}: {}", method, e.what()));
  }

  std::string const tensor = fmt::format("recon_{}.cxt", method);
  WriteCXT1(At(cfg, tensor), result);
  // Images come from the stored tensor so they match what eval reads.
  RealImage const mag = ToMagnitude(ReadCXT1(At(cfg, tensor)));
  RealImage const ref = Magnitude(ReadCXT1(At(cfg, files::truth)));
  auto const [lo, hi] = std::minmax_element(mag.data.begin(), mag.data.end());
  RealImage err(mag.rows, mag.cols);
  for (std::size_t i = 0; i < err.data.size(); ++i) {
    err.data[i] = std::abs(mag.data[i] - ref.data[i]);
  }
  std::string const image = fmt::format("recon_{}.pgm", method), error = fmt::format("error_{}.pgm", method);
  WritePgm(At(cfg, image), mag, *lo, *hi);
  WritePgm(At(cfg, error), err, 0.0, cfg.error_window);

  info["tensor"] = tensor;
  info["image"] = {{"file", image}, {"window", {*lo, *hi}}};
  info["error_map"] = {{"file", error}, {"window", {0.0, cfg.error_window}}};
  WriteJson(At(cfg, fmt::format("recon_{}.json", method)), info);
  return info;
}

EvalReport EvalFiles(fs::path const &ref, fs::path const &test, std::optional<Rect> const &roi)
{
  RealImage const r = ToMagnitude(ReadCXT1(ref));
  RealImage const t = ToMagnitude(ReadCXT1(test));
  return Evaluate(r, t, roi ? roi : std::optional<Rect>(BoundingBox(r)));
}

json EvalStage(ExperimentConfig const &cfg)
{
  RealImage const ref = Magnitude(ReadCXT1(At(cfg, files::truth)));
  Rect const roi = cfg.roi.value_or(BoundingBox(ref));
  double const accel = ReadJson(At(cfg, files::simulate)).at("acceleration").get<double>();
  std::vector<MetricsRow> rows;
  for (auto const &m : cfg.methods) {
    RealImage const test = ToMagnitude(ReadCXT1(At(cfg, fmt::format("recon_{}.cxt", m))));
    rows.push_back({m, accel, Evaluate(ref, test, roi)});
  }
  std::ostringstream tsv, table;
  WriteMetricsTsv(tsv, rows);
  WriteMetricsTable(table, rows);
  WriteText(At(cfg, files::metrics), tsv.str());
  WriteText(At(cfg, files::table), table.str());

  json j{{"roi", RectJson(roi)}, {"file", files::metrics}, {"rows", json::array()}};
  for (auto const &r : rows) {
    j["rows"].push_back(
      {{"method", r.method}, {"nmse", r.report.nmse}, {"psnr_db", r.report.psnr_db}, {"ssim", r.report.ssim}});
  }
  return j;
}

json RunExperiment(ExperimentConfig const &cfg, bool trace)
{
  json meta{{"config", ToJson(cfg)}};
  meta["simulate"] = Simulate(cfg);
  meta["calibrate"] = CalibrateStage(cfg);
  for (auto const &m : cfg.methods) {
    meta["recon"][m] = Recon(cfg, m, trace);
  }
  meta["eval"] = EvalStage(cfg);
  WriteJson(At(cfg, files::metadata), meta);
  return meta;
}

void TracePlot(fs::path const &trace, std::string const &column, fs::path const &out)
{
  std::ifstream in(trace);
  if (!in) {
    throw IoError(fmt::format("cannot open trace '{}'", trace.string()));
  }
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string h;
    while (std::getline(hs, h, '\t')) {
      header.push_back(h);
    }
  }
  auto const it = std::find(header.begin(), header.end(), column);
  if (it == header.end()) {
    throw ConfigError(fmt::format("trace '{}' has no column '{}'", trace.string(), column));
  }
  std::size_t const col = std::size_t(it - header.begin());
  std::vector<double> ys;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string cell;
    for (std::size_t k = 0; k <= col && std::getline(ls, cell, '\t'); ++k) {
    }
    double v = 0.0;
    try {
      v = std::stod(cell);
    } catch (std::exception const &) {
      throw IoError(fmt::format("trace '{}': bad value '{}'", trace.string(), cell));
    }
    if (v > 0.0 && std::isfinite(v)) {
      ys.push_back(std::log10(v));
    }
  }
  if (ys.empty()) {
    throw IoError(fmt::format("trace '{}': no positive values in column '{}'", trace.string(), column));
  }

  std::size_t const W = 480, H = 240, pad = 10;
  RealImage canvas(H, W, 1.0);
  for (std::size_t x = pad; x < W - pad; ++x) {
    canvas(H - pad, x) = 0.5;
  }
  for (std::size_t r = pad; r <= H - pad; ++r) {
    canvas(r, pad) = 0.5;
  }
  auto const [lo, hi] = std::minmax_element(ys.begin(), ys.end());
  double const span = *hi > *lo ? *hi - *lo : 1.0;
  auto px = [&](std::size_t i) {
    double const u = ys.size() > 1 ? double(i) / double(ys.size() - 1) : 0.5;
    return std::pair<double, double>{pad + u * double(W - 2 * pad - 1),
                                     double(H - pad - 1) - (ys[i] - *lo) / span * double(H - 2 * pad - 1)};
  };
  for (std::size_t i = 0; i + 1 < std::max<std::size_t>(ys.size(), 2); ++i) {
    auto const [x0, y0] = px(i);
    auto const [x1, y1] = px(std::min(i + 1, ys.size() - 1));
    std::size_t const n = std::size_t(std::max(std::abs(x1 - x0), std::abs(y1 - y0))) + 1;
    for (std::size_t s = 0; s <= n; ++s) {
      double const f = double(s) / double(n);
      canvas(std::size_t(std::lround(y0 + f * (y1 - y0))), std::size_t(std::lround(x0 + f * (x1 - x0)))) = 0.0;
    }
  }
  WritePgm(out, canvas, 0.0, 1.0);
}

} // namespace ssd::cli
