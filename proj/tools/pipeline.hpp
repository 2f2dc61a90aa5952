#pragma once

#include "config.hpp"

#include "spirit_sde/metrics.hpp"

#include <filesystem>
#include <string>

namespace ssd::cli {

// Stage files inside cfg.output_dir.
namespace files {
inline constexpr char const *truth = "truth.cxt";
inline constexpr char const *maps = "maps.cxt";
inline constexpr char const *mask = "mask.cxt";
inline constexpr char const *kspace = "kspace.cxt";
inline constexpr char const *simulate = "simulate.json";
inline constexpr char const *kernel = "kernel.cxt";
inline constexpr char const *calibrate = "calibrate.json";
inline constexpr char const *metrics = "metrics.tsv";
inline constexpr char const *table = "metrics.txt";
inline constexpr char const *metadata = "metadata.json";
} // namespace files

nlohmann::json Simulate(ExperimentConfig const &cfg);
nlohmann::json CalibrateStage(ExperimentConfig const &cfg);
nlohmann::json Recon(ExperimentConfig const &cfg, std::string const &method, bool trace);
// Scores every configured method's reconstruction against the simulated truth.
nlohmann::json EvalStage(ExperimentConfig const &cfg);
// simulate -> calibrate -> recon (each method) -> eval, then metadata.json.
nlohmann::json RunExperiment(ExperimentConfig const &cfg, bool trace);

// Metrics of one tensor pair; rank-3 tensors are root-sum-of-squares combined.
EvalReport EvalFiles(std::filesystem::path const &ref, std::filesystem::path const &test,
                     std::optional<Rect> const &roi);

// Line plot of one column of a tab-separated trace (log10 of positive values).
void TracePlot(std::filesystem::path const &trace, std::string const &column, std::filesystem::path const &out);

// 8-bit binary PGM of img mapped linearly from [lo, hi] to [0, 255].
void WritePgm(std::filesystem::path const &path, RealImage const &img, double lo, double hi);

} // namespace ssd::cli
