#pragma once

#include "spirit_sde/classic.hpp"
#include "spirit_sde/sampler.hpp"
#include "spirit_sde/simulation.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ssd::cli {

inline std::vector<std::string> const kMethods{"zero-filled", "cg-spirit", "gd-spirit", "spirit-diffusion", "ve-sde"};

struct ScheduleParams
{
  double beta_min = 0.01;
  double beta_max = 348.0;
  double eta0 = 0.0;
};

struct ScoreParams
{
  std::size_t training_samples = 64;
  std::uint64_t training_seed = 1000;
  double ridge = 1e-6;
};

struct ExperimentConfig
{
  PhantomSpec phantom{.rows = 64, .cols = 64, .kind = PhantomKind::SheppLogan, .seed = 1};
  std::size_t coils = 8;
  std::uint64_t coil_seed = 101;
  std::size_t box_smooth = 0; // corrupts the maps handed to reconstruction; 0 keeps them
  MaskSpec mask{.seed = 5};
  double noise_std = 0.0;
  std::uint64_t noise_seed = 1;
  std::size_t kernel_size = 5;
  double tikhonov = 1e-3;
  ScheduleParams schedule;
  SamplerConfig sampler{.lambda1 = 16.0, .lambda2 = 16.0, .n_steps = 2000, .m_corrector = 0, .seed = 3};
  ScoreParams score;
  ClassicConfig classic{.lambda_dc = 1.0, .max_iters = 500, .tol = 1e-8, .step_eta = 0.5, .step_lambda = 0.5};
  std::vector<std::string> methods{"zero-filled"};
  std::filesystem::path output_dir = "out";
  std::optional<Rect> roi; // empty: bounding box of the reference
  double error_window = 0.25;

  void validate() const;
};

// Reads a YAML config (or a metadata.json written by a run, whose "config" member is used).
ExperimentConfig LoadConfig(std::filesystem::path const &path);
ExperimentConfig ParseConfig(std::string const &text, std::string const &origin = "<config>");

nlohmann::json ToJson(ExperimentConfig const &cfg);

} // namespace ssd::cli
