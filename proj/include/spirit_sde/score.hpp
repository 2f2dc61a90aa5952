#pragma once

#include "diffusion.hpp"
#include "encoding.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace ssd {

// Estimate of grad_x log p_t(x). Implementations are immutable and shareable across chains.
class ScoreFunction
{
public:
  virtual ~ScoreFunction() = default;
  // Coil images (nc, rows, cols) to a coil-domain score of the same shape.
  virtual ComplexArray evaluate(ComplexArray const &xc, double t) const = 0;
  // Combined image (rows, cols) to a combined-domain score.
  virtual ComplexArray combined(ComplexArray const &x, double t) const = 0;
};

/*
 * s(x, t) = -S S* (x - mean) / (v0 + sigma^2(t)).
 * v0 is the per-component variance of the combined image; on the combined domain the
 * score is -(x - S* mean) / (v0 + sigma^2) on the map support and zero elsewhere.
 */
class LinearScore final : public ScoreFunction
{
public:
  LinearScore(ComplexArray mean, double v0, NoiseSchedule sched, CoilSensitivities S);

  ComplexArray evaluate(ComplexArray const &xc, double t) const override;
  ComplexArray combined(ComplexArray const &x, double t) const override;

  ComplexArray const &mean() const { return mean_; }
  double v0() const { return v0_; }
  // Rescales the output, for checking optimality against perturbed variants.
  LinearScore scaled(double f) const;

private:
  ComplexArray mean_, combined_mean_;
  double v0_;
  double scale_ = 1.0;
  NoiseSchedule sched_;
  CoilSensitivities S_;
};

struct GaussianPrior
{
  ComplexArray mean; // coil-consistent
  double v0 = 1.0;   // per-component variance of the combined image

  void validate(CoilSensitivities const &S) const;
  // mean + sqrt(v0) S w, w with N(0, 1) real and imaginary parts.
  ComplexArray sample(CoilSensitivities const &S, Rng &rng) const;
};

LinearScore AnalyticGaussianScore(GaussianPrior const &prior, NoiseSchedule const &sched, CoilSensitivities const &S);

struct DsmOptions
{
  double t_min = 1e-3;
  // Measure the residual as ||sigma S* S S* s + S* z|| instead of ||sigma S* s + S* z||.
  bool project_score = false;
};

struct DsmEstimate
{
  double loss = 0.0;
  double std_error = 0.0;
  std::vector<double> terms; // per draw, batch-major in the order given
};

// Score as seen by the loss: (x(t), t, z) -> s. Having z lets tests build exact oracles.
using DsmScore = std::function<ComplexArray(ComplexArray const &xt, double t, ComplexArray const &z)>;

/*
 * Monte-Carlo denoising score matching loss: for every sample and each of n_time_draws,
 * t ~ U[t_min, 1], z with N(0, 1) parts, x(t) = x0 + sigma S S* z, term ||sigma S* s + S* z||^2.
 * Draws are seeded per sample content, so the loss does not depend on batch order.
 */
DsmEstimate DsmLoss(DsmScore const &score, std::vector<ComplexArray> const &batch, NoiseSchedule const &sched,
                    CoilSensitivities const &S, std::size_t n_time_draws, std::uint64_t seed, DsmOptions const &opt = {});
DsmEstimate DsmLoss(ScoreFunction const &score, std::vector<ComplexArray> const &batch, NoiseSchedule const &sched,
                    CoilSensitivities const &S, std::size_t n_time_draws, std::uint64_t seed, DsmOptions const &opt = {});

/*
 * Fits the linear family: mean is the dataset mean, v0 the unbiased per-component variance of
 * S*(u - mean) over the support, floored at ridge.
 */
LinearScore FitLinearScore(std::vector<ComplexArray> const &dataset, NoiseSchedule const &sched,
                           CoilSensitivities const &S, double ridge);

} // namespace ssd
