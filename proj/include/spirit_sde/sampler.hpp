#pragma once

#include "diffusion.hpp"
#include "encoding.hpp"
#include "score.hpp"
#include "spirit.hpp"

#include <iosfwd>
#include <vector>

namespace ssd {

struct SamplerConfig
{
  double lambda1 = 1.0;  // predictor data-consistency weight
  double lambda2 = 1.0;  // corrector data-consistency weight
  double r = 0.16;       // corrector signal-to-noise ratio
  std::size_t n_steps = 1000;
  std::size_t m_corrector = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SamplerStep
{
  std::size_t step = 0; // predictor index i, counting down from n_steps - 1
  std::size_t corrector = 0; // 0 for the predictor, k for the k-th corrector update
  double t = 0.0;
  double g_norm = 0.0, m_norm = 0.0;
  double eps = 0.0, eps1 = 0.0, eps2 = 0.0;
  double residual = 0.0; // ||M F x - y|| / ||y|| after the update
};

using SamplerTrace = std::vector<SamplerStep>;

void WriteSamplerTrace(std::ostream &os, SamplerTrace const &trace);

// S S* F^-1 (M F xc - y): the data-consistency direction, re-expanded to coil space.
ComplexArray GuidanceM(ComplexArray const &xc, MeasuredData const &y, CoilSensitivities const &S);

/*
 * Predictor-corrector sampling of coil images on t_i = i / n_steps, from
 * x_N = sigma(1) S S* z. Predictor, with dv = sigma^2(t_{i+1}) - sigma^2(t_i):
 *   x <- x - (eta dt/2) Psi(x) + dv S S* (g - eps m) + sqrt(dv) S S* z,   eps = lambda1 ||g|| / ||m||
 * Corrector, M times:
 *   x <- x - (eta dt/2) Psi(x) + eps1 S S* (g - eps2 m) + sqrt(2 eps1) S S* z,
 *   eps1 = 2 (r ||z|| / ||g||)^2,  eps2 = lambda2 ||g|| / ||m||
 * dt = 1 / n_steps. eps and eps2 are zero when m vanishes.
 */
ComplexArray PcSample(ScoreFunction const &score, MeasuredData const &y, SpiritKernel const &kern,
                      CoilSensitivities const &S, NoiseSchedule const &sched, SamplerConfig const &cfg,
                      SamplerTrace *trace = nullptr);

// Same iteration on the combined image, with A = M F S for data consistency and no Psi term.
ComplexArray VeSdeSample(ScoreFunction const &score, MeasuredData const &y, CoilSensitivities const &S,
                         NoiseSchedule const &sched, SamplerConfig const &cfg, SamplerTrace *trace = nullptr);

} // namespace ssd
