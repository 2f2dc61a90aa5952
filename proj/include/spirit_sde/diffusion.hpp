#pragma once

#include "encoding.hpp"
#include "rng.hpp"
#include "spirit.hpp"

#include <functional>
#include <vector>

namespace ssd {

/*
 * Linear beta(t) = beta_min + t (beta_max - beta_min) on [0, 1] and constant eta(t) = eta0.
 * sigma^2(t) = 1/2 int_0^t beta(tau) exp(eta0 (t - tau)) dtau is the per-component variance
 * of the coil-projected noise at time t.
 */
class NoiseSchedule
{
public:
  NoiseSchedule(double beta_min = 0.01, double beta_max = 348.0, double eta0 = 0.0, std::size_t n_steps = 1000);

  double betaMin() const { return beta_min_; }
  double betaMax() const { return beta_max_; }
  double eta0() const { return eta0_; }
  std::size_t steps() const { return n_; }

  double beta(double t) const { return beta_min_ + t * (beta_max_ - beta_min_); }
  double eta(double) const { return eta0_; }

  // sigma(i / n_steps) for i = 0..n_steps.
  std::vector<double> const &sigmaTable() const { return table_; }
  // sigma^2, linear in between grid points and exact at them.
  double variance(double t) const;
  double sigma(double t) const { return std::sqrt(variance(t)); }

private:
  double beta_min_, beta_max_, eta0_;
  std::size_t n_;
  std::vector<double> table_;
  std::vector<double> var_;
};

// Trapezoidal quadrature of sigma(t) with the given node count (at least 1000).
double SigmaAt(NoiseSchedule const &sched, double t, std::size_t nodes = 16385);

struct DiffusionState
{
  double t = 0.0;
  ComplexArray xc;
};

// x0 + sigma(t) S S* z, with z having N(0, 1) real and imaginary parts.
ComplexArray Perturb(ComplexArray const &x0, NoiseSchedule const &sched, double t, CoilSensitivities const &S,
                     ComplexArray const &z);

/*
 * Euler-Maruyama for dx = (eta/2) Psi(x) dt + sqrt(beta) S S* dw on the grid t_i = i / n_steps.
 * dw is circular complex with E|dw|^2 = dt, so each real component gains beta dt / 2 of variance.
 * The visitor sees every state including x0; throws NumericalError if the state norm grows
 * more than 1e6 times beyond its expected scale.
 */
void ForwardEM(ComplexArray const &x0, NoiseSchedule const &sched, PsiOperator const &psi, CoilSensitivities const &S,
               std::size_t n_steps, Rng &rng, std::function<void(DiffusionState const &)> const &visit);

std::vector<DiffusionState> ForwardEM(ComplexArray const &x0, NoiseSchedule const &sched, SpiritKernel const &kern,
                                      CoilSensitivities const &S, std::size_t n_steps, std::uint64_t seed);

// Terminal state only.
ComplexArray ForwardEMTerminal(ComplexArray const &x0, NoiseSchedule const &sched, PsiOperator const &psi,
                               CoilSensitivities const &S, std::size_t n_steps, Rng &rng);

/*
 * One step of the reverse SDE from t to t - dt:
 *   x <- x - (eta/2) Psi(x) dt + dv S S* score + sqrt(dv) S S* z,   dv = sigma^2(t) - sigma^2(t - dt).
 * A default-constructed PsiOperator is allowed when eta0 = 0.
 */
DiffusionState ReverseStep(DiffusionState const &state, ComplexArray const &score_value, NoiseSchedule const &sched,
                           PsiOperator const &psi, CoilSensitivities const &S, double dt, ComplexArray const &z);

} // namespace ssd
