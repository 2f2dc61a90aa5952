#pragma once

#include "encoding.hpp"
#include "spirit.hpp"

#include "error.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace ssd {

struct ClassicConfig
{
  double lambda_dc = 1.0; // data-consistency penalty weight
  std::size_t max_iters = 200;
  double tol = 1e-6;
  double step_eta = 0.1;    // gradient-descent step on the self-consistency term
  double step_lambda = 0.1; // gradient-descent step on the data term

  void validate() const;
};

struct IterationRecord
{
  std::size_t iter = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double data_residual = 0.0; // ||M F x - y|| / ||y||
};

using IterationTrace = std::vector<IterationRecord>;

void WriteTrace(std::ostream &os, IterationTrace const &trace);

struct DivergenceError : NumericalError
{
  DivergenceError(std::string const &msg, IterationTrace t)
    : NumericalError(msg)
    , trace{std::move(t)}
  {
  }
  IterationTrace trace;
};

struct ClassicResult
{
  ComplexArray coil_images;
  IterationTrace trace;
};

ComplexArray ZeroFilled(MeasuredData const &y, CoilSensitivities const &S);

// ||(G - I) F x||^2 + lambda_dc ||M F x - y||^2 for coil images x.
double SpiritObjective(ComplexArray const &xc, MeasuredData const &y, PsiOperator const &psi, double lambda_dc);

/*
 * Conjugate gradient on the normal equations (Psi + lambda F^-1 M F) x = lambda F^-1 M y,
 * starting from the zero-filled coil images. Throws DivergenceError if the objective
 * ever rises by more than 1e-8 relative.
 */
ClassicResult CgSpirit(MeasuredData const &y, SpiritKernel const &kern, CoilSensitivities const &S, ClassicConfig const &cfg);

/*
 * Explicit gradient iteration, from x = 0 unless an initial estimate is given:
 *   x <- x - step_eta Psi(x) - step_lambda F^-1 M (M F x - y).
 * Descends ||(G - I) F x||^2 + (step_lambda / step_eta) ||M F x - y||^2; an increase of
 * that objective (oversized steps) is reported as DivergenceError.
 */
ClassicResult GdSpirit(MeasuredData const &y, SpiritKernel const &kern, CoilSensitivities const &S, ClassicConfig const &cfg,
                       ComplexArray const *initial = nullptr);

// Largest eigenvalue of a Hermitian PSD operator by power iteration.
double PowerIteration(std::function<ComplexArray(ComplexArray const &)> const &op, Shape const &shape,
                      std::size_t iters, std::uint64_t seed);

} // namespace ssd
