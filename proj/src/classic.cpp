#include "spirit_sde/classic.hpp"

#include "spirit_sde/rng.hpp"

#include <fmt/format.h>

#include <cmath>
#include <ostream>

namespace ssd {

void ClassicConfig::validate() const
{
  if (!(lambda_dc >= 0.0) || max_iters == 0 || !(tol > 0.0 && tol < 1.0) || !(step_eta > 0.0) ||
      !(step_lambda > 0.0)) {
    throw InvalidInput("classic config: lambda_dc >= 0, max_iters > 0, 0 < tol < 1 and positive steps required");
  }
}

void WriteTrace(std::ostream &os, IterationTrace const &trace)
{
  os << "iter\tobjective\tgrad_norm\tdata_residual\n";
  for (auto const &r : trace) {
    os << fmt::format("{}\t{:.12e}\t{:.12e}\t{:.12e}\n", r.iter, r.objective, r.grad_norm, r.data_residual);
  }
}

ComplexArray ZeroFilled(MeasuredData const &y, CoilSensitivities const &S)
{
  return AdjointA(y.y, S, y.mask);
}

namespace {

struct Problem
{
  MeasuredData const &y;
  PsiOperator psi;
  double ynorm;

  Problem(MeasuredData const &data, SpiritKernel const &kern, CoilSensitivities const &S)
    : y{data}
    , psi{kern, data.y.rows(), data.y.cols()}
    , ynorm{Norm(data.y)}
  {
    if (data.y.rank() != 3 || data.y.slices() != kern.coils() || S.coils() != kern.coils() ||
        S.rows() != data.y.rows() || S.cols() != data.y.cols()) {
      throw InvalidInput(fmt::format(
        "measurement {} does not match kernel ({} coils) or sensitivities", ShapeString(data.y.shape()),
        kern.coils()));
    }
  }

  // M F x - y
  ComplexArray dataResidual(ComplexArray const &x) const { return ApplyMask(FFT2c(x), y.mask) - y.y; }

  // F^-1 M v
  ComplexArray backproject(ComplexArray const &v) const { return IFFT2c(ApplyMask(v, y.mask)); }

  double relResidual(ComplexArray const &r) const { return ynorm > 0.0 ? Norm(r) / ynorm : Norm(r); }
};

void CheckMonotone(IterationTrace const &trace, char const *who)
{
  auto const n = trace.size();
  if (n < 2) {
    return;
  }
  double const prev = trace[n - 2].objective, cur = trace[n - 1].objective;
  if (!std::isfinite(cur) || cur - prev > 1e-8 * std::abs(prev)) {
    throw DivergenceError(
      fmt::format("{}: objective rose from {:.6e} to {:.6e} at iteration {}", who, prev, cur, trace.back().iter),
      trace);
  }
}

} // namespace

double SpiritObjective(ComplexArray const &xc, MeasuredData const &y, PsiOperator const &psi, double lambda_dc)
{
  return psi.energy(xc) + lambda_dc * SquaredNorm(ApplyMask(FFT2c(xc), y.mask) - y.y);
}

ClassicResult CgSpirit(MeasuredData const &y, SpiritKernel const &kern, CoilSensitivities const &S, ClassicConfig const &cfg)
{
  cfg.validate();
  Problem const P(y, kern, S);
  double const lam = cfg.lambda_dc;
  auto const normal = [&](ComplexArray const &v) {
    ComplexArray out = P.psi.apply(v);
    if (lam > 0.0) {
      out.axpy(lam, P.backproject(FFT2c(v)));
    }
    return out;
  };

  ComplexArray x = IFFT2c(y.y);
  ComplexArray b = lam * IFFT2c(y.y);
  ComplexArray r = b - normal(x);
  ComplexArray p = r;
  double rr = SquaredNorm(r);
  double const r0 = std::sqrt(rr);

  ClassicResult res;
  auto record = [&](std::size_t it) {
    auto const dr = P.dataResidual(x);
    double const obj = P.psi.energy(x) + lam * SquaredNorm(dr);
    // The objective's gradient is 2 (H x - b).
    res.trace.push_back({it, obj, 2.0 * std::sqrt(rr), P.relResidual(dr)});
    CheckMonotone(res.trace, "cg-spirit");
  };
  record(0);

  for (std::size_t it = 1; it <= cfg.max_iters && std::sqrt(rr) > cfg.tol * r0; ++it) {
    ComplexArray const Ap = normal(p);
    double const pAp = Inner(p, Ap).real();
    if (!(pAp > 0.0)) {
      break;
    }
    double const alpha = rr / pAp;
    x.axpy(alpha, p);
    r.axpy(-alpha, Ap);
    double const rr_new = SquaredNorm(r);
    p *= rr_new / rr;
    p += r;
    rr = rr_new;
    record(it);
  }
  res.coil_images = std::move(x);
  return res;
}

ClassicResult GdSpirit(MeasuredData const &y, SpiritKernel const &kern, CoilSensitivities const &S, ClassicConfig const &cfg,
                       ComplexArray const *initial)
{
  cfg.validate();
  Problem const P(y, kern, S);
  double const lam_eff = cfg.step_lambda / cfg.step_eta;
  ComplexArray x(y.y.shape());
  if (initial) {
    RequireSameShape(*initial, x, "gd-spirit initial estimate");
    x = *initial;
  }

  ClassicResult res;
  double g0 = 0.0;
  for (std::size_t it = 0;; ++it) {
    auto const dr = P.dataResidual(x);
    ComplexArray const psix = P.psi.apply(x);
    ComplexArray const bp = P.backproject(dr);
    double const obj = P.psi.energy(x) + lam_eff * SquaredNorm(dr);
    ComplexArray grad = psix;
    grad.axpy(lam_eff, bp);
    double const gn = 2.0 * Norm(grad);
    if (it == 0) {
      g0 = gn;
    }
    res.trace.push_back({it, obj, gn, P.relResidual(dr)});
    CheckMonotone(res.trace, "gd-spirit");
    if (it == cfg.max_iters || gn <= cfg.tol * g0) {
      break;
    }
    x.axpy(-cfg.step_eta, psix);
    x.axpy(-cfg.step_lambda, bp);
  }
  res.coil_images = std::move(x);
  return res;
}

double PowerIteration(std::function<ComplexArray(ComplexArray const &)> const &op, Shape const &shape,
                      std::size_t iters, std::uint64_t seed)
{
  Rng rng(seed);
  ComplexArray x = NormalArray(shape, rng);
  double est = 0.0;
  for (std::size_t it = 0; it < iters; ++it) {
    x *= 1.0 / Norm(x);
    ComplexArray y = op(x);
    est = Inner(x, y).real();
    x = std::move(y);
  }
  return est;
}

} // namespace ssd
