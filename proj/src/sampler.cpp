#include "spirit_sde/sampler.hpp"

#include "spirit_sde/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <ostream>

namespace ssd {

namespace {

double Ratio(double a, double b) { return b > 0.0 ? a / b : 0.0; }

double DataResidual(ComplexArray const &xc, MeasuredData const &y)
{
  ComplexArray r = ApplyMask(FFT2c(xc), y.mask);
  r -= y.y;
  return Ratio(Norm(r), Norm(y.y));
}

void CheckState(ComplexArray const &x, std::size_t step, char const *who)
{
  if (!x.allFinite()) {
    throw NumericalError(fmt::format("{}: non-finite state at step {}", who, step));
  }
}

// Shared predictor-corrector loop. Ops supplies the domain-specific pieces.
template <typename Ops>
ComplexArray RunPc(Ops const &ops, NoiseSchedule const &sched, SamplerConfig const &cfg, SamplerTrace *trace,
                   char const *who)
{
  cfg.validate();
  Rng rng(cfg.seed);
  auto noise = [&] { return NormalArray(ops.shape(), rng); };

  ComplexArray x = ops.project(noise());
  x *= sched.sigma(1.0);

  double const N = double(cfg.n_steps);
  for (std::size_t ii = cfg.n_steps; ii-- > 0;) {
    double const t1 = double(ii + 1) / N, t0 = double(ii) / N;
    double const dv = sched.variance(t1) - sched.variance(t0);
    double const eta = sched.eta(t1) / N;

    ComplexArray z = noise();
    ComplexArray g = ops.score(x, t1);
    ComplexArray m = ops.guidance(x);
    double const gn = Norm(g), mn = Norm(m);
    double const eps = cfg.lambda1 * Ratio(gn, mn);
    ComplexArray step = g;
    step.axpy(-eps, m);
    step *= dv;
    step.axpy(std::sqrt(dv), z);
    ComplexArray next = x;
    ops.drift(next, x, eta);
    next += ops.project(step);
    x = std::move(next);
    CheckState(x, ii, who);
    if (trace) {
      trace->push_back({ii, 0, t1, gn, mn, eps, 0.0, 0.0, ops.residual(x)});
    }

    for (std::size_t k = 1; k <= cfg.m_corrector; ++k) {
      z = noise();
      g = ops.score(x, t0);
      m = ops.guidance(x);
      double const gk = Norm(g), mk = Norm(m);
      double const eps1 = gk > 0.0 ? 2.0 * std::pow(cfg.r * Norm(z) / gk, 2) : 0.0;
      double const eps2 = cfg.lambda2 * Ratio(gk, mk);
      ComplexArray c = g;
      c.axpy(-eps2, m);
      c *= eps1;
      c.axpy(std::sqrt(2.0 * eps1), z);
      ComplexArray nc = x;
      ops.drift(nc, x, eta);
      nc += ops.project(c);
      x = std::move(nc);
      CheckState(x, ii, who);
      if (trace) {
        trace->push_back({ii, k, t0, gk, mk, 0.0, eps1, eps2, ops.residual(x)});
      }
    }
  }
  return x;
}

struct CoilOps
{
  ScoreFunction const &sf;
  MeasuredData const &y;
  CoilSensitivities const &S;
  PsiOperator const *psi;

  Shape shape() const { return {S.coils(), S.rows(), S.cols()}; }
  ComplexArray project(ComplexArray const &v) const { return CoilProject(v, S); }
  ComplexArray score(ComplexArray const &x, double t) const { return sf.evaluate(x, t); }
  ComplexArray guidance(ComplexArray const &x) const { return GuidanceM(x, y, S); }
  void drift(ComplexArray &out, ComplexArray const &x, double eta) const
  {
    if (psi && eta > 0.0) {
      out.axpy(-0.5 * eta, psi->apply(x));
    }
  }
  double residual(ComplexArray const &x) const { return DataResidual(x, y); }
};

struct CombinedOps
{
  ScoreFunction const &sf;
  MeasuredData const &y;
  CoilSensitivities const &S;

  Shape shape() const { return {S.rows(), S.cols()}; }
  ComplexArray project(ComplexArray const &v) const { return v; }
  ComplexArray score(ComplexArray const &x, double t) const { return sf.combined(x, t); }
  ComplexArray guidance(ComplexArray const &x) const
  {
    ComplexArray r = ForwardA(x, S, y.mask);
    r -= y.y;
    return CoilCombine(IFFT2c(r), S);
  }
  void drift(ComplexArray &, ComplexArray const &, double) const {}
  double residual(ComplexArray const &x) const { return DataResidual(CoilExpand(x, S), y); }
};

} // namespace

void SamplerConfig::validate() const
{
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !(r > 0.0) || n_steps == 0) {
    throw InvalidInput(fmt::format("sampler config: need lambda1, lambda2 >= 0, r > 0 and n_steps >= 1 "
                                   "(got {}, {}, {}, {})",
                                   lambda1, lambda2, r, n_steps));
  }
}

void WriteSamplerTrace(std::ostream &os, SamplerTrace const &trace)
{
  os << "step\tcorrector\tt\tg_norm\tm_norm\teps\teps1\teps2\tresidual\n";
  for (auto const &s : trace) {
    os << fmt::format("{}\t{}\t{:.6f}\t{:.9e}\t{:.9e}\t{:.9e}\t{:.9e}\t{:.9e}\t{:.9e}\n", s.step, s.corrector, s.t,
                      s.g_norm, s.m_norm, s.eps, s.eps1, s.eps2, s.residual);
  }
}

ComplexArray GuidanceM(ComplexArray const &xc, MeasuredData const &y, CoilSensitivities const &S)
{
  RequireSameShape(xc, y.y, "guidance");
  ComplexArray r = ApplyMask(FFT2c(xc), y.mask);
  r -= y.y;
  return CoilProject(IFFT2c(r), S);
}

ComplexArray PcSample(ScoreFunction const &score, MeasuredData const &y, SpiritKernel const &kern,
                      CoilSensitivities const &S, NoiseSchedule const &sched, SamplerConfig const &cfg,
                      SamplerTrace *trace)
{
  if (y.y.slices() != S.coils() || y.y.rows() != S.rows() || y.y.cols() != S.cols()) {
    throw InvalidInput(fmt::format("pc_sample: data {} does not match maps", ShapeString(y.y.shape())));
  }
  PsiOperator psi;
  bool const drift = sched.eta0() > 0.0;
  if (drift) {
    if (kern.coils() != S.coils()) {
      throw InvalidInput(fmt::format("pc_sample: kernel has {} coils, data {}", kern.coils(), S.coils()));
    }
    psi = PsiOperator(kern, S.rows(), S.cols());
  }
  return RunPc(CoilOps{score, y, S, drift ? &psi : nullptr}, sched, cfg, trace, "pc_sample");
}

ComplexArray VeSdeSample(ScoreFunction const &score, MeasuredData const &y, CoilSensitivities const &S,
                         NoiseSchedule const &sched, SamplerConfig const &cfg, SamplerTrace *trace)
{
  if (y.y.slices() != S.coils() || y.y.rows() != S.rows() || y.y.cols() != S.cols()) {
    throw InvalidInput(fmt::format("ve_sde_sample: data {} does not match maps", ShapeString(y.y.shape())));
  }
  return RunPc(CombinedOps{score, y, S}, sched, cfg, trace, "ve_sde_sample");
}

} // namespace ssd
