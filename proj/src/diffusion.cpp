#include "spirit_sde/diffusion.hpp"

#include "spirit_sde/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace ssd {

namespace {

void CheckTime(double t, char const *who)
{
  if (!(t >= 0.0 && t <= 1.0)) {
    throw InvalidInput(fmt::format("{}: time {} outside [0, 1]", who, t));
  }
}

} // namespace

NoiseSchedule::NoiseSchedule(double beta_min, double beta_max, double eta0, std::size_t n_steps)
  : beta_min_{beta_min}
  , beta_max_{beta_max}
  , eta0_{eta0}
  , n_{n_steps}
{
  if (!(beta_min >= 0.0) || !(beta_max >= beta_min) || !std::isfinite(beta_max)) {
    throw InvalidInput(fmt::format("schedule: need 0 <= beta_min <= beta_max, got {} {}", beta_min, beta_max));
  }
  if (!(eta0 >= 0.0) || !std::isfinite(eta0)) {
    throw InvalidInput(fmt::format("schedule: eta0 must be >= 0, got {}", eta0));
  }
  if (n_steps == 0) {
    throw InvalidInput("schedule: n_steps must be positive");
  }

  // Cumulative trapezoid of beta(tau) exp(-eta tau), subdivided so the whole of [0, 1] sees >= 16384 panels.
  std::size_t const sub = std::max<std::size_t>(1, (16384 + n_ - 1) / n_);
  double const h = 1.0 / double(n_ * sub);
  auto g = [&](double tau) { return beta(tau) * std::exp(-eta0_ * tau); };
  var_.assign(n_ + 1, 0.0);
  table_.assign(n_ + 1, 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < sub; ++j) {
      double const a = double(i * sub + j) * h;
      acc += 0.5 * h * (g(a) + g(a + h));
    }
    double const t = double(i + 1) / double(n_);
    var_[i + 1] = 0.5 * std::exp(eta0_ * t) * acc;
    table_[i + 1] = std::sqrt(var_[i + 1]);
  }
}

double NoiseSchedule::variance(double t) const
{
  CheckTime(t, "schedule");
  double const u = t * double(n_);
  auto const i = std::min<std::size_t>(std::size_t(u), n_ - 1);
  double const f = u - double(i);
  if (f == 0.0) {
    return var_[i];
  }
  return (1.0 - f) * var_[i] + f * var_[i + 1];
}

double SigmaAt(NoiseSchedule const &sched, double t, std::size_t nodes)
{
  CheckTime(t, "sigma_at");
  if (nodes < 1000) {
    throw InvalidInput(fmt::format("sigma_at: at least 1000 nodes required, got {}", nodes));
  }
  if (t == 0.0) {
    return 0.0;
  }
  std::size_t const panels = nodes - 1;
  double const h = t / double(panels);
  auto f = [&](double tau) { return sched.beta(tau) * std::exp(sched.eta0() * (t - tau)); };
  double acc = 0.5 * (f(0.0) + f(t));
  for (std::size_t k = 1; k < panels; ++k) {
    acc += f(double(k) * h);
  }
  return std::sqrt(0.5 * h * acc);
}

ComplexArray Perturb(ComplexArray const &x0, NoiseSchedule const &sched, double t, CoilSensitivities const &S,
                     ComplexArray const &z)
{
  RequireSameShape(x0, z, "perturb");
  ComplexArray x = x0;
  x.axpy(sched.sigma(t), CoilProject(z, S));
  return x;
}

void ForwardEM(ComplexArray const &x0, NoiseSchedule const &sched, PsiOperator const &psi, CoilSensitivities const &S,
               std::size_t n_steps, Rng &rng, std::function<void(DiffusionState const &)> const &visit)
{
  if (n_steps == 0) {
    throw InvalidInput("forward_em: n_steps must be positive");
  }
  RequireFinite(x0, "forward_em");
  bool const drift = sched.eta0() > 0.0;
  if (drift && psi.coils() != x0.slices()) {
    throw InvalidInput("forward_em: eta0 > 0 needs a Psi operator matching the coil count");
  }
  double const dt = 1.0 / double(n_steps);
  double const scale = Norm(x0) + sched.sigma(1.0) * std::sqrt(double(x0.size())) + 1e-300;

  std::size_t const nc = x0.slices(), np = x0.pixels();
  if (S.coils() != nc || S.rows() != x0.rows() || S.cols() != x0.cols()) {
    throw InvalidInput(fmt::format("forward_em: maps {}x{}x{} do not match state {}", S.coils(), S.rows(), S.cols(),
                                   ShapeString(x0.shape())));
  }
  auto const &maps = S.maps();

  DiffusionState st{0.0, x0};
  visit(st);
  std::vector<Cx> xi(nc);
  for (std::size_t i = 0; i < n_steps; ++i) {
    double const t = double(i) * dt;
    if (drift) {
      st.xc.axpy(0.5 * sched.eta(t) * dt, psi.apply(st.xc));
    }
    // Adds sqrt(beta dt) S S* xi pixel by pixel, xi circular with unit variance.
    double const a = std::sqrt(0.5 * sched.beta(t) * dt);
    double nrm = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
      Cx c{0.0, 0.0};
      for (std::size_t k = 0; k < nc; ++k) {
        xi[k] = rng.complexNormal();
        c += std::conj(maps[k * np + p]) * xi[k];
      }
      c *= a;
      for (std::size_t k = 0; k < nc; ++k) {
        Cx &v = st.xc[k * np + p];
        v += maps[k * np + p] * c;
        nrm += std::norm(v);
      }
    }
    nrm = std::sqrt(nrm);
    if (!std::isfinite(nrm) || nrm > 1e6 * scale) {
      throw NumericalError(fmt::format("forward_em: unstable at step {} (t = {}), norm {}", i + 1, t + dt, nrm));
    }
    st.t = double(i + 1) * dt;
    visit(st);
  }
}

std::vector<DiffusionState> ForwardEM(ComplexArray const &x0, NoiseSchedule const &sched, SpiritKernel const &kern,
                                      CoilSensitivities const &S, std::size_t n_steps, std::uint64_t seed)
{
  PsiOperator psi;
  if (sched.eta0() > 0.0) {
    psi = PsiOperator(kern, x0.rows(), x0.cols());
  }
  Rng rng(seed);
  std::vector<DiffusionState> traj;
  traj.reserve(n_steps + 1);
  ForwardEM(x0, sched, psi, S, n_steps, rng, [&](DiffusionState const &s) { traj.push_back(s); });
  return traj;
}

ComplexArray ForwardEMTerminal(ComplexArray const &x0, NoiseSchedule const &sched, PsiOperator const &psi,
                               CoilSensitivities const &S, std::size_t n_steps, Rng &rng)
{
  ComplexArray last;
  std::size_t seen = 0;
  ForwardEM(x0, sched, psi, S, n_steps, rng, [&](DiffusionState const &s) {
    if (seen++ == n_steps) {
      last = s.xc;
    }
  });
  return last;
}

DiffusionState ReverseStep(DiffusionState const &state, ComplexArray const &score_value, NoiseSchedule const &sched,
                           PsiOperator const &psi, CoilSensitivities const &S, double dt, ComplexArray const &z)
{
  RequireSameShape(state.xc, score_value, "reverse_step");
  RequireSameShape(state.xc, z, "reverse_step");
  if (!(dt > 0.0) || state.t - dt < -1e-12) {
    throw InvalidInput(fmt::format("reverse_step: step {} from t = {} leaves [0, 1]", dt, state.t));
  }
  double const t1 = std::max(0.0, state.t - dt);
  double const dv = sched.variance(state.t) - sched.variance(t1);

  DiffusionState out{t1, state.xc};
  if (sched.eta0() > 0.0) {
    out.xc.axpy(-0.5 * sched.eta(state.t) * dt, psi.apply(state.xc));
  }
  ComplexArray inc = score_value;
  inc *= dv;
  inc.axpy(std::sqrt(dv), z);
  out.xc += CoilProject(inc, S);
  RequireFinite(out.xc, "reverse_step");
  return out;
}

} // namespace ssd
