#include "spirit_sde/score.hpp"

#include "spirit_sde/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ssd {

namespace {

std::size_t SupportSize(CoilSensitivities const &S)
{
  auto const &s = S.support();
  return std::size_t(std::count(s.begin(), s.end(), 1));
}

void CheckCoils(ComplexArray const &xc, CoilSensitivities const &S, char const *who)
{
  if (xc.rank() != 3 || xc.slices() != S.coils() || xc.rows() != S.rows() || xc.cols() != S.cols()) {
    throw InvalidInput(fmt::format("{}: coil array {} does not match maps {}x{}x{}", who, ShapeString(xc.shape()),
                                   S.coils(), S.rows(), S.cols()));
  }
}

// FNV-1a over the raw sample values.
std::uint64_t ContentHash(ComplexArray const &a)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto const *p = reinterpret_cast<unsigned char const *>(a.data().data());
  std::size_t const n = a.size() * sizeof(Cx);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

} // namespace

LinearScore::LinearScore(ComplexArray mean, double v0, NoiseSchedule sched, CoilSensitivities S)
  : mean_{std::move(mean)}
  , v0_{v0}
  , sched_{std::move(sched)}
  , S_{std::move(S)}
{
  CheckCoils(mean_, S_, "linear score");
  RequireFinite(mean_, "linear score");
  if (!(v0_ > 0.0) || !std::isfinite(v0_)) {
    throw InvalidInput(fmt::format("linear score: v0 must be positive, got {}", v0_));
  }
  combined_mean_ = CoilCombine(mean_, S_);
}

ComplexArray LinearScore::evaluate(ComplexArray const &xc, double t) const
{
  CheckCoils(xc, S_, "score");
  ComplexArray r = xc - mean_;
  r = CoilProject(r, S_);
  r *= -scale_ / (v0_ + sched_.variance(t));
  return r;
}

ComplexArray LinearScore::combined(ComplexArray const &x, double t) const
{
  RequireSameShape(x, combined_mean_, "combined score");
  ComplexArray r = x - combined_mean_;
  double const f = -scale_ / (v0_ + sched_.variance(t));
  auto const &sup = S_.support();
  for (std::size_t p = 0; p < r.size(); ++p) {
    r[p] = sup[p] ? r[p] * f : Cx{0.0, 0.0};
  }
  return r;
}

LinearScore LinearScore::scaled(double f) const
{
  LinearScore s = *this;
  s.scale_ *= f;
  return s;
}

void GaussianPrior::validate(CoilSensitivities const &S) const
{
  CheckCoils(mean, S, "gaussian prior");
  if (!(v0 > 0.0)) {
    throw InvalidInput("gaussian prior: v0 must be positive");
  }
  if (MaxAbsDiff(CoilProject(mean, S), mean) > 1e-10 * std::max(1.0, Norm(mean))) {
    throw InvalidInput("gaussian prior: mean is not coil-consistent");
  }
}

ComplexArray GaussianPrior::sample(CoilSensitivities const &S, Rng &rng) const
{
  ComplexArray w = NormalArray({S.rows(), S.cols()}, rng);
  w *= std::sqrt(v0);
  return mean + CoilExpand(w, S);
}

LinearScore AnalyticGaussianScore(GaussianPrior const &prior, NoiseSchedule const &sched, CoilSensitivities const &S)
{
  prior.validate(S);
  return LinearScore(prior.mean, prior.v0, sched, S);
}

DsmEstimate DsmLoss(DsmScore const &score, std::vector<ComplexArray> const &batch, NoiseSchedule const &sched,
                    CoilSensitivities const &S, std::size_t n_time_draws, std::uint64_t seed, DsmOptions const &opt)
{
  if (batch.empty()) {
    throw InvalidInput("dsm_loss: empty batch");
  }
  if (n_time_draws == 0) {
    throw InvalidInput("dsm_loss: n_time_draws must be positive");
  }
  if (!(opt.t_min > 0.0 && opt.t_min < 1.0)) {
    throw InvalidInput(fmt::format("dsm_loss: t_min must lie in (0, 1), got {}", opt.t_min));
  }

  DsmEstimate est;
  est.terms.reserve(batch.size() * n_time_draws);
  Rng const root(seed);
  for (auto const &x0 : batch) {
    CheckCoils(x0, S, "dsm_loss");
    Rng rng = root.split(ContentHash(x0));
    for (std::size_t k = 0; k < n_time_draws; ++k) {
      double const t = opt.t_min + (1.0 - opt.t_min) * rng.uniform();
      ComplexArray const z = NormalArray(x0.shape(), rng);
      double const sigma = sched.sigma(t);
      ComplexArray xt = x0;
      xt.axpy(sigma, CoilProject(z, S));
      ComplexArray s = score(xt, t, z);
      RequireSameShape(s, x0, "dsm_loss score");
      if (opt.project_score) {
        s = CoilProject(s, S);
      }
      ComplexArray r = CoilCombine(s, S);
      r *= sigma;
      r += CoilCombine(z, S);
      double const term = SquaredNorm(r);
      if (!std::isfinite(term)) {
        throw NumericalError(fmt::format("dsm_loss: non-finite term at t = {}", t));
      }
      est.terms.push_back(term);
    }
  }

  // Sorted summation keeps the result independent of batch order.
  std::vector<double> sorted = est.terms;
  std::sort(sorted.begin(), sorted.end());
  double const n = double(sorted.size());
  est.loss = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  if (sorted.size() > 1) {
    double ss = 0.0;
    for (double v : sorted) {
      ss += (v - est.loss) * (v - est.loss);
    }
    est.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return est;
}

DsmEstimate DsmLoss(ScoreFunction const &score, std::vector<ComplexArray> const &batch, NoiseSchedule const &sched,
                    CoilSensitivities const &S, std::size_t n_time_draws, std::uint64_t seed, DsmOptions const &opt)
{
  return DsmLoss([&](ComplexArray const &xt, double t, ComplexArray const &) { return score.evaluate(xt, t); }, batch,
                 sched, S, n_time_draws, seed, opt);
}

LinearScore FitLinearScore(std::vector<ComplexArray> const &dataset, NoiseSchedule const &sched,
                           CoilSensitivities const &S, double ridge)
{
  if (dataset.empty()) {
    throw InvalidInput("fit_linear_score: empty dataset");
  }
  if (!(ridge > 0.0)) {
    throw InvalidInput(fmt::format("fit_linear_score: ridge must be positive, got {}", ridge));
  }
  ComplexArray mean(dataset.front().shape());
  for (auto const &u : dataset) {
    CheckCoils(u, S, "fit_linear_score");
    mean += u;
  }
  mean *= 1.0 / double(dataset.size());

  double v0 = ridge;
  std::size_t const np = SupportSize(S);
  if (dataset.size() > 1 && np > 0) {
    double ss = 0.0;
    for (auto const &u : dataset) {
      ss += SquaredNorm(CoilCombine(u - mean, S));
    }
    v0 = std::max(ridge, ss / (2.0 * double(np) * double(dataset.size() - 1)));
  }
  return LinearScore(std::move(mean), v0, sched, S);
}

} // namespace ssd
