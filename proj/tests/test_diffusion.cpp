#include "helpers.hpp"

#include "spirit_sde/diffusion.hpp"

#include <cmath>

using namespace ssd;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Composite trapezoid in long double, refined once and Richardson-extrapolated.
double RichardsonSigma2(double bmin, double bmax, double eta, double t)
{
  auto trap = [&](std::size_t n) {
    long double const h = (long double)t / n;
    long double acc = 0.0L;
    for (std::size_t k = 0; k <= n; ++k) {
      long double const tau = h * k;
      long double const f = (bmin + tau * (bmax - bmin)) * std::exp((long double)eta * (t - tau));
      acc += (k == 0 || k == n) ? 0.5L * f : f;
    }
    return h * acc;
  };
  long double const a = trap(1 << 16), b = trap(1 << 17);
  return double(0.5L * (4.0L * b - a) / 3.0L);
}

// 1/2 int_0^t (a + b tau) exp(eta (t - tau)) dtau in closed form.
double ClosedSigma2(double bmin, double bmax, double eta, double t)
{
  double const a = bmin, b = bmax - bmin;
  if (eta == 0.0) {
    return 0.5 * (a * t + b * t * t / 2.0);
  }
  double const e = std::exp(eta * t);
  return 0.5 * (a * (e - 1.0) / eta + b * ((e - 1.0) / (eta * eta) - t / eta));
}

CoilSensitivities SmallMaps(std::size_t n, std::size_t nc, std::uint64_t seed)
{
  return MakeCoilMaps(n, n, nc, seed);
}

} // namespace

TEST_CASE("noise schedule", "[diffusion]")
{
  NoiseSchedule const s;
  CHECK(s.sigmaTable().size() == 1001);
  CHECK(s.sigmaTable().front() == 0.0);
  CHECK(SigmaAt(s, 0.0) == 0.0);
  for (std::size_t i = 1; i < s.sigmaTable().size(); ++i) {
    REQUIRE(s.sigmaTable()[i] > s.sigmaTable()[i - 1]);
  }

  SECTION("linear schedule closed form")
  {
    CHECK_THAT(s.variance(1.0), WithinRel(87.0025, 1e-12));
    CHECK_THAT(SigmaAt(s, 1.0), WithinRel(std::sqrt(87.0025), 1e-8));
    CHECK_THAT(SigmaAt(s, 1.0, 1000), WithinRel(std::sqrt(87.0025), 1e-12));
    CHECK_THAT(s.sigma(1.0), WithinAbs(9.3276, 1e-4));
    for (double t : {0.1, 0.37, 0.5, 0.9}) {
      CHECK_THAT(SigmaAt(s, t), WithinRel(std::sqrt(ClosedSigma2(0.01, 348.0, 0.0, t)), 1e-12));
    }
  }

  SECTION("constant eta against a Richardson oracle")
  {
    NoiseSchedule const e(0.01, 348.0, 0.5, 1000);
    double const oracle = RichardsonSigma2(0.01, 348.0, 0.5, 1.0);
    CHECK_THAT(oracle, WithinRel(ClosedSigma2(0.01, 348.0, 0.5, 1.0), 1e-12));
    CHECK_THAT(SigmaAt(e, 1.0), WithinRel(std::sqrt(oracle), 1e-8));
    for (std::size_t i = 0; i <= 1000; i += 50) {
      double const t = double(i) / 1000.0;
      CHECK_THAT(e.sigmaTable()[i], WithinRel(SigmaAt(e, t), 1e-8));
    }
  }

  SECTION("variance interpolates between grid points")
  {
    NoiseSchedule const c(0.01, 348.0, 0.0, 10);
    double const mid = 0.5 * (c.variance(0.3) + c.variance(0.4));
    CHECK_THAT(c.variance(0.35), WithinRel(mid, 1e-12));
  }

  CHECK_THROWS_AS(NoiseSchedule(1.0, 0.5), InvalidInput);
  CHECK_THROWS_AS(NoiseSchedule(0.01, 348.0, -1.0), InvalidInput);
  CHECK_THROWS_AS(NoiseSchedule(0.01, 348.0, 0.0, 0), InvalidInput);
  CHECK_THROWS_AS(SigmaAt(s, 1.5), InvalidInput);
  CHECK_THROWS_AS(SigmaAt(s, 0.5, 999), InvalidInput);
}

TEST_CASE("perturbation kernel", "[diffusion]")
{
  test::Scene sc(16, 2, 4);
  NoiseSchedule const s;
  auto const z = test::Random({2, 16, 16}, 9);
  CHECK(MaxAbsDiff(Perturb(sc.coil_images, s, 0.0, sc.maps, z), sc.coil_images) == 0.0);

  SECTION("noise is coil-consistent")
  {
    ComplexArray d = Perturb(sc.coil_images, s, 0.7, sc.maps, z) - sc.coil_images;
    CHECK(MaxAbsDiff(CoilProject(d, sc.maps), d) < 1e-10 * Norm(d));
  }

  SECTION("Monte-Carlo moments at t = 0.5")
  {
    std::size_t const draws = 10000, n = sc.coil_images.size();
    std::vector<double> m(2 * n, 0.0), m2(2 * n, 0.0);
    Rng rng(11);
    for (std::size_t k = 0; k < draws; ++k) {
      auto const x = Perturb(sc.coil_images, s, 0.5, sc.maps, NormalArray({2, 16, 16}, rng));
      for (std::size_t i = 0; i < n; ++i) {
        Cx const d = x[i] - sc.coil_images[i];
        m[2 * i] += d.real();
        m[2 * i + 1] += d.imag();
        m2[2 * i] += d.real() * d.real();
        m2[2 * i + 1] += d.imag() * d.imag();
      }
    }
    double const var = s.variance(0.5);
    auto const &maps = sc.maps.maps();
    std::size_t within = 0, tested = 0;
    double worst = 0.0;
    for (std::size_t j = 0; j < 2 * n; ++j) {
      double const mean = m[j] / draws;
      double const v = m2[j] / draws - mean * mean;
      double const se = std::sqrt(v / draws);
      within += std::abs(mean) <= 3.0 * se;
      // Per-component variance of coil c is sigma^2 |s_c|^2.
      double const expect = var * std::norm(maps[j / 2]);
      if (std::norm(maps[j / 2]) >= 0.05) {
        worst = std::max(worst, std::abs(v / expect - 1.0));
        ++tested;
      }
    }
    INFO("worst variance deviation " << worst << " over " << tested);
    CHECK(double(within) / double(2 * n) >= 0.99);
    CHECK(worst < 0.05);
  }
}

TEST_CASE("forward Euler-Maruyama", "[diffusion]")
{
  SECTION("no noise and no drift leaves x0 unchanged")
  {
    test::Scene sc(16, 2, 5);
    NoiseSchedule const s(0.0, 0.0, 0.0, 20);
    auto traj = ForwardEM(sc.coil_images, s, SpiritKernel{}, sc.maps, 20, 1);
    REQUIRE(traj.size() == 21);
    CHECK(traj.back().t == 1.0);
    for (auto const &st : traj) {
      CHECK(MaxAbsDiff(st.xc, sc.coil_images) == 0.0);
    }
  }

  SECTION("increments stay in the range of S S*")
  {
    test::Scene sc(16, 2, 5);
    NoiseSchedule const s;
    auto traj = ForwardEM(sc.coil_images, s, SpiritKernel{}, sc.maps, 50, 3);
    for (std::size_t i = 1; i < traj.size(); ++i) {
      ComplexArray d = traj[i].xc - traj[i - 1].xc;
      REQUIRE(MaxAbsDiff(CoilProject(d, sc.maps), d) < 1e-10 * Norm(d));
    }
  }

  SECTION("deterministic per seed")
  {
    test::Scene sc(16, 2, 5);
    NoiseSchedule const s;
    auto a = ForwardEM(sc.coil_images, s, SpiritKernel{}, sc.maps, 30, 8);
    auto b = ForwardEM(sc.coil_images, s, SpiritKernel{}, sc.maps, 30, 8);
    auto c = ForwardEM(sc.coil_images, s, SpiritKernel{}, sc.maps, 30, 9);
    CHECK(MaxAbsDiff(a.back().xc, b.back().xc) == 0.0);
    CHECK(MaxAbsDiff(a.back().xc, c.back().xc) > 0.0);
  }

  SECTION("terminal spread matches sigma(1) at 8x8")
  {
    auto const S = SmallMaps(8, 2, 21);
    auto const x0 = CoilExpand(test::Random({8, 8}, 4), S);
    NoiseSchedule const s;
    std::size_t const paths = 2000;
    double ss = 0.0, wsum = 0.0;
    Rng base(5);
    for (std::size_t p = 0; p < paths; ++p) {
      Rng r = base.split(p);
      auto const x = ForwardEMTerminal(x0, s, PsiOperator{}, S, 1000, r);
      for (std::size_t i = 0; i < x.size(); ++i) {
        ss += std::norm(x[i] - x0[i]);
      }
    }
    for (auto const &v : S.maps().data()) {
      wsum += std::norm(v);
    }
    // Per real component the variance is sigma^2 |s_c|^2; sum |s_c|^2 over coils and pixels is the support size.
    double const sd = std::sqrt(ss / (2.0 * double(paths) * wsum));
    CHECK_THAT(sd, WithinRel(SigmaAt(s, 1.0), 0.03));
  }

  SECTION("runaway drift is reported")
  {
    test::Scene sc(16, 2, 6);
    auto kern = Calibrate(sc.kspace, 5, 5, 1e-2);
    NoiseSchedule const s(0.01, 348.0, 200.0, 1000);
    try {
      ForwardEM(test::Random({2, 16, 16}, 1), s, kern, sc.maps, 1000, 2);
      FAIL("expected instability");
    } catch (NumericalError const &e) {
      CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
  }
}

TEST_CASE("reverse step", "[diffusion]")
{
  SECTION("zero score, beta and eta is a no-op")
  {
    test::Scene sc(16, 2, 7);
    NoiseSchedule const s(0.0, 0.0, 0.0, 100);
    DiffusionState st{0.5, sc.coil_images};
    ComplexArray zero(sc.coil_images.shape());
    auto out = ReverseStep(st, zero, s, PsiOperator{}, sc.maps, 0.01, test::Random(zero.shape(), 1));
    CHECK(out.t == Catch::Approx(0.49));
    CHECK(MaxAbsDiff(out.xc, sc.coil_images) == 0.0);
  }

  SECTION("Psi drift enters with a descent sign")
  {
    test::Scene sc(16, 2, 7);
    auto kern = Calibrate(sc.kspace, 5, 5, 1e-3);
    PsiOperator psi(kern, 16, 16);
    NoiseSchedule const s(0.0, 0.0, 2.0, 100);
    auto const x = test::Random({2, 16, 16}, 3);
    ComplexArray zero(x.shape());
    auto out = ReverseStep(DiffusionState{1.0, x}, zero, s, psi, sc.maps, 0.01, zero);
    ComplexArray expect = x;
    expect.axpy(-0.5 * 2.0 * 0.01, psi.apply(x));
    CHECK(MaxAbsDiff(out.xc, expect) < 1e-14 * Norm(x));
  }

  SECTION("Gaussian toy returns the prior")
  {
    // One coil with unit sensitivity: every pixel is an independent copy of the scalar problem.
    std::size_t const n = 50, cols = 100;
    ComplexArray ones = ComplexArray::Coils(1, n, cols);
    for (auto &v : ones.data()) {
      v = 1.0;
    }
    CoilSensitivities S(ones);
    NoiseSchedule const s;
    double const v0 = 1.0;
    Rng rng(17);
    DiffusionState st{1.0, NormalArray({1, n, cols}, rng)};
    st.xc *= s.sigma(1.0);
    double const dt = 1.0 / double(s.steps());
    for (std::size_t i = 0; i < s.steps(); ++i) {
      ComplexArray score = st.xc;
      score *= -1.0 / (v0 + s.variance(st.t));
      st = ReverseStep(st, score, s, PsiOperator{}, S, dt, NormalArray({1, n, cols}, rng));
    }
    CHECK(st.t == Catch::Approx(0.0).margin(1e-12));
    double sum = 0.0, ss = 0.0;
    for (auto const &v : st.xc.data()) {
      sum += v.real() + v.imag();
      ss += std::norm(v);
    }
    double const count = 2.0 * double(st.xc.size());
    double const mean = sum / count;
    double const sd = std::sqrt(ss / count - mean * mean);
    CHECK(std::abs(mean) < 0.05 * std::sqrt(v0));
    CHECK_THAT(sd, WithinRel(std::sqrt(v0), 0.05));
  }

  CHECK_THROWS_AS(ReverseStep(DiffusionState{0.005, ComplexArray::Coils(1, 4, 4)}, ComplexArray::Coils(1, 4, 4),
                              NoiseSchedule{}, PsiOperator{}, CoilSensitivities(ComplexArray::Coils(1, 4, 4)), 0.01,
                              ComplexArray::Coils(1, 4, 4)),
                  InvalidInput);
}
