#include "helpers.hpp"

#include "spirit_sde/classic.hpp"

#include <sstream>

using namespace ssd;
using Catch::Matchers::WithinAbs;

namespace {

double Nmse(RealImage const &ref, RealImage const &x)
{
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref.data.size(); ++i) {
    num += (x.data[i] - ref.data[i]) * (x.data[i] - ref.data[i]);
    den += ref.data[i] * ref.data[i];
  }
  return num / den;
}

// Objective gradient 2 (Psi x + lambda F^-1 M (M F x - y)).
ComplexArray Gradient(ComplexArray const &x, MeasuredData const &y, PsiOperator const &psi, double lambda)
{
  ComplexArray resid = ApplyMask(FFT2c(x), y.mask);
  resid -= y.y;
  ComplexArray g = psi.apply(x);
  g.axpy(lambda, IFFT2c(resid));
  g *= 2.0;
  return g;
}

struct R4Case
{
  test::Scene scene;
  SamplingMask mask;
  MeasuredData y;
  SpiritKernel kern;

  R4Case(double tikhonov = 1e-3)
    : scene{}
    , mask{MakeMask(64, 64, MaskSpec{.acceleration = 4, .acs_rows = 16, .acs_cols = 16, .seed = 5})}
    , y{SynthesizeMeasurement(scene.image, scene.maps, mask, 0.0, 1)}
    , kern{Calibrate(ExtractACS(y.y, mask.acs()), 5, 5, tikhonov)}
  {
  }
};

R4Case const &Shared()
{
  static R4Case c;
  return c;
}

ClassicResult const &SharedCg()
{
  static ClassicResult r = CgSpirit(Shared().y, Shared().kern, Shared().scene.maps,
                                    ClassicConfig{.lambda_dc = 1.0, .max_iters = 2000, .tol = 1e-8});
  return r;
}

} // namespace

TEST_CASE("zero-filled", "[classic]")
{
  test::Scene s(32, 4, 2);
  auto full = SynthesizeMeasurement(s.image, s.maps, SamplingMask::Full(32, 32), 0.0, 1);
  CHECK(MaxAbsDiff(ZeroFilled(full, s.maps), s.image) < 1e-10);

  MeasuredData zero = full;
  zero.y.setZero();
  CHECK(Norm(ZeroFilled(zero, s.maps)) == 0.0);
}

TEST_CASE("config validation", "[classic]")
{
  ClassicConfig c;
  CHECK_NOTHROW(c.validate());
  c.tol = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = ClassicConfig{};
  c.max_iters = 0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = ClassicConfig{};
  c.step_eta = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
}

TEST_CASE("cg-spirit on fully sampled data", "[classic]")
{
  test::Scene s(32, 4, 3);
  auto y = SynthesizeMeasurement(s.image, s.maps, SamplingMask::Full(32, 32), 0.0, 1);
  auto kern = Calibrate(ExtractACS(s.kspace, CenteredRect(32, 32, 16, 16)), 5, 5, 1e-4);
  auto res = CgSpirit(y, kern, s.maps, ClassicConfig{.lambda_dc = 1e6, .max_iters = 50, .tol = 1e-10});
  CHECK(Nmse(Magnitude(s.image), SosCombine(res.coil_images)) < 1e-6);
}

TEST_CASE("cg-spirit at R = 4", "[classic]")
{
  auto const &c = Shared();
  auto const &res = SharedCg();
  double const tol = 1e-8;
  auto const ref = Magnitude(c.scene.image);
  double const zf = Nmse(ref, Magnitude(ZeroFilled(c.y, c.scene.maps)));
  double const cg = Nmse(ref, SosCombine(res.coil_images));
  INFO("zero-filled " << zf << " cg " << cg);
  CHECK(cg <= 0.5 * zf);

  SECTION("objective non-increasing")
  {
    for (std::size_t i = 1; i < res.trace.size(); ++i) {
      CHECK(res.trace[i].objective <= res.trace[i - 1].objective * (1.0 + 1e-10));
    }
  }

  SECTION("first-order optimality")
  {
    PsiOperator psi(c.kern, 64, 64);
    double const g0 = Norm(Gradient(IFFT2c(c.y.y), c.y, psi, 1.0));
    double const g = Norm(Gradient(res.coil_images, c.y, psi, 1.0));
    CHECK(g < tol * g0 * 1.01);
    CHECK_THAT(res.trace.back().objective / SpiritObjective(res.coil_images, c.y, psi, 1.0), WithinAbs(1.0, 1e-9));
  }

  SECTION("data residual shrinks with lambda")
  {
    auto loose = CgSpirit(c.y, c.kern, c.scene.maps, ClassicConfig{.lambda_dc = 0.1, .max_iters = 2000, .tol = 1e-8});
    CHECK(res.trace.back().data_residual < loose.trace.back().data_residual);
  }

  SECTION("gradient descent reaches the same objective")
  {
    PsiOperator psi(c.kern, 64, 64);
    double const L = PowerIteration(
      [&](ComplexArray const &v) {
        ComplexArray o = psi.apply(v);
        o.axpy(1.0, IFFT2c(ApplyMask(FFT2c(v), c.mask)));
        return o;
      },
      {8, 64, 64}, 100, 3);
    double const eta = 1.9 / L;
    ComplexArray const x0 = IFFT2c(c.y.y);
    auto gd = GdSpirit(c.y, c.kern, c.scene.maps,
                       ClassicConfig{.lambda_dc = 1.0, .max_iters = 2000, .tol = 1e-12, .step_eta = eta, .step_lambda = eta},
                       &x0);
    double const rel = gd.trace.back().objective / res.trace.back().objective - 1.0;
    INFO("objective gap " << rel);
    CHECK(rel >= -1e-9);
    CHECK(rel < 0.01);
  }
}

TEST_CASE("cg-spirit with lambda 0 lowers the self-consistency energy", "[classic]")
{
  auto const &c = Shared();
  auto res = CgSpirit(c.y, c.kern, c.scene.maps, ClassicConfig{.lambda_dc = 0.0, .max_iters = 50, .tol = 1e-6});
  PsiOperator psi(c.kern, 64, 64);
  CHECK(psi.energy(res.coil_images) <= psi.energy(IFFT2c(c.y.y)));
}

TEST_CASE("gd-spirit steps", "[classic]")
{
  auto const &c = Shared();
  SECTION("one iteration from zero is the scaled adjoint")
  {
    double const step = 0.3;
    auto res = GdSpirit(c.y, c.kern, c.scene.maps, ClassicConfig{.max_iters = 1, .step_eta = 0.1, .step_lambda = step});
    ComplexArray expect = IFFT2c(c.y.y);
    expect *= step;
    CHECK(MaxAbsDiff(res.coil_images, expect) < 1e-12);
  }

  SECTION("oversized step diverges")
  {
    PsiOperator psi(c.kern, 64, 64);
    double const L = PowerIteration(
      [&](ComplexArray const &v) {
        ComplexArray o = psi.apply(v);
        o.axpy(1.0, IFFT2c(ApplyMask(FFT2c(v), c.mask)));
        return o;
      },
      {8, 64, 64}, 100, 3);
    double const eta = 3.0 / L;
    ClassicConfig cfg{.lambda_dc = 1.0, .max_iters = 500, .tol = 1e-12, .step_eta = eta, .step_lambda = eta};
    try {
      GdSpirit(c.y, c.kern, c.scene.maps, cfg);
      FAIL("no divergence reported");
    } catch (DivergenceError const &e) {
      CHECK(e.trace.size() >= 2);
    }
  }
}

TEST_CASE("trace table", "[classic]")
{
  IterationTrace t{{0, 1.5, 2.0, 0.25}, {1, 1.0, 1.0, 0.125}};
  std::ostringstream os;
  WriteTrace(os, t);
  std::string const s = os.str();
  CHECK(s.rfind("iter\tobjective\tgrad_norm\tdata_residual\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 3);
}
