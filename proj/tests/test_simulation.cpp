#include "helpers.hpp"

#include "spirit_sde/error.hpp"

#include <array>
#include <cmath>

using namespace ssd;
using Catch::Approx;

TEST_CASE("phantoms", "[simulation]")
{
  auto const sl = MakePhantom(PhantomSpec{.rows = 64, .cols = 64, .kind = PhantomKind::SheppLogan, .seed = 3});
  double peak = 0.0, imag = 0.0;
  for (auto const v : sl.data()) {
    peak = std::max(peak, std::abs(v));
    imag += std::abs(v.imag());
    CHECK(std::abs(v) <= 1.0 + 1e-15);
  }
  CHECK(peak == Approx(1.0).margin(1e-12));
  CHECK(imag > 1.0);

  auto const again = MakePhantom(PhantomSpec{.rows = 64, .cols = 64, .kind = PhantomKind::SheppLogan, .seed = 3});
  CHECK(MaxAbsDiff(sl, again) == 0.0);
  auto const other = MakePhantom(PhantomSpec{.rows = 64, .cols = 64, .kind = PhantomKind::SheppLogan, .seed = 4});
  CHECK(MaxAbsDiff(sl, other) > 1e-3);

  CHECK_THROWS_AS(MakePhantom(PhantomSpec{.rows = 8, .cols = 64}), InvalidInput);
  CHECK_THROWS_AS(ParsePhantomKind("cube"), InvalidInput);
}

TEST_CASE("smooth-blobs golden checksum", "[simulation]")
{
  auto const b = MakePhantom(PhantomSpec{.rows = 32, .cols = 32, .kind = PhantomKind::SmoothBlobs, .seed = 7});
  double sre = 0.0, sim = 0.0, sab = 0.0;
  for (auto const v : b.data()) {
    sre += v.real();
    sim += v.imag();
    sab += std::abs(v);
  }
  // Frozen from the first verified run.
  CHECK(sab == Approx(136.21983152780444).epsilon(1e-12));
  CHECK(sre == Approx(104.40761825889565).epsilon(1e-12));
  CHECK(sim == Approx(-85.556950237546943).epsilon(1e-12));
}

TEST_CASE("coil maps", "[simulation]")
{
  auto const one = MakeCoilMaps(16, 16, 1, 5);
  for (auto const v : one.maps().data()) {
    CHECK(std::abs(v) == Approx(1.0).epsilon(1e-12));
  }
  auto const eight = MakeCoilMaps(64, 64, 8, 5);
  std::size_t const np = 64 * 64;
  for (std::size_t p = 0; p < np; ++p) {
    REQUIRE(eight.support()[p] == 1);
    double ss = 0.0;
    for (std::size_t c = 0; c < 8; ++c) {
      ss += std::norm(eight.maps()[c * np + p]);
    }
    CHECK(std::abs(ss - 1.0) < 1e-10);
  }
  auto const other = MakeCoilMaps(64, 64, 8, 6);
  CHECK(Norm(other.maps() - eight.maps()) > 1e-3);
}

TEST_CASE("box-smoothed coil maps", "[simulation]")
{
  auto const maps = MakeCoilMaps(32, 32, 4, 2);
  CHECK(Norm(BoxSmoothMaps(maps, 1).maps() - maps.maps()) < 1e-13);
  CHECK_THROWS_AS(BoxSmoothMaps(maps, 4), InvalidInput);
  CHECK_THROWS_AS(BoxSmoothMaps(maps, 0), InvalidInput);

  auto const smooth = BoxSmoothMaps(maps, 9);
  CHECK(Norm(smooth.maps() - maps.maps()) > 1e-3);
  std::size_t const np = 32 * 32;
  for (std::size_t p = 0; p < np; ++p) {
    double ss = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
      ss += std::norm(smooth.maps()[c * np + p]);
    }
    CHECK(std::abs(ss - 1.0) < 1e-10);
  }

  // 3x3, coil 0 flat, coil 1 a single spike at the centre.
  ComplexArray raw = ComplexArray::Coils(2, 3, 3);
  for (std::size_t p = 0; p < 9; ++p) {
    raw[p] = 1.0;
  }
  raw[9 + 4] = 1.0;
  auto const box = BoxSmoothMaps(CoilSensitivities(raw), 3);
  double const h = 1.0 / std::sqrt(2.0);
  auto expect = [](double a, double b) { return std::array{a / std::hypot(a, b), b / std::hypot(a, b)}; };
  auto const centre = expect((8.0 + h) / 9.0, h / 9.0);
  auto const corner = expect((3.0 + h) / 4.0, h / 4.0);
  auto const edge = expect((5.0 + h) / 6.0, h / 6.0);
  CHECK(std::abs(box.maps()(0, 1, 1) - centre[0]) < 1e-14);
  CHECK(std::abs(box.maps()(1, 1, 1) - centre[1]) < 1e-14);
  CHECK(std::abs(box.maps()(0, 0, 0) - corner[0]) < 1e-14);
  CHECK(std::abs(box.maps()(1, 2, 2) - corner[1]) < 1e-14);
  CHECK(std::abs(box.maps()(0, 0, 1) - edge[0]) < 1e-14);
  CHECK(std::abs(box.maps()(1, 1, 2) - edge[1]) < 1e-14);
}

TEST_CASE("masks", "[simulation]")
{
  auto const full = MakeMask(32, 32, MaskSpec{.acceleration = 1.0, .acs_rows = 8, .acs_cols = 8});
  CHECK(full.popcount() == 32 * 32);

  auto const vd = MakeMask(
    64, 64, MaskSpec{.pattern = MaskPattern::VariableDensity, .acceleration = 4.0, .acs_rows = 16, .acs_cols = 16,
                     .seed = 11});
  CHECK(vd.popcount() >= 819);
  CHECK(vd.popcount() <= 1229);
  for (std::size_t r = 24; r < 40; ++r) {
    for (std::size_t c = 24; c < 40; ++c) {
      CHECK(vd(r, c));
    }
  }

  auto const uni = MakeMask(
    64, 64, MaskSpec{.pattern = MaskPattern::UniformCartesian, .acceleration = 2.0, .acs_rows = 16, .acs_cols = 16});
  for (std::size_t r = 0; r < 64; ++r) {
    bool const line = (r % 2) == 0;
    for (std::size_t c = 0; c < 64; ++c) {
      if (!uni.acs().contains(r, c)) {
        CHECK(uni(r, c) == line);
      }
    }
  }

  for (auto pattern : {MaskPattern::UniformCartesian, MaskPattern::VariableDensity}) {
    for (double R : {2.0, 3.0, 4.0, 6.0, 7.6, 10.0}) {
      auto const m =
        MakeMask(64, 64, MaskSpec{.pattern = pattern, .acceleration = R, .acs_rows = 16, .acs_cols = 16, .seed = 2});
      CHECK(std::abs(m.acceleration() / R - 1.0) <= 0.1);
      auto const again =
        MakeMask(64, 64, MaskSpec{.pattern = pattern, .acceleration = R, .acs_rows = 16, .acs_cols = 16, .seed = 2});
      CHECK(m.bits() == again.bits());
    }
  }
  // The ACS alone already undersamples less than requested.
  CHECK_THROWS_AS(MakeMask(32, 32, MaskSpec{.acceleration = 8.0, .acs_rows = 24, .acs_cols = 24}), InvalidInput);
  CHECK_THROWS_AS(MakeMask(32, 32, MaskSpec{.acceleration = 2.0, .acs_rows = 40, .acs_cols = 8}), InvalidInput);
}

TEST_CASE("measurement synthesis", "[simulation]")
{
  test::Scene const scene(64, 8);
  auto const full = SamplingMask::Full(64, 64);
  auto const clean = SynthesizeMeasurement(scene.image, scene.maps, full, 0.0, 1);
  CHECK(MaxAbsDiff(AdjointA(clean.y, scene.maps, full), scene.image) < 1e-10);

  auto const noisy = SynthesizeMeasurement(scene.image, scene.maps, full, 0.01, 2);
  double ss = 0.0;
  for (std::size_t i = 0; i < noisy.y.size(); ++i) {
    Cx const d = noisy.y[i] - clean.y[i];
    ss += d.real() * d.real() + d.imag() * d.imag();
  }
  double const std_emp = std::sqrt(ss / (2.0 * double(noisy.y.size())));
  CHECK(std::abs(std_emp / 0.01 - 1.0) < 0.05);

  auto const mask = MakeMask(64, 64, MaskSpec{.acceleration = 4.0, .acs_rows = 16, .acs_cols = 16, .seed = 4});
  auto const und = SynthesizeMeasurement(scene.image, scene.maps, mask, 0.01, 3);
  CHECK(und.noise_std == 0.01);
  for (std::size_t c = 0; c < 8; ++c) {
    for (std::size_t p = 0; p < 64 * 64; ++p) {
      if (!mask.bits()[p]) {
        CHECK(und.y.slice(c)[p] == Cx{});
      }
    }
  }
}
