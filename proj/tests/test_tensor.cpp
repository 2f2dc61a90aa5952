#include "helpers.hpp"

#include "spirit_sde/error.hpp"
#include "spirit_sde/io.hpp"

#include <cmath>
#include <limits>
#include <sstream>

using namespace ssd;
using Catch::Approx;

TEST_CASE("fft2c delta and constant pair", "[tensor]")
{
  ComplexArray img = ComplexArray::Image(8, 8);
  img(4, 4) = 1.0;
  auto const k = FFT2c(img);
  for (auto const v : k.data()) {
    CHECK(std::abs(v) == Approx(1.0 / 8.0).margin(1e-15));
  }

  ComplexArray ksp = ComplexArray::Image(8, 8);
  for (auto &v : ksp.data()) {
    v = 1.0 / 8.0;
  }
  auto const back = IFFT2c(ksp);
  CHECK(std::abs(back(4, 4)) == Approx(1.0).margin(1e-14));
  double rest = 0.0;
  for (std::size_t i = 0; i < back.size(); ++i) {
    if (i != 4 * 8 + 4) {
      rest = std::max(rest, std::abs(back[i]));
    }
  }
  CHECK(rest < 1e-14);
}

TEST_CASE("fft2c centred delta on odd extents", "[tensor]")
{
  ComplexArray img = ComplexArray::Image(7, 9);
  img(3, 4) = 1.0;
  auto const k = FFT2c(img);
  for (auto const v : k.data()) {
    CHECK(std::abs(v - Cx(1.0 / std::sqrt(63.0))) < 1e-14);
  }
}

TEST_CASE("fft2c round trip, Parseval and linearity", "[tensor]")
{
  for (std::size_t n : {16UL, 32UL, 33UL, 256UL}) {
    auto const x = test::Random({n, n}, n);
    auto const X = FFT2c(x);
    CHECK(MaxAbsDiff(IFFT2c(X), x) < 1e-12);
    CHECK(std::abs(Norm(X) - Norm(x)) / Norm(x) < 1e-12);
    CHECK(std::abs(Norm(IFFT2c(x)) - Norm(x)) / Norm(x) < 1e-12);
  }

  auto const x = test::Random({3, 16, 16}, 5);
  auto const y = test::Random({3, 16, 16}, 6);
  Cx const a(0.3, -1.2), b(2.0, 0.5);
  auto const lhs = FFT2c(a * x + b * y);
  auto const rhs = a * FFT2c(x) + b * FFT2c(y);
  CHECK(Norm(lhs - rhs) / Norm(lhs) < 1e-12);

  // Per-coil transform matches transforming each slice on its own.
  ComplexArray one = ComplexArray::Image(16, 16);
  std::copy(x.slice(1).begin(), x.slice(1).end(), one.data().begin());
  auto const k1 = FFT2c(one);
  auto const kx = FFT2c(x);
  for (std::size_t p = 0; p < 256; ++p) {
    CHECK(std::abs(kx.slice(1)[p] - k1[p]) < 1e-14);
  }
}

TEST_CASE("fft2c rejects bad input", "[tensor]")
{
  auto x = test::Random({8, 8}, 1);
  x(2, 3) = Cx(std::numeric_limits<double>::quiet_NaN(), 0.0);
  CHECK_THROWS_AS(FFT2c(x), InvalidInput);
  x(2, 3) = Cx(0.0, std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(IFFT2c(x), InvalidInput);
  CHECK_THROWS_AS(FFT2c(ComplexArray::Image(1, 8)), InvalidInput);
}

TEST_CASE("inner product", "[tensor]")
{
  auto const a = test::Random({2, 5, 7}, 10);
  auto const b = test::Random({2, 5, 7}, 11);
  Cx const aa = Inner(a, a);
  CHECK(aa.imag() == 0.0);
  CHECK(aa.real() == Approx(SquaredNorm(a)).epsilon(1e-14));
  CHECK(std::abs(Inner(a, b) - std::conj(Inner(b, a))) < 1e-12);

  ComplexArray delta({2, 5, 7});
  delta(1, 3, 4) = 1.0;
  CHECK(Inner(delta, b) == b(1, 3, 4));

  CHECK_THROWS_AS(Inner(a, test::Random({5, 7}, 1)), InvalidInput);
}

TEST_CASE("CXT1 layout is bit exact", "[io]")
{
  ComplexArray a({1, 2}, {Cx(1.0, -2.0), Cx(0.5, 0.0)});
  std::ostringstream os;
  WriteCXT1(os, a);
  std::string const s = os.str();
  std::string const expect{
    "CXT1"
    "\x02\x00\x00\x00"
    "\x01\x00\x00\x00\x00\x00\x00\x00"
    "\x02\x00\x00\x00\x00\x00\x00\x00"
    "\x00\x00\x80\x3f"
    "\x00\x00\x00\xc0"
    "\x00\x00\x00\x3f"
    "\x00\x00\x00\x00",
    4 + 4 + 16 + 16};
  CHECK(s == expect);
}

TEST_CASE("CXT1 round trip equals float quantization", "[io]")
{
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Shape const shape = seed % 2 ? Shape{3, 4, 5} : Shape{7, 6};
    auto const a = test::Random(shape, seed);
    std::stringstream ss;
    WriteCXT1(ss, a);
    auto const b = ReadCXT1(ss);
    REQUIRE(b.shape() == a.shape());
    CHECK(MaxAbsDiff(b, QuantizeToFloat(a)) == 0.0);
    CHECK(MaxAbsDiff(b, a) < 1e-6 * (1.0 + Norm(a)));
  }
}

TEST_CASE("CXT1 rejects malformed input", "[io]")
{
  std::stringstream bad("CXT2....");
  CHECK_THROWS_AS(ReadCXT1(bad), IoError);
  std::stringstream truncated;
  WriteCXT1(truncated, test::Random({4, 4}, 1));
  std::string s = truncated.str();
  std::stringstream cut(s.substr(0, s.size() - 3));
  CHECK_THROWS_AS(ReadCXT1(cut), IoError);
}
