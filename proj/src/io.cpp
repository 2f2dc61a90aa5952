#include "spirit_sde/io.hpp"

#include "spirit_sde/error.hpp"

#include <fmt/format.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace ssd {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'X', 'T', '1'};
constexpr std::uint32_t kMaxRank = 8;

template <typename T> void PutLE(std::ostream &os, T v)
{
  static_assert(std::is_unsigned_v<T>);
  std::array<char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = char((v >> (8 * i)) & 0xFF);
  }
  os.write(bytes.data(), bytes.size());
}

template <typename T> T GetLE(std::istream &is)
{
  std::array<unsigned char, sizeof(T)> bytes;
  if (!is.read(reinterpret_cast<char *>(bytes.data()), bytes.size())) {
    throw IoError("CXT1: truncated header");
  }
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= T(bytes[i]) << (8 * i);
  }
  return v;
}

} // namespace

void WriteCXT1(std::ostream &os, ComplexArray const &a)
{
  os.write(kMagic.data(), kMagic.size());
  PutLE<std::uint32_t>(os, std::uint32_t(a.rank()));
  for (auto const e : a.shape()) {
    PutLE<std::uint64_t>(os, std::uint64_t(e));
  }
  for (auto const v : a.data()) {
    PutLE<std::uint32_t>(os, std::bit_cast<std::uint32_t>(float(v.real())));
    PutLE<std::uint32_t>(os, std::bit_cast<std::uint32_t>(float(v.imag())));
  }
  if (!os) {
    throw IoError("CXT1: write failed");
  }
}

ComplexArray ReadCXT1(std::istream &is)
{
  std::array<char, 4> magic;
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw IoError("CXT1: bad magic");
  }
  auto const rank = GetLE<std::uint32_t>(is);
  if (rank == 0 || rank > kMaxRank) {
    throw IoError(fmt::format("CXT1: unsupported rank {}", rank));
  }
  Shape shape(rank);
  for (auto &e : shape) {
    e = std::size_t(GetLE<std::uint64_t>(is));
  }
  std::size_t const n = Product(shape);
  std::vector<std::uint32_t> raw(2 * n);
  for (auto &w : raw) {
    w = GetLE<std::uint32_t>(is);
  }
  std::vector<Cx> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = Cx(std::bit_cast<float>(raw[2 * i]), std::bit_cast<float>(raw[2 * i + 1]));
  }
  return ComplexArray(std::move(shape), std::move(data));
}

void WriteCXT1(std::filesystem::path const &path, ComplexArray const &a)
{
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw IoError(fmt::format("cannot open {} for writing", path.string()));
  }
  WriteCXT1(os, a);
}

ComplexArray ReadCXT1(std::filesystem::path const &path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw IoError(fmt::format("cannot open {}", path.string()));
  }
  try {
    return ReadCXT1(is);
  } catch (IoError const &e) {
    throw IoError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

ComplexArray QuantizeToFloat(ComplexArray a)
{
  for (auto &v : a.data()) {
    v = Cx(double(float(v.real())), double(float(v.imag())));
  }
  return a;
}

} // namespace ssd
