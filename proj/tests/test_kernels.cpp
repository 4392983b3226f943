#include <bit>
#include <random>
#include <vector>

#include "doctest.h"
#include "nnbdd/error.hpp"
#include "nnbdd/kernels.hpp"

using namespace nnbdd;
namespace k = nnbdd::kernels;

namespace {

struct Case {
  std::vector<double> wf;
  std::vector<std::int64_t> wi;
  std::vector<std::uint8_t> bits;
};

Case random_case(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> real(-3.0, 3.0);
  Case c;
  for (std::size_t i = 0; i < n; ++i) {
    c.wf.push_back(real(rng));
    c.wi.push_back(static_cast<std::int64_t>(rng() % 2000001) - 1000000);
    c.bits.push_back(static_cast<std::uint8_t>(rng() & 1));
  }
  return c;
}

}  // namespace

TEST_CASE("scalar reference matches naive sums") {
  std::mt19937_64 rng(1);
  const auto& s = k::table(k::Isa::Scalar);
  for (std::size_t n = 0; n < 70; ++n) {
    const auto c = random_case(rng, n);
    std::int64_t exact = 0;
    double approx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (c.bits[i]) {
        exact += c.wi[i];
        approx += c.wf[i];
      }
    }
    CHECK(s.masked_sum_i64(c.wi.data(), c.bits.data(), n) == exact);
    CHECK(s.masked_sum_f64(c.wf.data(), c.bits.data(), n) == doctest::Approx(approx).epsilon(1e-12));
  }
}

TEST_CASE("every available variant is bit-identical to the scalar reference") {
  std::mt19937_64 rng(2);
  const auto& ref = k::table(k::Isa::Scalar);
  for (auto isa : {k::Isa::Scalar, k::Isa::Avx2}) {
    if (!k::isa_available(isa)) continue;
    CAPTURE(k::isa_name(isa));
    const auto& t = k::table(isa);
    for (std::size_t n : {0, 1, 3, 4, 5, 7, 8, 9, 16, 31, 64, 65, 256, 257, 1000}) {
      for (int rep = 0; rep < 5; ++rep) {
        const auto c = random_case(rng, n);
        const double a = ref.masked_sum_f64(c.wf.data(), c.bits.data(), n);
        const double b = t.masked_sum_f64(c.wf.data(), c.bits.data(), n);
        CHECK(std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b));
        CHECK(ref.masked_sum_i64(c.wi.data(), c.bits.data(), n) == t.masked_sum_i64(c.wi.data(), c.bits.data(), n));

        std::vector<double> y1 = c.wf, y2 = c.wf;
        ref.masked_axpy_f64(y1.data(), c.bits.data(), 0.37, n);
        t.masked_axpy_f64(y2.data(), c.bits.data(), 0.37, n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::bit_cast<std::uint64_t>(y1[i]) == std::bit_cast<std::uint64_t>(y2[i]));
      }
    }
  }
}

TEST_CASE("span wrappers") {
  const std::vector<double> w{1.5, 2.0, -4.0};
  const std::vector<std::uint8_t> b{1, 0, 1};
  CHECK(k::masked_sum(w, b) == -2.5);
  const std::vector<std::int64_t> wi{3, 4, 5};
  CHECK(k::masked_sum(std::span<const std::int64_t>(wi), b) == 8);
  std::vector<double> y{0.0, 0.0, 0.0};
  k::masked_axpy(y, b, 2.0);
  CHECK(y == std::vector<double>{2.0, 0.0, 2.0});
  const std::vector<std::uint8_t> short_bits{1};
  CHECK_THROWS_AS(k::masked_sum(w, short_bits), ArgumentError);
  MESSAGE("active kernels: " << k::isa_name(k::active_isa()));
}
