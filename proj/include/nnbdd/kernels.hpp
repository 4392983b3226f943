#pragma once

// Data-parallel inner loops over 0/1 input vectors.
//
// Every kernel has a scalar reference and, on x86-64, an AVX2 variant chosen
// at runtime. Floating-point kernels accumulate in four interleaved lanes
// (element i goes to lane i % 4, lanes summed as (l0 + l1) + (l2 + l3)) in
// every variant, so all variants return bit-identical results.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace nnbdd::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  /// Sum of w[i] over i with bits[i] == 1.
  double (*masked_sum_f64)(const double* w, const std::uint8_t* bits, std::size_t n);
  std::int64_t (*masked_sum_i64)(const std::int64_t* w, const std::uint8_t* bits, std::size_t n);
  /// y[i] += alpha wherever bits[i] == 1.
  void (*masked_axpy_f64)(double* y, const std::uint8_t* bits, double alpha, std::size_t n);
};

bool isa_available(Isa isa);
const KernelTable& table(Isa isa);

/// Best available ISA, unless NNBDD_SIMD=scalar is set in the environment.
Isa active_isa();
const KernelTable& active();
std::string_view isa_name(Isa isa);

double masked_sum(std::span<const double> w, std::span<const std::uint8_t> bits);
std::int64_t masked_sum(std::span<const std::int64_t> w, std::span<const std::uint8_t> bits);
void masked_axpy(std::span<double> y, std::span<const std::uint8_t> bits, double alpha);

namespace detail {
extern const KernelTable kScalarTable;
#if defined(NNBDD_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
}  // namespace detail

}  // namespace nnbdd::kernels
