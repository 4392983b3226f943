#include <cstdlib>
#include <string>

#include "nnbdd/error.hpp"
#include "nnbdd/kernels.hpp"

namespace nnbdd::kernels {

namespace {

Isa detect() {
  if (const char* env = std::getenv("NNBDD_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return Isa::Scalar;
  }
  return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw ArgumentError("kernel operands differ in length");
}

}  // namespace

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(NNBDD_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
#if defined(NNBDD_HAVE_AVX2)
  if (isa == Isa::Avx2 && isa_available(Isa::Avx2)) return detail::kAvx2Table;
#endif
  if (isa != Isa::Scalar) throw ArgumentError("requested instruction set is not available");
  return detail::kScalarTable;
}

Isa active_isa() {
  static const Isa isa = detect();
  return isa;
}

const KernelTable& active() {
  static const KernelTable& t = table(active_isa());
  return t;
}

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

double masked_sum(std::span<const double> w, std::span<const std::uint8_t> bits) {
  check_sizes(w.size(), bits.size());
  return active().masked_sum_f64(w.data(), bits.data(), w.size());
}

std::int64_t masked_sum(std::span<const std::int64_t> w, std::span<const std::uint8_t> bits) {
  check_sizes(w.size(), bits.size());
  return active().masked_sum_i64(w.data(), bits.data(), w.size());
}

void masked_axpy(std::span<double> y, std::span<const std::uint8_t> bits, double alpha) {
  check_sizes(y.size(), bits.size());
  active().masked_axpy_f64(y.data(), bits.data(), alpha, y.size());
}

}  // namespace nnbdd::kernels
