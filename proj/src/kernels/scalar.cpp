#include "nnbdd/kernels.hpp"

namespace nnbdd::kernels::detail {

namespace {

double masked_sum_f64(const double* w, const std::uint8_t* bits, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) acc[i & 3] += bits[i] ? w[i] : 0.0;
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

std::int64_t masked_sum_i64(const std::int64_t* w, const std::uint8_t* bits, std::size_t n) {
  std::int64_t acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += bits[i] ? w[i] : 0;
  return acc;
}

void masked_axpy_f64(double* y, const std::uint8_t* bits, double alpha, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += bits[i] ? alpha : 0.0;
}

}  // namespace

const KernelTable kScalarTable{masked_sum_f64, masked_sum_i64, masked_axpy_f64};

}  // namespace nnbdd::kernels::detail
