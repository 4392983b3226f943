// Built with -mavx2; only reached after a runtime CPU check.
#include <immintrin.h>

#include <cstring>

#include "nnbdd/kernels.hpp"

namespace nnbdd::kernels::detail {

namespace {

// 4 bytes of 0/1 flags -> 4 x 64-bit all-ones/all-zeros lanes.
inline __m256i lane_mask(const std::uint8_t* bits) {
  std::int32_t packed;
  std::memcpy(&packed, bits, sizeof(packed));
  const __m256i wide = _mm256_cvtepu8_epi64(_mm_cvtsi32_si128(packed));
  return _mm256_cmpgt_epi64(wide, _mm256_setzero_si256());
}

double masked_sum_f64(const double* w, const std::uint8_t* bits, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_and_pd(_mm256_loadu_pd(w + i), _mm256_castsi256_pd(lane_mask(bits + i)));
    acc = _mm256_add_pd(acc, v);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  for (; i < n; ++i) lanes[i & 3] += bits[i] ? w[i] : 0.0;
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

std::int64_t masked_sum_i64(const std::int64_t* w, const std::uint8_t* bits, std::size_t n) {
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(w + i));
    acc = _mm256_add_epi64(acc, _mm256_and_si256(v, lane_mask(bits + i)));
  }
  alignas(32) std::int64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
  std::int64_t total = lanes[0] + lanes[1] + lanes[2] + lanes[3];
  for (; i < n; ++i) total += bits[i] ? w[i] : 0;
  return total;
}

void masked_axpy_f64(double* y, const std::uint8_t* bits, double alpha, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d add = _mm256_and_pd(a, _mm256_castsi256_pd(lane_mask(bits + i)));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), add));
  }
  for (; i < n; ++i) y[i] += bits[i] ? alpha : 0.0;
}

}  // namespace

const KernelTable kAvx2Table{masked_sum_f64, masked_sum_i64, masked_axpy_f64};

}  // namespace nnbdd::kernels::detail
