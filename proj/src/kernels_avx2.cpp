// AVX2/FMA variants of the reduction kernels. This translation unit is the
// only one compiled with -mavx2 -mfma; callers reach it through the dispatch
// in kernels.cpp after a CPUID check.

#include <immintrin.h>

#include "lrsens/kernels.hpp"

namespace lrsens::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double sum(std::span<const double> x) {
  const double* p = x.data();
  const std::size_t n = x.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(p + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(p + i + 4));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += p[i];
  return acc;
}

double dot(std::span<const double> a, std::span<const double> b) {
  const double* pa = a.data();
  const double* pb = b.data();
  const std::size_t n = a.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + i), _mm256_loadu_pd(pb + i),
                           acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + i + 4),
                           _mm256_loadu_pd(pb + i + 4), acc1);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += pa[i] * pb[i];
  return acc;
}

double centered_dot(std::span<const double> a, double ca,
                    std::span<const double> b) {
  const double* pa = a.data();
  const double* pb = b.data();
  const std::size_t n = a.size();
  const __m256d c = _mm256_set1_pd(ca);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d a0 = _mm256_sub_pd(_mm256_loadu_pd(pa + i), c);
    const __m256d a1 = _mm256_sub_pd(_mm256_loadu_pd(pa + i + 4), c);
    acc0 = _mm256_fmadd_pd(a0, _mm256_loadu_pd(pb + i), acc0);
    acc1 = _mm256_fmadd_pd(a1, _mm256_loadu_pd(pb + i + 4), acc1);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += (pa[i] - ca) * pb[i];
  return acc;
}

double centered_cross(std::span<const double> a, double ca,
                      std::span<const double> b, double cb) {
  const double* pa = a.data();
  const double* pb = b.data();
  const std::size_t n = a.size();
  const __m256d va = _mm256_set1_pd(ca);
  const __m256d vb = _mm256_set1_pd(cb);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d a0 = _mm256_sub_pd(_mm256_loadu_pd(pa + i), va);
    const __m256d a1 = _mm256_sub_pd(_mm256_loadu_pd(pa + i + 4), va);
    const __m256d b0 = _mm256_sub_pd(_mm256_loadu_pd(pb + i), vb);
    const __m256d b1 = _mm256_sub_pd(_mm256_loadu_pd(pb + i + 4), vb);
    acc0 = _mm256_fmadd_pd(a0, b0, acc0);
    acc1 = _mm256_fmadd_pd(a1, b1, acc1);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += (pa[i] - ca) * (pb[i] - cb);
  return acc;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const double* px = x.data();
  double* py = y.data();
  const std::size_t n = x.size();
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(py + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(px + i),
                                             _mm256_loadu_pd(py + i)));
  }
  for (; i < n; ++i) py[i] += alpha * px[i];
}

}  // namespace lrsens::kernels::avx2
