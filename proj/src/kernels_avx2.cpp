#include "symprice/kernels.hpp"

#if defined(SYMPRICE_HAVE_AVX2)

#include <immintrin.h>

namespace symprice::kernels::avx2 {

namespace {

constexpr std::size_t kLanes = 4;

inline __m256d ipow4(__m256d x, int q) {
  __m256d r = x;
  for (int i = 1; i < q; ++i) r = _mm256_mul_pd(r, x);
  return r;
}

void affine_pair(const AffinePair& a, std::span<const double> z1,
                 std::span<const double> z2, std::span<double> d,
                 std::span<double> s) {
  const std::size_t n = z1.size();
  const __m256d mu1 = _mm256_set1_pd(a.mu1), mu2 = _mm256_set1_pd(a.mu2);
  const __m256d s1 = _mm256_set1_pd(a.sigma1), s2 = _mm256_set1_pd(a.sigma2);
  const __m256d rho = _mm256_set1_pd(a.rho), perp = _mm256_set1_pd(a.rho_perp);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d x1 = _mm256_loadu_pd(&z1[i]);
    const __m256d x2 = _mm256_loadu_pd(&z2[i]);
    _mm256_storeu_pd(&d[i], _mm256_add_pd(mu1, _mm256_mul_pd(s1, x1)));
    const __m256d mix = _mm256_add_pd(_mm256_mul_pd(rho, x1), _mm256_mul_pd(perp, x2));
    _mm256_storeu_pd(&s[i], _mm256_add_pd(mu2, _mm256_mul_pd(s2, mix)));
  }
  for (; i < n; ++i) {
    d[i] = a.mu1 + a.sigma1 * z1[i];
    s[i] = a.mu2 + a.sigma2 * (a.rho * z1[i] + a.rho_perp * z2[i]);
  }
}

void ratio(std::span<const double> num, std::span<const double> den,
           std::span<double> out) {
  const std::size_t n = num.size();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes)
    _mm256_storeu_pd(&out[i],
                     _mm256_div_pd(_mm256_loadu_pd(&num[i]), _mm256_loadu_pd(&den[i])));
  for (; i < n; ++i) out[i] = num[i] / den[i];
}

void sym_basic(std::span<const double> x, std::span<double> out) {
  const std::size_t n = x.size();
  const __m256d half = _mm256_set1_pd(0.5), one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d v = _mm256_loadu_pd(&x[i]);
    _mm256_storeu_pd(&out[i],
                     _mm256_mul_pd(half, _mm256_sub_pd(v, _mm256_div_pd(one, v))));
  }
  for (; i < n; ++i) out[i] = 0.5 * (x[i] - 1.0 / x[i]);
}

void power_diff_int(std::span<const double> x, int q, std::span<double> out) {
  const std::size_t n = x.size();
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d p = ipow4(_mm256_loadu_pd(&x[i]), q);
    _mm256_storeu_pd(&out[i], _mm256_sub_pd(p, _mm256_div_pd(one, p)));
  }
  for (; i < n; ++i) {
    const double p = ipow(x[i], q);
    out[i] = p - 1.0 / p;
  }
}

void odd_power_int(std::span<const double> x, int q, std::span<double> out) {
  const std::size_t n = x.size();
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d v = _mm256_loadu_pd(&x[i]);
    _mm256_storeu_pd(&out[i], ipow4(_mm256_sub_pd(v, _mm256_div_pd(one, v)), q));
  }
  for (; i < n; ++i) out[i] = ipow(x[i] - 1.0 / x[i], q);
}

void scale(std::span<const double> x, double c, std::span<double> out) {
  const std::size_t n = x.size();
  const __m256d cv = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes)
    _mm256_storeu_pd(&out[i], _mm256_mul_pd(cv, _mm256_loadu_pd(&x[i])));
  for (; i < n; ++i) out[i] = c * x[i];
}

constexpr Table kTable{Isa::Avx2, affine_pair, ratio,    sym_basic,
                       power_diff_int, odd_power_int, scale};

}  // namespace

const Table* table() noexcept { return &kTable; }

}  // namespace symprice::kernels::avx2

#else

namespace symprice::kernels::avx2 {
const Table* table() noexcept { return nullptr; }
}  // namespace symprice::kernels::avx2

#endif
