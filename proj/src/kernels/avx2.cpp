// Built with -mavx2 only (no FMA contraction) so that the element-wise kernels
// round exactly like the scalar reference.

#include "ava/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__)

#include <immintrin.h>

namespace ava::kernels {
namespace {

constexpr std::size_t kLanes = 4;

inline double hsum(__m256d x) {
  alignas(32) double lane[kLanes];
  _mm256_store_pd(lane, x);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void fields_avx2(const double* u, const double* v, const double* r, const double* g,
                 std::size_t n, const FieldCoeffs& c, double* a, double* t, double* v_out) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d f = _mm256_set1_pd(c.f_inv);
  const __m256d ct = _mm256_set1_pd(c.cos_tau);
  const __m256d tt = _mm256_set1_pd(c.tan_tau);
  const __m256d sc = _mm256_set1_pd(c.sin_chi);
  const __m256d cc = _mm256_set1_pd(c.cos_chi);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d rf = _mm256_mul_pd(_mm256_loadu_pd(r + i), f);
    const __m256d q = _mm256_add_pd(one, _mm256_mul_pd(rf, rf));
    const __m256d ai = _mm256_div_pd(one, _mm256_mul_pd(q, q));
    const __m256d s = _mm256_sub_pd(_mm256_mul_pd(_mm256_loadu_pd(u + i), sc),
                                    _mm256_mul_pd(_mm256_loadu_pd(v + i), cc));
    const __m256d inner = _mm256_mul_pd(_mm256_mul_pd(tt, f), _mm256_mul_pd(s, s));
    const __m256d ti = _mm256_mul_pd(ct, _mm256_add_pd(one, inner));
    _mm256_storeu_pd(a + i, ai);
    _mm256_storeu_pd(t + i, ti);
    _mm256_storeu_pd(v_out + i, _mm256_mul_pd(_mm256_mul_pd(ai, _mm256_loadu_pd(g + i)), ti));
  }
  if (i < n) scalar_table().fields(u + i, v + i, r + i, g + i, n - i, c, a + i, t + i, v_out + i);
}

void mul_clamp_avx2(const double* x, const double* s, std::size_t n, double* out) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    __m256d y = _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(s + i));
    // Blend on comparisons rather than min/max so signed zeros match the scalar path.
    y = _mm256_blendv_pd(y, one, _mm256_cmp_pd(y, one, _CMP_GT_OQ));
    y = _mm256_blendv_pd(y, zero, _mm256_cmp_pd(y, zero, _CMP_LT_OQ));
    _mm256_storeu_pd(out + i, y);
  }
  if (i < n) scalar_table().mul_clamp(x + i, s + i, n - i, out + i);
}

void masked_product_avx2(const double* grad, const double* x, const double* s, std::size_t n,
                         double* out) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d xi = _mm256_loadu_pd(x + i);
    const __m256d y = _mm256_mul_pd(xi, _mm256_loadu_pd(s + i));
    const __m256d keep =
        _mm256_and_pd(_mm256_cmp_pd(y, zero, _CMP_GE_OQ), _mm256_cmp_pd(y, one, _CMP_LE_OQ));
    _mm256_storeu_pd(out + i, _mm256_and_pd(keep, _mm256_mul_pd(_mm256_loadu_pd(grad + i), xi)));
  }
  if (i < n) scalar_table().masked_product(grad + i, x + i, s + i, n - i, out + i);
}

ParamPartialSums param_partials_avx2(const double* gv, const double* u, const double* v,
                                     const double* r, const double* a, const double* g,
                                     const double* t, std::size_t n, const FieldCoeffs& c) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d minus4 = _mm256_set1_pd(-4.0);
  const __m256d f = _mm256_set1_pd(c.f_inv);
  const __m256d ct = _mm256_set1_pd(c.cos_tau);
  const __m256d st = _mm256_set1_pd(c.sin_tau);
  const __m256d ct_tt = _mm256_set1_pd(c.cos_tau * c.tan_tau);
  const __m256d sc = _mm256_set1_pd(c.sin_chi);
  const __m256d cc = _mm256_set1_pd(c.cos_chi);
  __m256d acc_f = _mm256_setzero_pd();
  __m256d acc_tau = _mm256_setzero_pd();
  __m256d acc_chi = _mm256_setzero_pd();
  __m256d acc_alpha = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d ri = _mm256_loadu_pd(r + i);
    const __m256d ui = _mm256_loadu_pd(u + i);
    const __m256d vi = _mm256_loadu_pd(v + i);
    const __m256d ai = _mm256_loadu_pd(a + i);
    const __m256d gi = _mm256_loadu_pd(g + i);
    const __m256d ti = _mm256_loadu_pd(t + i);
    const __m256d gvi = _mm256_loadu_pd(gv + i);

    const __m256d rf = _mm256_mul_pd(ri, f);
    const __m256d q = _mm256_add_pd(one, _mm256_mul_pd(rf, rf));
    const __m256d da_df =
        _mm256_div_pd(_mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(minus4, ri), rf), ai), q);
    const __m256d s = _mm256_sub_pd(_mm256_mul_pd(ui, sc), _mm256_mul_pd(vi, cc));
    const __m256d ds = _mm256_add_pd(_mm256_mul_pd(ui, cc), _mm256_mul_pd(vi, sc));
    const __m256d s2 = _mm256_mul_pd(s, s);
    const __m256d g_a = _mm256_mul_pd(_mm256_mul_pd(gvi, gi), ti);
    const __m256d g_t = _mm256_mul_pd(_mm256_mul_pd(gvi, ai), gi);

    acc_f = _mm256_add_pd(acc_f, _mm256_add_pd(_mm256_mul_pd(g_a, da_df),
                                               _mm256_mul_pd(g_t, _mm256_mul_pd(ct_tt, s2))));
    const __m256d dt_dtau = _mm256_sub_pd(_mm256_mul_pd(_mm256_mul_pd(f, s2), ct), st);
    acc_tau = _mm256_add_pd(acc_tau, _mm256_mul_pd(g_t, dt_dtau));
    const __m256d dt_dchi =
        _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(two, ct_tt), f), s), ds);
    acc_chi = _mm256_add_pd(acc_chi, _mm256_mul_pd(g_t, dt_dchi));
    acc_alpha = _mm256_sub_pd(acc_alpha,
                              _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(gvi, ai), ti), ri));
  }
  ParamPartialSums sums{hsum(acc_f), hsum(acc_tau), hsum(acc_chi), hsum(acc_alpha)};
  if (i < n) {
    const ParamPartialSums tail =
        scalar_table().param_partials(gv + i, u + i, v + i, r + i, a + i, g + i, t + i, n - i, c);
    sums.f_inv += tail.f_inv;
    sums.tau += tail.tau;
    sums.chi += tail.chi;
    sums.alpha += tail.alpha;
  }
  return sums;
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 * kLanes <= n; i += 2 * kLanes) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(x + i + kLanes),
                                             _mm256_loadu_pd(y + i + kLanes)));
  }
  for (; i + kLanes <= n; i += kLanes) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(y + i,
                     _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(a, _mm256_loadu_pd(x + i))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

constexpr KernelTable kAvx2{
    "avx2",           fields_avx2, mul_clamp_avx2, masked_product_avx2,
    param_partials_avx2, dot_avx2, axpy_avx2,
};

}  // namespace

const KernelTable* avx2_table() { return __builtin_cpu_supports("avx2") ? &kAvx2 : nullptr; }

}  // namespace ava::kernels

#else

namespace ava::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace ava::kernels

#endif
