// AArch64 Advanced SIMD variant. Built with -ffp-contract=off so multiplies
// and adds are not fused, matching the scalar reference rounding.

#include "ava/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

namespace ava::kernels {
namespace {

constexpr std::size_t kLanes = 2;

void fields_neon(const double* u, const double* v, const double* r, const double* g,
                 std::size_t n, const FieldCoeffs& c, double* a, double* t, double* v_out) {
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t f = vdupq_n_f64(c.f_inv);
  const float64x2_t ct = vdupq_n_f64(c.cos_tau);
  const float64x2_t tt = vdupq_n_f64(c.tan_tau);
  const float64x2_t sc = vdupq_n_f64(c.sin_chi);
  const float64x2_t cc = vdupq_n_f64(c.cos_chi);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const float64x2_t rf = vmulq_f64(vld1q_f64(r + i), f);
    const float64x2_t q = vaddq_f64(one, vmulq_f64(rf, rf));
    const float64x2_t ai = vdivq_f64(one, vmulq_f64(q, q));
    const float64x2_t s = vsubq_f64(vmulq_f64(vld1q_f64(u + i), sc), vmulq_f64(vld1q_f64(v + i), cc));
    const float64x2_t inner = vmulq_f64(vmulq_f64(tt, f), vmulq_f64(s, s));
    const float64x2_t ti = vmulq_f64(ct, vaddq_f64(one, inner));
    vst1q_f64(a + i, ai);
    vst1q_f64(t + i, ti);
    vst1q_f64(v_out + i, vmulq_f64(vmulq_f64(ai, vld1q_f64(g + i)), ti));
  }
  if (i < n) scalar_table().fields(u + i, v + i, r + i, g + i, n - i, c, a + i, t + i, v_out + i);
}

void mul_clamp_neon(const double* x, const double* s, std::size_t n, double* out) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  const float64x2_t one = vdupq_n_f64(1.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    float64x2_t y = vmulq_f64(vld1q_f64(x + i), vld1q_f64(s + i));
    y = vbslq_f64(vcgtq_f64(y, one), one, y);
    y = vbslq_f64(vcltq_f64(y, zero), zero, y);
    vst1q_f64(out + i, y);
  }
  if (i < n) scalar_table().mul_clamp(x + i, s + i, n - i, out + i);
}

void masked_product_neon(const double* grad, const double* x, const double* s, std::size_t n,
                         double* out) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  const float64x2_t one = vdupq_n_f64(1.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const float64x2_t xi = vld1q_f64(x + i);
    const float64x2_t y = vmulq_f64(xi, vld1q_f64(s + i));
    const uint64x2_t keep = vandq_u64(vcgeq_f64(y, zero), vcleq_f64(y, one));
    const float64x2_t prod = vmulq_f64(vld1q_f64(grad + i), xi);
    vst1q_f64(out + i, vbslq_f64(keep, prod, zero));
  }
  if (i < n) scalar_table().masked_product(grad + i, x + i, s + i, n - i, out + i);
}

ParamPartialSums param_partials_neon(const double* gv, const double* u, const double* v,
                                     const double* r, const double* a, const double* g,
                                     const double* t, std::size_t n, const FieldCoeffs& c) {
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t two = vdupq_n_f64(2.0);
  const float64x2_t minus4 = vdupq_n_f64(-4.0);
  const float64x2_t f = vdupq_n_f64(c.f_inv);
  const float64x2_t ct = vdupq_n_f64(c.cos_tau);
  const float64x2_t st = vdupq_n_f64(c.sin_tau);
  const float64x2_t ct_tt = vdupq_n_f64(c.cos_tau * c.tan_tau);
  const float64x2_t sc = vdupq_n_f64(c.sin_chi);
  const float64x2_t cc = vdupq_n_f64(c.cos_chi);
  float64x2_t acc_f = vdupq_n_f64(0.0);
  float64x2_t acc_tau = vdupq_n_f64(0.0);
  float64x2_t acc_chi = vdupq_n_f64(0.0);
  float64x2_t acc_alpha = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const float64x2_t ri = vld1q_f64(r + i);
    const float64x2_t ui = vld1q_f64(u + i);
    const float64x2_t vi = vld1q_f64(v + i);
    const float64x2_t ai = vld1q_f64(a + i);
    const float64x2_t gi = vld1q_f64(g + i);
    const float64x2_t ti = vld1q_f64(t + i);
    const float64x2_t gvi = vld1q_f64(gv + i);

    const float64x2_t rf = vmulq_f64(ri, f);
    const float64x2_t q = vaddq_f64(one, vmulq_f64(rf, rf));
    const float64x2_t da_df = vdivq_f64(vmulq_f64(vmulq_f64(vmulq_f64(minus4, ri), rf), ai), q);
    const float64x2_t s = vsubq_f64(vmulq_f64(ui, sc), vmulq_f64(vi, cc));
    const float64x2_t ds = vaddq_f64(vmulq_f64(ui, cc), vmulq_f64(vi, sc));
    const float64x2_t s2 = vmulq_f64(s, s);
    const float64x2_t g_a = vmulq_f64(vmulq_f64(gvi, gi), ti);
    const float64x2_t g_t = vmulq_f64(vmulq_f64(gvi, ai), gi);

    acc_f = vaddq_f64(acc_f, vaddq_f64(vmulq_f64(g_a, da_df), vmulq_f64(g_t, vmulq_f64(ct_tt, s2))));
    acc_tau = vaddq_f64(acc_tau, vmulq_f64(g_t, vsubq_f64(vmulq_f64(vmulq_f64(f, s2), ct), st)));
    const float64x2_t dt_dchi = vmulq_f64(vmulq_f64(vmulq_f64(vmulq_f64(two, ct_tt), f), s), ds);
    acc_chi = vaddq_f64(acc_chi, vmulq_f64(g_t, dt_dchi));
    acc_alpha = vsubq_f64(acc_alpha, vmulq_f64(vmulq_f64(vmulq_f64(gvi, ai), ti), ri));
  }
  ParamPartialSums sums{vaddvq_f64(acc_f), vaddvq_f64(acc_tau), vaddvq_f64(acc_chi),
                        vaddvq_f64(acc_alpha)};
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

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  }
  double total = vaddvq_f64(acc);
  for (; i < n; ++i) total += x[i] * y[i];
  return total;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(a, vld1q_f64(x + i))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

constexpr KernelTable kNeon{
    "neon",           fields_neon, mul_clamp_neon, masked_product_neon,
    param_partials_neon, dot_neon, axpy_neon,
};

}  // namespace

const KernelTable* neon_table() { return &kNeon; }

}  // namespace ava::kernels

#else

namespace ava::kernels {
const KernelTable* neon_table() { return nullptr; }
}  // namespace ava::kernels

#endif
