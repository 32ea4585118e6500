#include "ava/kernels.hpp"

namespace ava::kernels {
namespace {

void fields_scalar(const double* u, const double* v, const double* r, const double* g,
                   std::size_t n, const FieldCoeffs& c, double* a, double* t, double* v_out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double rf = r[i] * c.f_inv;
    const double q = 1.0 + rf * rf;
    const double ai = 1.0 / (q * q);
    const double s = u[i] * c.sin_chi - v[i] * c.cos_chi;
    const double ti = c.cos_tau * (1.0 + c.tan_tau * c.f_inv * (s * s));
    a[i] = ai;
    t[i] = ti;
    v_out[i] = ai * g[i] * ti;
  }
}

void mul_clamp_scalar(const double* x, const double* s, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double y = x[i] * s[i];
    out[i] = y < 0.0 ? 0.0 : (y > 1.0 ? 1.0 : y);
  }
}

void masked_product_scalar(const double* grad, const double* x, const double* s, std::size_t n,
                           double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double y = x[i] * s[i];
    out[i] = (y >= 0.0 && y <= 1.0) ? grad[i] * x[i] : 0.0;
  }
}

ParamPartialSums param_partials_scalar(const double* gv, const double* u, const double* v,
                                       const double* r, const double* a, const double* g,
                                       const double* t, std::size_t n, const FieldCoeffs& c) {
  ParamPartialSums sums;
  const double ct_tt = c.cos_tau * c.tan_tau;
  for (std::size_t i = 0; i < n; ++i) {
    const double rf = r[i] * c.f_inv;
    const double q = 1.0 + rf * rf;
    const double da_df = -4.0 * r[i] * rf * a[i] / q;
    const double s = u[i] * c.sin_chi - v[i] * c.cos_chi;
    const double ds_dchi = u[i] * c.cos_chi + v[i] * c.sin_chi;
    const double s2 = s * s;
    const double g_a = gv[i] * g[i] * t[i];
    const double g_t = gv[i] * a[i] * g[i];
    sums.f_inv += g_a * da_df + g_t * (ct_tt * s2);
    sums.tau += g_t * (c.f_inv * s2 * c.cos_tau - c.sin_tau);
    sums.chi += g_t * (2.0 * ct_tt * c.f_inv * s * ds_dchi);
    sums.alpha -= gv[i] * a[i] * t[i] * r[i];
  }
  return sums;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

constexpr KernelTable kScalar{
    "scalar",          fields_scalar, mul_clamp_scalar, masked_product_scalar,
    param_partials_scalar, dot_scalar, axpy_scalar,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace ava::kernels
