#pragma once

// Data-parallel inner loops of the vignetting model and the reference
// classifier. Each kernel has a portable scalar reference implementation and
// optional vector variants (AVX2 on x86-64, NEON on AArch64) chosen once at
// runtime. Element-wise kernels are bit-identical across variants; the
// reductions differ only in summation order.

#include <cstddef>
#include <string_view>
#include <vector>

namespace ava::kernels {

/// Scalars shared by every pixel when building the vignetting fields.
struct FieldCoeffs {
  double f_inv = 0.0;
  double cos_tau = 1.0;
  double sin_tau = 0.0;
  double tan_tau = 0.0;
  double sin_chi = 0.0;
  double cos_chi = 1.0;
};

/// Per-parameter sums of the chain rule through the illumination, tilt and
/// (physical) geometry fields.
struct ParamPartialSums {
  double f_inv = 0.0;
  double tau = 0.0;
  double chi = 0.0;
  double alpha = 0.0;  // sum of dJ/dG * dG0/dalpha = -R
};

struct KernelTable {
  const char* name;

  // a = (1 + (r f)^2)^-2, t = cos_tau (1 + tan_tau f s^2) with
  // s = u sin_chi - v cos_chi, v_out = a * g * t.
  void (*fields)(const double* u, const double* v, const double* r, const double* g, std::size_t n,
                 const FieldCoeffs& c, double* a, double* t, double* v_out);

  // out = clamp(x * s, 0, 1)
  void (*mul_clamp)(const double* x, const double* s, std::size_t n, double* out);

  // out = grad * x where 0 <= x * s <= 1, else 0
  void (*masked_product)(const double* grad, const double* x, const double* s, std::size_t n,
                         double* out);

  // Given gv = dJ/dV per pixel, accumulates dJ/d{f_inv, tau, chi} and the
  // physical-geometry alpha path.
  ParamPartialSums (*param_partials)(const double* gv, const double* u, const double* v,
                                     const double* r, const double* a, const double* g,
                                     const double* t, std::size_t n, const FieldCoeffs& c);

  double (*dot)(const double* x, const double* y, std::size_t n);

  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

const KernelTable& scalar_table();

/// nullptr when the variant is not compiled in or the CPU lacks the feature.
const KernelTable* avx2_table();
const KernelTable* neon_table();

/// Every table usable on this machine, scalar first.
std::vector<const KernelTable*> available_tables();

/// The table used by the library. Picks the widest supported variant unless
/// the AVA_SIMD environment variable names another one ("scalar", "avx2",
/// "neon"). Resolved once per process.
const KernelTable& active();

}  // namespace ava::kernels
