#pragma once

#include <cmath>
#include <type_traits>
#include <utility>

#include "fdntune/common.hpp"

namespace fdntune {

// Dense partial-pivot LU on a small column-major n x n complex matrix, plus
// solves with the factored matrix and with its conjugate transpose. The
// adjoint solve is what the reverse-mode path through the per-bin linear
// systems uses. Every routine is templated on a compile-time size (NC > 0)
// with a dynamic fallback (NC == -1) so the hot per-bin loops fully unroll.

namespace lu_detail {

inline cdouble reciprocal(cdouble v) {
  return std::conj(v) / std::norm(v);
}

}  // namespace lu_detail

template <int NC>
inline bool lu_factor_impl(cdouble* a, int n_dyn, int* piv) {
  const int n = NC > 0 ? NC : n_dyn;
  for (int k = 0; k < n; ++k) {
    int p = k;
    double best = std::norm(a[k + k * n]);
    for (int i = k + 1; i < n; ++i) {
      const double v = std::norm(a[i + k * n]);
      if (v > best) {
        best = v;
        p = i;
      }
    }
    piv[k] = p;
    if (best == 0.0) return false;
    if (p != k)
      for (int j = 0; j < n; ++j) std::swap(a[k + j * n], a[p + j * n]);
    const cdouble inv_piv = lu_detail::reciprocal(a[k + k * n]);
    for (int i = k + 1; i < n; ++i) {
      const cdouble l = a[i + k * n] * inv_piv;
      a[i + k * n] = l;
      for (int j = k + 1; j < n; ++j) a[i + j * n] -= l * a[k + j * n];
    }
  }
  return true;
}

// Solve A x = rhs in place (rhs becomes x).
template <int NC>
inline void lu_solve_impl(const cdouble* lu, const int* piv, int n_dyn,
                          cdouble* x) {
  const int n = NC > 0 ? NC : n_dyn;
  for (int k = 0; k < n; ++k)
    if (piv[k] != k) std::swap(x[k], x[piv[k]]);
  for (int k = 1; k < n; ++k) {
    cdouble s = x[k];
    for (int j = 0; j < k; ++j) s -= lu[k + j * n] * x[j];
    x[k] = s;
  }
  for (int k = n - 1; k >= 0; --k) {
    cdouble s = x[k];
    for (int j = k + 1; j < n; ++j) s -= lu[k + j * n] * x[j];
    x[k] = s * lu_detail::reciprocal(lu[k + k * n]);
  }
}

// Solve A^H x = rhs in place. With P A = L U this is
// U^H w = rhs, L^H v = w, x = P^T v.
template <int NC>
inline void lu_solve_adjoint_impl(const cdouble* lu, const int* piv, int n_dyn,
                                  cdouble* x) {
  const int n = NC > 0 ? NC : n_dyn;
  for (int k = 0; k < n; ++k) {
    cdouble s = x[k];
    for (int j = 0; j < k; ++j) s -= std::conj(lu[j + k * n]) * x[j];
    x[k] = s * lu_detail::reciprocal(std::conj(lu[k + k * n]));
  }
  for (int k = n - 1; k >= 0; --k) {
    cdouble s = x[k];
    for (int j = k + 1; j < n; ++j) s -= std::conj(lu[j + k * n]) * x[j];
    x[k] = s;
  }
  for (int k = n - 1; k >= 0; --k)
    if (piv[k] != k) std::swap(x[k], x[piv[k]]);
}

inline bool lu_factor(cdouble* a, int n, int* piv) {
  return lu_factor_impl<-1>(a, n, piv);
}

inline void lu_solve(const cdouble* lu, const int* piv, int n, cdouble* x) {
  lu_solve_impl<-1>(lu, piv, n, x);
}

inline void lu_solve_adjoint(const cdouble* lu, const int* piv, int n,
                             cdouble* x) {
  lu_solve_adjoint_impl<-1>(lu, piv, n, x);
}

// Calls f with std::integral_constant<int, N> for small line counts so the
// inner solver loops unroll, or with -1 for the dynamic code path. Larger
// sizes stay dynamic; unrolling them bloats the kernels past the
// instruction cache.
template <class F>
inline decltype(auto) dispatch_lines(int n, F&& f) {
  switch (n) {
    case 1:
      return f(std::integral_constant<int, 1>{});
    case 2:
      return f(std::integral_constant<int, 2>{});
    case 3:
      return f(std::integral_constant<int, 3>{});
    case 4:
      return f(std::integral_constant<int, 4>{});
    case 5:
      return f(std::integral_constant<int, 5>{});
    case 6:
      return f(std::integral_constant<int, 6>{});
    case 7:
      return f(std::integral_constant<int, 7>{});
    case 8:
      return f(std::integral_constant<int, 8>{});
    default:
      return f(std::integral_constant<int, -1>{});
  }
}

}  // namespace fdntune
