#pragma once

// Independent reference implementations used to pin down numeric expectations.
// Everything here is written the slow, obvious way on purpose: different
// algorithm, different code path, same mathematical definition as the library
// routine it checks.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "bss/linalg.hpp"

namespace oracle {

// Determinant by full Laplace expansion along the first row. Exponential in
// the dimension, which is fine for the matrix sizes the library handles.
inline bss::cdouble det(const bss::CMat& a) {
  const int n = a.dim();
  if (n == 1) return a(0, 0);
  bss::cdouble acc = 0.0;
  for (int c = 0; c < n; ++c) {
    bss::CMat sub(n - 1);
    for (int r = 1; r < n; ++r) {
      int cc = 0;
      for (int k = 0; k < n; ++k) {
        if (k == c) continue;
        sub(r - 1, cc) = a(r, k);
        ++cc;
      }
    }
    const double sign = (c % 2 == 0) ? 1.0 : -1.0;
    acc += sign * a(0, c) * oracle::det(sub);
  }
  return acc;
}

// Plain O(n^2) DFT, the textbook sum.
inline std::vector<std::complex<double>> dft(
    const std::vector<std::complex<double>>& x) {
  const size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  const double step = -2.0 * 3.14159265358979323846 / static_cast<double>(n);
  for (size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (size_t t = 0; t < n; ++t) {
      const double ang = step * static_cast<double>(k * t % n);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

// Least-squares projection score: project `est` onto the span of `ref`
// delayed by 0..taps-1, then 10 log10(target / residual). The Gram system
// is assembled entry by entry with direct dot products and solved by
// Gaussian elimination with partial pivoting -- no shared code with the
// library's Toeplitz/Cholesky path.
inline double sdr(const std::vector<double>& est, const std::vector<double>& ref,
                  int taps) {
  const int len = static_cast<int>(ref.size());
  const int span = len + taps - 1;
  auto ref_at = [&](int t) { return (t >= 0 && t < len) ? ref[t] : 0.0; };
  auto est_at = [&](int t) {
    return (t >= 0 && t < static_cast<int>(est.size())) ? est[t] : 0.0;
  };

  std::vector<std::vector<double>> g(taps, std::vector<double>(taps, 0.0));
  std::vector<double> c(taps, 0.0);
  for (int a = 0; a < taps; ++a) {
    for (int b = 0; b < taps; ++b) {
      double acc = 0.0;
      for (int t = 0; t < span; ++t) acc += ref_at(t - a) * ref_at(t - b);
      g[a][b] = acc;
    }
    double acc = 0.0;
    for (int t = 0; t < span; ++t) acc += est_at(t) * ref_at(t - a);
    c[a] = acc;
  }
  const double load = 1e-10 * g[0][0];
  for (int a = 0; a < taps; ++a) g[a][a] += load;

  // Gaussian elimination with partial pivoting.
  std::vector<double> h = c;
  for (int k = 0; k < taps; ++k) {
    int pivot = k;
    for (int r = k + 1; r < taps; ++r)
      if (std::fabs(g[r][k]) > std::fabs(g[pivot][k])) pivot = r;
    std::swap(g[k], g[pivot]);
    std::swap(h[k], h[pivot]);
    if (g[k][k] == 0.0) throw std::runtime_error("oracle sdr: singular gram");
    for (int r = k + 1; r < taps; ++r) {
      const double f = g[r][k] / g[k][k];
      for (int col = k; col < taps; ++col) g[r][col] -= f * g[k][col];
      h[r] -= f * h[k];
    }
  }
  for (int r = taps - 1; r >= 0; --r) {
    double acc = h[r];
    for (int col = r + 1; col < taps; ++col) acc -= g[r][col] * h[col];
    h[r] = acc / g[r][r];
  }

  double starget = 0.0, enoise = 0.0;
  for (int t = 0; t < span; ++t) {
    double fit = 0.0;
    for (int a = 0; a < taps; ++a) fit += h[a] * ref_at(t - a);
    const double err = est_at(t) - fit;
    starget += fit * fit;
    enoise += err * err;
  }
  if (enoise <= 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(starget / enoise));
}

// Slope of a straight-line fit of y against t (ordinary least squares).
inline double fit_slope(const std::vector<double>& t,
                        const std::vector<double>& y) {
  const size_t n = t.size();
  double mt = 0.0, my = 0.0;
  for (size_t k = 0; k < n; ++k) {
    mt += t[k];
    my += y[k];
  }
  mt /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (size_t k = 0; k < n; ++k) {
    num += (t[k] - mt) * (y[k] - my);
    den += (t[k] - mt) * (t[k] - mt);
  }
  return num / den;
}

}  // namespace oracle
