#include "bss/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bss {

namespace {

double max_abs(const CMat& a) {
  double m = 0.0;
  const int n = a.dim();
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) m = std::max(m, std::abs(a(r, c)));
  return m;
}

// Determinant of the (n-1)x(n-1) matrix obtained by deleting one row and
// one column.
cdouble minor_det(const CMat& a, int drop_row, int drop_col) {
  const int n = a.dim();
  CMat sub(n - 1);
  int rr = 0;
  for (int r = 0; r < n; ++r) {
    if (r == drop_row) continue;
    int cc = 0;
    for (int c = 0; c < n; ++c) {
      if (c == drop_col) continue;
      sub(rr, cc) = a(r, c);
      ++cc;
    }
    ++rr;
  }
  return det(sub);
}

}  // namespace

cdouble det(const CMat& a) {
  const int n = a.dim();
  if (n == 0) return 1.0;
  if (n == 1) return a(0, 0);
  if (n == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  if (n == 3) {
    return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
           a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
           a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
  }
  // LU with partial pivoting.
  CMat lu = a;
  cdouble d = 1.0;
  for (int k = 0; k < n; ++k) {
    int pivot = k;
    double best = std::abs(lu(k, k));
    for (int r = k + 1; r < n; ++r) {
      const double mag = std::abs(lu(r, k));
      if (mag > best) {
        best = mag;
        pivot = r;
      }
    }
    if (best == 0.0) return 0.0;
    if (pivot != k) {
      for (int c = 0; c < n; ++c) std::swap(lu(k, c), lu(pivot, c));
      d = -d;
    }
    d *= lu(k, k);
    for (int r = k + 1; r < n; ++r) {
      const cdouble f = lu(r, k) / lu(k, k);
      for (int c = k + 1; c < n; ++c) lu(r, c) -= f * lu(k, c);
    }
  }
  return d;
}

CMat adjugate(const CMat& a) {
  const int n = a.dim();
  CMat adj(n);
  if (n == 1) {
    adj(0, 0) = 1.0;
    return adj;
  }
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      // adj(r, c) is the cofactor of a(c, r): minors keep this well defined
      // even when a itself is singular.
      const double sign = ((r + c) % 2 == 0) ? 1.0 : -1.0;
      adj(r, c) = sign * minor_det(a, c, r);
    }
  }
  return adj;
}

CMat inverse(const CMat& a) {
  const int n = a.dim();
  const double scale = max_abs(a);
  if (scale == 0.0) throw SingularMatrix("inverse: zero matrix");
  CMat work = a;
  CMat inv = CMat::identity(n);
  for (int k = 0; k < n; ++k) {
    int pivot = k;
    double best = std::abs(work(k, k));
    for (int r = k + 1; r < n; ++r) {
      const double mag = std::abs(work(r, k));
      if (mag > best) {
        best = mag;
        pivot = r;
      }
    }
    if (best < 1e-13 * scale) throw SingularMatrix("inverse: pivot collapsed");
    if (pivot != k) {
      for (int c = 0; c < n; ++c) {
        std::swap(work(k, c), work(pivot, c));
        std::swap(inv(k, c), inv(pivot, c));
      }
    }
    const cdouble p = work(k, k);
    for (int c = 0; c < n; ++c) {
      work(k, c) /= p;
      inv(k, c) /= p;
    }
    for (int r = 0; r < n; ++r) {
      if (r == k) continue;
      const cdouble f = work(r, k);
      if (f == cdouble(0.0)) continue;
      for (int c = 0; c < n; ++c) {
        work(r, c) -= f * work(k, c);
        inv(r, c) -= f * inv(k, c);
      }
    }
  }
  return inv;
}

CVec solve(const CMat& a, const CVec& b) {
  const int n = a.dim();
  const double scale = max_abs(a);
  if (scale == 0.0) throw SingularMatrix("solve: zero matrix");
  CMat work = a;
  CVec x = b;
  for (int k = 0; k < n; ++k) {
    int pivot = k;
    double best = std::abs(work(k, k));
    for (int r = k + 1; r < n; ++r) {
      const double mag = std::abs(work(r, k));
      if (mag > best) {
        best = mag;
        pivot = r;
      }
    }
    if (best < 1e-13 * scale) throw SingularMatrix("solve: pivot collapsed");
    if (pivot != k) {
      for (int c = k; c < n; ++c) std::swap(work(k, c), work(pivot, c));
      std::swap(x[k], x[pivot]);
    }
    for (int r = k + 1; r < n; ++r) {
      const cdouble f = work(r, k) / work(k, k);
      if (f == cdouble(0.0)) continue;
      for (int c = k; c < n; ++c) work(r, c) -= f * work(k, c);
      x[r] -= f * x[k];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    cdouble acc = x[r];
    for (int c = r + 1; c < n; ++c) acc -= work(r, c) * x[c];
    x[r] = acc / work(r, r);
  }
  return x;
}

CMat hermitian_outer(const CVec& x) {
  const int n = static_cast<int>(x.size());
  CMat out(n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) out(r, c) = x[r] * std::conj(x[c]);
  return out;
}

CMat matmul(const CMat& a, const CMat& b) {
  const int n = a.dim();
  CMat out(n);
  for (int r = 0; r < n; ++r) {
    for (int k = 0; k < n; ++k) {
      const cdouble f = a(r, k);
      if (f == cdouble(0.0)) continue;
      for (int c = 0; c < n; ++c) out(r, c) += f * b(k, c);
    }
  }
  return out;
}

CVec matvec(const CMat& a, const CVec& x) {
  const int n = a.dim();
  CVec out(n, 0.0);
  for (int r = 0; r < n; ++r) {
    cdouble acc = 0.0;
    for (int c = 0; c < n; ++c) acc += a(r, c) * x[c];
    out[r] = acc;
  }
  return out;
}

cdouble dot_h(const CVec& x, const CVec& y) {
  cdouble acc = 0.0;
  for (size_t k = 0; k < x.size(); ++k) acc += std::conj(x[k]) * y[k];
  return acc;
}

CMat hermitian(const CMat& a) {
  const int n = a.dim();
  CMat out(n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) out(r, c) = std::conj(a(c, r));
  return out;
}

void hermitian_eig(const CMat& a, std::vector<double>& values, CMat& vectors) {
  const int n = a.dim();
  // Work on the Hermitian average so tiny asymmetries cannot drift.
  CMat w(n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) w(r, c) = 0.5 * (a(r, c) + std::conj(a(c, r)));
  CMat v = CMat::identity(n);

  double frob = 0.0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) frob += std::norm(w(r, c));
  frob = std::sqrt(frob);
  const double tol = 1e-15 * std::max(frob, 1e-300);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(w(p, q)));
    if (off <= tol) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const cdouble apq = w(p, q);
        const double mag = std::abs(apq);
        if (mag <= tol) continue;
        const double app = w(p, p).real();
        const double aqq = w(q, q).real();
        const cdouble phase = apq / mag;
        // tan(2 theta) = 2|apq| / (app - aqq), stable small-angle root.
        const double tau = (app - aqq) / (2.0 * mag);
        const double t = (tau >= 0.0)
                             ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                             : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // Column rotation by U, then row rotation by U^H, with
        // U(p,p)=c, U(p,q)=-s*phase, U(q,p)=s*conj(phase), U(q,q)=c.
        for (int k = 0; k < n; ++k) {
          const cdouble wkp = w(k, p), wkq = w(k, q);
          w(k, p) = c * wkp + s * std::conj(phase) * wkq;
          w(k, q) = -s * phase * wkp + c * wkq;
        }
        for (int k = 0; k < n; ++k) {
          const cdouble wpk = w(p, k), wqk = w(q, k);
          w(p, k) = c * wpk + s * phase * wqk;
          w(q, k) = -s * std::conj(phase) * wpk + c * wqk;
        }
        for (int k = 0; k < n; ++k) {
          const cdouble vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp + s * std::conj(phase) * vkq;
          v(k, q) = -s * phase * vkp + c * vkq;
        }
        w(p, q) = 0.0;
        w(q, p) = 0.0;
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    return w(i, i).real() > w(j, j).real();
  });
  values.assign(n, 0.0);
  vectors = CMat(n);
  for (int c = 0; c < n; ++c) {
    values[c] = w(order[c], order[c]).real();
    for (int r = 0; r < n; ++r) vectors(r, c) = v(r, order[c]);
  }
}

CMat weighted_scatter(const cdouble* cells, int count, int dim,
                      const double* weights, int weight_stride,
                      double weight_offset) {
  CMat s(dim);
  for (int t = 0; t < count; ++t) {
    const cdouble* c = cells + static_cast<size_t>(t) * dim;
    const double inv = 1.0 / (weights[static_cast<size_t>(t) * weight_stride] +
                              weight_offset);
    for (int a = 0; a < dim; ++a) {
      s(a, a) += std::norm(c[a]) * inv;
      for (int b = a + 1; b < dim; ++b) s(a, b) += c[a] * std::conj(c[b]) * inv;
    }
  }
  const double scale = 1.0 / count;
  for (int a = 0; a < dim; ++a) {
    s(a, a) = cdouble(std::real(s(a, a)) * scale, 0.0);
    for (int b = a + 1; b < dim; ++b) {
      s(a, b) *= scale;
      s(b, a) = std::conj(s(a, b));
    }
  }
  return s;
}

CVec ip_direction(const CMat& q_mat, const CMat& d_mat, int row) {
  const int n = q_mat.dim();
  CVec rhs(n, 0.0);
  rhs[row] = 1.0;
  return solve(matmul(q_mat, d_mat), rhs);
}

void ip_row_update(CMat& q_mat, const CMat& d_mat, int row) {
  const int n = q_mat.dim();
  CVec u = ip_direction(q_mat, d_mat, row);
  const double energy = std::real(dot_h(u, matvec(d_mat, u)));
  if (!(energy > 0.0) || !std::isfinite(energy))
    throw SingularMatrix("ip_row_update: direction has no positive energy");
  const double nrm = std::sqrt(energy);
  for (int c = 0; c < n; ++c) q_mat(row, c) = std::conj(u[c] / nrm);
}

}  // namespace bss
