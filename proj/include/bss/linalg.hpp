#pragma once

#include <complex>
#include <vector>

#include "bss/errors.hpp"

namespace bss {

using cdouble = std::complex<double>;
using CVec = std::vector<cdouble>;

// Dense square complex matrix, row major. Everything in this library works
// on channel-count-sized matrices (2..8), so the algorithms below favour
// exactness and clarity over blocking or vectorized kernels.
class CMat {
 public:
  CMat() = default;
  explicit CMat(int dim) : dim_(dim), a_(static_cast<size_t>(dim) * dim) {}

  static CMat identity(int dim) {
    CMat e(dim);
    for (int i = 0; i < dim; ++i) e(i, i) = 1.0;
    return e;
  }

  int dim() const { return dim_; }

  cdouble& operator()(int r, int c) { return a_[static_cast<size_t>(r) * dim_ + c]; }
  cdouble operator()(int r, int c) const { return a_[static_cast<size_t>(r) * dim_ + c]; }

  cdouble* row(int r) { return a_.data() + static_cast<size_t>(r) * dim_; }
  const cdouble* row(int r) const { return a_.data() + static_cast<size_t>(r) * dim_; }

  cdouble* data() { return a_.data(); }
  const cdouble* data() const { return a_.data(); }

 private:
  int dim_ = 0;
  std::vector<cdouble> a_;
};

// Determinant. Closed form up to dim 3, LU with partial pivoting above.
cdouble det(const CMat& a);

// Adjugate (transposed cofactor matrix), satisfying A adj(A) = det(A) I.
// Built from minors, so it stays finite for singular input.
CMat adjugate(const CMat& a);

// Inverse by Gauss-Jordan with partial pivoting. Throws SingularMatrix when
// a pivot falls below 1e-13 times the largest entry magnitude.
CMat inverse(const CMat& a);

// Solves A x = b. Same pivoting and failure contract as inverse().
CVec solve(const CMat& a, const CVec& b);

// x y^H outer product helpers.
CMat hermitian_outer(const CVec& x);

CMat matmul(const CMat& a, const CMat& b);
CVec matvec(const CMat& a, const CVec& x);

// x^H y.
cdouble dot_h(const CVec& x, const CVec& y);

// Conjugate transpose.
CMat hermitian(const CMat& a);

// Eigendecomposition of a Hermitian matrix by the cyclic complex Jacobi
// method. Eigenvalues come back in descending order; columns of `vectors`
// are the matching orthonormal eigenvectors, so a = V diag(values) V^H.
void hermitian_eig(const CMat& a, std::vector<double>& values, CMat& vectors);

// Hermitian scatter matrix (1/count) * sum_t outer(c_t) / (w_t + offset)
// where c_t is the dim-sized cell at cells + t*dim and w_t is
// weights[t*weight_stride]. Built on the upper triangle with real diagonal
// and mirrored, so the result is exactly Hermitian regardless of rounding.
CMat weighted_scatter(const cdouble* cells, int count, int dim,
                      const double* weights, int weight_stride,
                      double weight_offset = 0.0);

// One row update for objectives of the form  q^H D q - log |det Q|^2  over a
// single row of Q (the classic iterative-projection step): the minimizer
// direction is u = (Q D)^{-1} e_row, rescaled so u^H D u = 1. The updated
// row stores the conjugate of the new q. Throws SingularMatrix if the solve
// collapses; callers wrap that into their own retry contract.
void ip_row_update(CMat& q_mat, const CMat& d_mat, int row);

// The direction u = (Q D)^{-1} e_row shared by ip_row_update and the
// coordinate-descent variant that adds a prior term.
CVec ip_direction(const CMat& q_mat, const CMat& d_mat, int row);

}  // namespace bss
