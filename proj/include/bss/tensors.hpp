#pragma once

#include <cstddef>
#include <vector>

namespace bss {

// Dense row-major real matrix. Plain storage, no algebra; the nonnegative
// factor updates only ever need element access and contiguous rows.
struct RealMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  RealMatrix() = default;
  RealMatrix(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c) {}

  double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  double* row(int r) { return v.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return v.data() + static_cast<size_t>(r) * cols; }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }
};

// Dense real rank-3 tensor, last index fastest.
struct Tensor3 {
  int n0 = 0, n1 = 0, n2 = 0;
  std::vector<double> v;

  Tensor3() = default;
  Tensor3(int a, int b, int c)
      : n0(a), n1(b), n2(c), v(static_cast<size_t>(a) * b * c) {}

  double& at(int a, int b, int c) {
    return v[(static_cast<size_t>(a) * n1 + b) * n2 + c];
  }
  double at(int a, int b, int c) const {
    return v[(static_cast<size_t>(a) * n1 + b) * n2 + c];
  }
  // Contiguous slice over the last index.
  double* line(int a, int b) {
    return v.data() + (static_cast<size_t>(a) * n1 + b) * n2;
  }
  const double* line(int a, int b) const {
    return v.data() + (static_cast<size_t>(a) * n1 + b) * n2;
  }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }
};

}  // namespace bss
