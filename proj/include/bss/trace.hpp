#pragma once

#include <vector>

namespace bss {

// Per-iteration optimizer log. Row 0 records the starting state; row l the
// state after iteration l. All three vectors share one length. `lambda`
// carries the regularizer weight in effect for the row (zero for methods
// without one) and `elapsed_seconds` counts wall time since the iteration
// loop started, so consecutive differences give per-iteration cost.
struct IterationTrace {
  std::vector<double> cost;
  std::vector<double> lambda;
  std::vector<double> elapsed_seconds;

  void add(double c, double lam, double secs) {
    cost.push_back(c);
    lambda.push_back(lam);
    elapsed_seconds.push_back(secs);
  }
};

}  // namespace bss
