#pragma once

#include <vector>

#include "bss/mixsim.hpp"

namespace bss {

// Result of matching N estimates against N references.
struct SdrReport {
  // SDR per reference index, under the chosen assignment.
  std::vector<double> per_source_db;
  // permutation[n] = index of the estimate assigned to reference n.
  std::vector<int> permutation;
  double mean_db = 0.0;
  // Filled by sdr_improvement: mean_db minus the mixture's mean SDR.
  double mean_improvement_db = 0.0;
};

// Projection-based source-to-distortion ratio. The estimate is projected
// onto the span of the reference and its delays up to filter_taps - 1 (the
// allowed-distortion filter); SDR = 10 log10(target / residual), capped at
// 100 dB. The Toeplitz normal equations get 1e-10 diagonal loading and a
// Cholesky solve. Throws SilentReference for an all-zero reference and
// LengthMismatch when lengths differ or are shorter than filter_taps.
double sdr(const std::vector<double>& estimate,
           const std::vector<double>& reference, int filter_taps = 512);

// Exhaustive best-permutation matching (N <= 4). Picks the assignment with
// the highest mean SDR.
SdrReport best_permutation_sdr(const std::vector<std::vector<double>>& estimates,
                               const std::vector<std::vector<double>>& references,
                               int filter_taps = 512);

// Mean SDR improvement of the estimates over the unprocessed mixture:
// best-permutation SDR against the ground-truth images at the reference
// channel, minus the same score with the mixture's reference channel
// standing in for every estimate.
SdrReport sdr_improvement(const MixtureScene& scene,
                          const std::vector<std::vector<double>>& estimates,
                          int reference_channel, int filter_taps = 512);

}  // namespace bss
