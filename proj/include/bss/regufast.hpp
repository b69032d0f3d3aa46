#pragma once

#include <cstdint>
#include <vector>

#include "bss/fastmnmf.hpp"
#include "bss/ilrma.hpp"
#include "bss/linalg.hpp"
#include "bss/signal.hpp"
#include "bss/tensors.hpp"
#include "bss/trace.hpp"

namespace bss {

enum class ScheduleMode { constant, geometric };

// Regularization-weight schedule over a run of total_iterations sweeps.
// constant mode holds lambda_const; geometric mode anneals from lambda0
// down to lambda_end.
struct RegularizerSchedule {
  ScheduleMode mode = ScheduleMode::geometric;
  double lambda_const = 1e-7;
  double lambda_end = 1e-13;
  double lambda0 = 1e-6;
  int total_iterations = 300;  // L
};

// Weight for sweep l, 0 <= l <= L. Geometric mode evaluates
// lambda0 * (lambda_end / lambda0)^(l / L) with the endpoints l = 0 and
// l = L returned exactly as lambda0 and lambda_end.
double lambda_at(const RegularizerSchedule& schedule, int l);

// Gaussian prior means for the diagonalizer rows, stored like a
// DiagonalizerSet: row m of q[i] is the conjugated mean vector. Taken
// verbatim from a demixing set, whose rows use the same convention.
struct PriorMeanSet {
  std::vector<CMat> q;
};

PriorMeanSet prior_from_demixing(const DemixingSet& demixing);

// Weighted scatter of one diagonal channel plus the prior's Tikhonov term:
// D = (1/J) sum_j x_ij x_ij^H / (d_ijm + offset) + lambda E. The scatter is
// exactly Hermitian by construction; lambda = 0 adds nothing, keeping the
// matrix bit-identical to the plain iterative-projection weights.
CMat build_D(const Spectrogram& x, const Tensor3& denominators, int bin,
             int channel, double lambda, double denominator_offset = 0.0);

// One vectorwise-coordinate-descent sweep over every bin and row. Per row:
// u = (Q D)^{-1} e_m, u^ = lambda D^{-1} q^, r = u^H D u, r^ = u^H D u^;
// the new row is u/sqrt(r) + u^ when |r^| < 1e-15, otherwise
// (r^/(2r)) (sqrt(1 + 4r/|r^|^2) - 1) u + u^. Rows are replaced in
// ascending order, each one feeding the next row's solve. With lambda = 0
// the step is the plain iterative projection, taken through the identical
// code path so the two optimizers coincide bit for bit.
void update_q_vcd(DiagonalizerSet& diag, const Spectrogram& x,
                  const SharedSourceModel& model, const PriorMeanSet& prior,
                  double lambda, double denominator_offset = 0.0);

// fastmnmf_cost plus the prior penalty J lambda sum_{i,m} ||q_im - q^_im||^2.
// lambda = 0 returns fastmnmf_cost exactly.
double regularized_cost(const Spectrogram& x, const DiagonalizerSet& diag,
                        const SharedSourceModel& model,
                        const PriorMeanSet& prior, double lambda);

struct RegufastConfig {
  int iterations = 300;
  int rank = 20;  // K, total basis count shared by all sources
  int ilrma_iterations = 50;
  int ilrma_rank_per_source = 10;
  RegularizerSchedule schedule;
  std::uint64_t seed = 0;
  bool emphasize_own_channel = false;
  int reference_channel = 0;
};

struct RegufastResult {
  DiagonalizerSet diagonalizer;
  SharedSourceModel model;
  PriorMeanSet prior;
  Spectrogram separated;
  IterationTrace trace;
};

// Full pipeline: a demixing pre-run (seeded from its own derived stream,
// with projection back applied) supplies the prior means; Q starts at the
// identity and the shared model from Rng(seed), exactly as in run_fastmnmf;
// per sweep l = 1..iterations the weight lambda_at(schedule, l) drives one
// VCD sweep followed by the four multiplicative updates. The trace records
// the regularized cost and the weight per sweep (row 0 holds the initial
// state under lambda_at(schedule, 0)); the pre-run counts as setup, not
// iteration time. The schedule's total_iterations is overridden with
// cfg.iterations so the annealing endpoint lands on the final sweep.
RegufastResult run_regularized_fastmnmf(const Spectrogram& x,
                                        const RegufastConfig& cfg);

}  // namespace bss
