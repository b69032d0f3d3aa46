#pragma once

#include <cstdint>
#include <vector>

#include "bss/linalg.hpp"
#include "bss/rng.hpp"
#include "bss/signal.hpp"
#include "bss/tensors.hpp"
#include "bss/trace.hpp"

namespace bss {

// Floor applied to every nonnegative factor and to modelled variances so the
// inverse-variance weights stay finite.
inline constexpr double kVarianceFloor = 1e-12;

// Stream index used with derive_seed when a pipeline runs this solver as a
// warm-start stage: the pre-run draws from its own derived stream so the
// caller's main seed stream is left untouched.
inline constexpr std::uint64_t kIlrmaSeedStream = 101;

// Per-frequency demixing matrices, one square matrix per bin. Row n of w[i]
// holds the conjugated separation vector for source n, so the separated cell
// is simply y_ij = w[i] * x_ij.
struct DemixingSet {
  std::vector<CMat> w;
};

// Low-rank nonnegative variance model with a private basis/activation pair
// per source: the modelled variance of source n at (bin i, frame j) is row i
// of basis[n] dotted with column j of activation[n], floored away from zero.
struct IlrmaSourceModel {
  std::vector<RealMatrix> basis;       // source n: bins x rank
  std::vector<RealMatrix> activation;  // source n: rank x frames
};

// Factors drawn i.i.d. uniform on [0.1, 1).
IlrmaSourceModel init_ilrma_model(int sources, int bins, int frames,
                                  int rank_per_source, Rng& rng);

// Floored basis*activation product for one source, bins x frames.
RealMatrix model_variance(const IlrmaSourceModel& model, int source);

// y_ij = W_i x_ij for every cell. Output channel n is the estimate of
// source n.
Spectrogram apply_demixing(const DemixingSet& demixing, const Spectrogram& x);

// Squared magnitudes rearranged as (source, bin, frame) for the nonnegative
// model updates.
Tensor3 source_power(const Spectrogram& separated);

// Negative log-likelihood (constants dropped): per-cell power over modelled
// variance plus its log, minus twice the frame count times log |det W_i|.
// Throws SingularDemixing when any |det W_i| is zero.
double ilrma_cost(const Spectrogram& x, const DemixingSet& demixing,
                  const IlrmaSourceModel& model);

// One multiplicative Itakura-Saito update of every basis entry, then (after
// refreshing the modelled variances) every activation entry. Nonincreasing
// in the Itakura-Saito divergence between `power` and the model.
void update_source_model_is_nmf(IlrmaSourceModel& model, const Tensor3& power);

// One iterative-projection sweep over every bin and source: each row of W_i
// is replaced with the minimizer of the cost restricted to that row, using
// the inverse-variance weighted scatter of the observations. variance_offset
// is added to every modelled variance when building the weights; callers
// retry once with a small positive offset after SingularUpdate.
void update_demixing_ip(DemixingSet& demixing, const Spectrogram& x,
                        const IlrmaSourceModel& model,
                        double variance_offset = 0.0);

// Rescales row n of each W_i by [W_i^{-1}](reference_channel, n), fixing the
// per-source scale ambiguity so that the separated signals sum to the
// mixture at the reference channel. Throws SingularDemixing when a W_i is
// not invertible. reference_channel is zero-based.
void project_back(DemixingSet& demixing, int reference_channel);

struct IlrmaResult {
  DemixingSet demixing;
  Spectrogram separated;
  IterationTrace trace;
};

// Full pipeline: identity demixing plus seeded random factors, then
// `iterations` sweeps of model update followed by demixing update. When
// scale_to_reference is set the demixing set is projected back onto the
// reference channel before the separated tensor is produced.
IlrmaResult run_ilrma(const Spectrogram& x, int iterations = 50,
                      int rank_per_source = 10, std::uint64_t seed = 0,
                      bool scale_to_reference = true,
                      int reference_channel = 0);

}  // namespace bss
